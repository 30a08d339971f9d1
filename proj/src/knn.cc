#include <algorithm>
#include <numeric>

#include "tpis/error.h"
#include "tpis/json_util.h"
#include "tpis/learners.h"

namespace tpis {

KnnLearner::KnnLearner(LearnerSpec spec, Matrix x, std::vector<std::uint8_t> y)
    : Learner(std::move(spec), x.cols()),
      train_x_(std::move(x)),
      train_y_(std::move(y)),
      k_(static_cast<std::size_t>(this->spec().Get("k"))) {}

std::shared_ptr<const KnnLearner> KnnLearner::Fit(const LearnerSpec& spec, const Matrix& x,
                                                  std::vector<std::uint8_t> y) {
  return std::shared_ptr<const KnnLearner>(new KnnLearner(spec, x, std::move(y)));
}

double KnnLearner::Probability(std::span<const double> x) const {
  const std::size_t n = train_x_.rows();
  std::vector<double> dist(n);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    auto row = train_x_.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s += (row[c] - x[c]) * (row[c] - x[c]);
    dist[r] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t k = std::min(k_, n);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  std::size_t tb = 0;
  for (std::size_t i = 0; i < k; ++i) tb += train_y_[order[i]];
  return static_cast<double>(tb) / static_cast<double>(k);
}

nlohmann::json KnnLearner::ParamsToJson() const {
  return {{"x", MatrixToJson(train_x_)}, {"y", train_y_}};
}

std::shared_ptr<const KnnLearner> KnnLearner::FromJson(const LearnerSpec& spec, std::size_t d,
                                                       const nlohmann::json& params) {
  Matrix x = MatrixFromJson(params.at("x"));
  auto y = params.at("y").get<std::vector<std::uint8_t>>();
  if (x.cols() != d || x.rows() != y.size() || x.rows() == 0) {
    throw Error(ErrorCode::kArchiveError, "knn training set shape mismatch");
  }
  return std::shared_ptr<const KnnLearner>(new KnnLearner(spec, std::move(x), std::move(y)));
}

}  // namespace tpis
