#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpis/error.h"
#include "tpis/learners.h"

namespace tpis {
namespace {

// Cap used when a round classifies every row correctly.
constexpr double kMinRoundError = 1e-10;

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

double Vote(const Tree& stump, std::span<const double> x) {
  return stump.Predict(x) >= 0.5 ? 1.0 : -1.0;
}

}  // namespace

// --- AdaBoostLearner --------------------------------------------------------

AdaBoostLearner::AdaBoostLearner(LearnerSpec spec, std::size_t d, std::vector<Tree> stumps,
                                 std::vector<double> alphas, std::vector<double> errors)
    : Learner(std::move(spec), d),
      stumps_(std::move(stumps)),
      alphas_(std::move(alphas)),
      errors_(std::move(errors)) {}

std::shared_ptr<const AdaBoostLearner> AdaBoostLearner::Fit(const LearnerSpec& spec,
                                                            const Matrix& x,
                                                            std::span<const std::uint8_t> y) {
  const std::size_t n = x.rows();
  const auto rounds = static_cast<int>(spec.Get("rounds"));
  ClassificationTreeOptions options;
  options.max_depth = static_cast<int>(spec.Get("max_depth"));
  options.min_leaf = 1;
  const auto rows = AllRows(n);

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<Tree> stumps;
  std::vector<double> alphas, errors;
  std::vector<bool> wrong(n);
  for (int m = 0; m < rounds; ++m) {
    Tree stump = GrowClassificationTree(x, y, weights, rows, options, nullptr);
    double err = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      wrong[i] = (Vote(stump, x.row(i)) > 0) != (y[i] == 1);
      err += wrong[i] ? weights[i] : 0.0;
      total += weights[i];
    }
    err /= total;
    if (err >= 0.5) break;
    const bool perfect = err < kMinRoundError;
    err = std::max(err, kMinRoundError);
    const double alpha = std::log((1.0 - err) / err);
    stumps.push_back(std::move(stump));
    alphas.push_back(alpha);
    errors.push_back(err);
    if (perfect) break;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (wrong[i]) weights[i] *= std::exp(alpha);
      sum += weights[i];
    }
    for (double& w : weights) w /= sum;
  }
  return std::shared_ptr<const AdaBoostLearner>(new AdaBoostLearner(
      spec, x.cols(), std::move(stumps), std::move(alphas), std::move(errors)));
}

double AdaBoostLearner::Score(std::span<const double> x) const {
  double score = 0.0;
  for (std::size_t m = 0; m < stumps_.size(); ++m) score += alphas_[m] * Vote(stumps_[m], x);
  return score;
}

double AdaBoostLearner::Probability(std::span<const double> x) const { return Sigmoid(Score(x)); }

nlohmann::json AdaBoostLearner::ParamsToJson() const {
  nlohmann::json stumps = nlohmann::json::array();
  for (const auto& s : stumps_) stumps.push_back(s.ToJson());
  return {{"stumps", stumps}, {"alphas", alphas_}, {"errors", errors_}};
}

std::shared_ptr<const AdaBoostLearner> AdaBoostLearner::FromJson(const LearnerSpec& spec,
                                                                 std::size_t d,
                                                                 const nlohmann::json& params) {
  std::vector<Tree> stumps;
  for (const auto& s : params.at("stumps")) stumps.push_back(Tree::FromJson(s));
  auto alphas = params.at("alphas").get<std::vector<double>>();
  auto errors = params.at("errors").get<std::vector<double>>();
  if (alphas.size() != stumps.size() || errors.size() != stumps.size()) {
    throw Error(ErrorCode::kArchiveError, "adaboost round arrays disagree");
  }
  return std::shared_ptr<const AdaBoostLearner>(
      new AdaBoostLearner(spec, d, std::move(stumps), std::move(alphas), std::move(errors)));
}

// --- GbtLearner -------------------------------------------------------------

GbtLearner::GbtLearner(LearnerSpec spec, std::size_t d, double base, double rate,
                       std::vector<Tree> trees)
    : Learner(std::move(spec), d), base_score_(base), learning_rate_(rate), trees_(std::move(trees)) {}

std::shared_ptr<const GbtLearner> GbtLearner::Fit(const LearnerSpec& spec, const Matrix& x,
                                                  std::span<const std::uint8_t> y) {
  const std::size_t n = x.rows();
  const auto rounds = static_cast<int>(spec.Get("rounds"));
  const double rate = spec.Get("learning_rate");
  NewtonTreeOptions options;
  options.max_depth = static_cast<int>(spec.Get("max_depth"));
  options.min_leaf = static_cast<std::size_t>(spec.Get("min_leaf"));
  options.l2 = spec.Get("l2");

  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double base = std::log(pos / (static_cast<double>(n) - pos));
  std::vector<double> score(n, base), grad(n), hess(n);
  std::vector<Tree> trees;
  const auto rows = AllRows(n);
  for (int m = 0; m < rounds; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(score[i]);
      grad[i] = (y[i] ? 1.0 : 0.0) - p;
      hess[i] = p * (1.0 - p);
    }
    Tree tree = GrowNewtonTree(x, grad, hess, rows, options);
    for (std::size_t i = 0; i < n; ++i) score[i] += rate * tree.Predict(x.row(i));
    trees.push_back(std::move(tree));
  }
  return std::shared_ptr<const GbtLearner>(
      new GbtLearner(spec, x.cols(), base, rate, std::move(trees)));
}

double GbtLearner::RawScore(std::span<const double> x) const {
  double score = base_score_;
  for (const auto& t : trees_) score += learning_rate_ * t.Predict(x);
  return score;
}

double GbtLearner::Probability(std::span<const double> x) const { return Sigmoid(RawScore(x)); }

nlohmann::json GbtLearner::ParamsToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.ToJson());
  return {{"base_score", base_score_}, {"learning_rate", learning_rate_}, {"trees", trees}};
}

std::shared_ptr<const GbtLearner> GbtLearner::FromJson(const LearnerSpec& spec, std::size_t d,
                                                       const nlohmann::json& params) {
  std::vector<Tree> trees;
  for (const auto& t : params.at("trees")) trees.push_back(Tree::FromJson(t));
  return std::shared_ptr<const GbtLearner>(new GbtLearner(spec, d,
                                                          params.at("base_score").get<double>(),
                                                          params.at("learning_rate").get<double>(),
                                                          std::move(trees)));
}

}  // namespace tpis
