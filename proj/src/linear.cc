#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpis/error.h"
#include "tpis/learners.h"
#include "tpis/rng.h"

namespace tpis {
namespace {

double Softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double Dot(std::span<const double> w, std::span<const double> x) {
  return std::inner_product(w.begin(), w.end(), x.begin(), 0.0);
}

// Mean log loss of p = sigmoid(a m + b) against soft targets.
double PlattLoss(double a, double b, std::span<const double> m, std::span<const double> t) {
  double loss = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double z = a * m[i] + b;
    loss += Softplus(z) - t[i] * z;
  }
  return loss / static_cast<double>(m.size());
}

// Newton's method with step halving on the two Platt parameters.
std::pair<double, double> FitPlatt(std::span<const double> margins,
                                   std::span<const std::uint8_t> y) {
  const double pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double neg = static_cast<double>(y.size()) - pos;
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    target[i] = y[i] ? (pos + 1.0) / (pos + 2.0) : 1.0 / (neg + 2.0);
  }
  double a = 0.0;
  double b = std::log((pos + 1.0) / (neg + 1.0));
  double loss = PlattLoss(a, b, margins, target);
  for (int iter = 0; iter < 100; ++iter) {
    double ga = 0, gb = 0, haa = 1e-12, hab = 0, hbb = 1e-12;
    for (std::size_t i = 0; i < margins.size(); ++i) {
      const double p = Sigmoid(a * margins[i] + b);
      const double r = p - target[i];
      const double w = p * (1.0 - p);
      ga += r * margins[i];
      gb += r;
      haa += w * margins[i] * margins[i];
      hab += w * margins[i];
      hbb += w;
    }
    const double det = haa * hbb - hab * hab;
    if (std::abs(det) < 1e-300) break;
    const double da = (hbb * ga - hab * gb) / det;
    const double db = (haa * gb - hab * ga) / det;
    double step = 1.0;
    bool improved = false;
    while (step > 1e-10) {
      const double na = a - step * da;
      const double nb = b - step * db;
      const double nl = PlattLoss(na, nb, margins, target);
      if (nl < loss) {
        improved = loss - nl > 1e-15;
        a = na;
        b = nb;
        loss = nl;
        break;
      }
      step /= 2.0;
    }
    if (!improved) break;
  }
  return {a, b};
}

}  // namespace

// --- LogisticObjective ------------------------------------------------------

double LogisticObjective::Loss(std::span<const double> w, double b, const Matrix& x,
                               std::span<const std::uint8_t> y, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = Dot(w, x.row(i)) + b;
    loss += Softplus(z) - (y[i] ? z : 0.0);
  }
  loss /= static_cast<double>(x.rows());
  return loss + 0.5 * l2 * Dot(w, w);
}

double LogisticObjective::Gradient(std::span<const double> w, double b, const Matrix& x,
                                   std::span<const std::uint8_t> y, double l2,
                                   std::vector<double>& grad_w) {
  const double n = static_cast<double>(x.rows());
  grad_w.assign(w.size(), 0.0);
  double grad_b = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    const double r = Sigmoid(Dot(w, row) + b) - (y[i] ? 1.0 : 0.0);
    for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] += r * row[j];
    grad_b += r;
  }
  for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] = grad_w[j] / n + l2 * w[j];
  return grad_b / n;
}

// --- LogRegLearner ----------------------------------------------------------

LogRegLearner::LogRegLearner(LearnerSpec spec, std::vector<double> w, double b)
    : Learner(std::move(spec), w.size()), weights_(std::move(w)), bias_(b) {}

std::shared_ptr<const LogRegLearner> LogRegLearner::Fit(const LearnerSpec& spec, const Matrix& x,
                                                        std::span<const std::uint8_t> y) {
  const double rate = spec.Get("learning_rate");
  const auto iterations = static_cast<int>(spec.Get("iterations"));
  const double l2 = spec.Get("l2");
  std::vector<double> w(x.cols(), 0.0), grad;
  double b = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double grad_b = LogisticObjective::Gradient(w, b, x, y, l2, grad);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= rate * grad[j];
    b -= rate * grad_b;
  }
  return std::shared_ptr<const LogRegLearner>(new LogRegLearner(spec, std::move(w), b));
}

std::shared_ptr<const LogRegLearner> LogRegLearner::FromWeights(std::vector<double> w, double b) {
  return std::shared_ptr<const LogRegLearner>(
      new LogRegLearner(LearnerSpec{LearnerKind::kLogReg, {}, 0}, std::move(w), b));
}

double LogRegLearner::Probability(std::span<const double> x) const {
  return Sigmoid(Dot(weights_, x) + bias_);
}

nlohmann::json LogRegLearner::ParamsToJson() const {
  return {{"weights", weights_}, {"bias", bias_}};
}

std::shared_ptr<const LogRegLearner> LogRegLearner::FromJson(const LearnerSpec& spec,
                                                             std::size_t d,
                                                             const nlohmann::json& params) {
  auto w = params.at("weights").get<std::vector<double>>();
  if (w.size() != d) throw Error(ErrorCode::kArchiveError, "logreg weight count mismatch");
  return std::shared_ptr<const LogRegLearner>(
      new LogRegLearner(spec, std::move(w), params.at("bias").get<double>()));
}

// --- LinearSvmLearner -------------------------------------------------------

LinearSvmLearner::LinearSvmLearner(LearnerSpec spec, std::vector<double> w, double b,
                                   double platt_a, double platt_b, std::vector<double> history)
    : Learner(std::move(spec), w.size()),
      weights_(std::move(w)),
      bias_(b),
      platt_a_(platt_a),
      platt_b_(platt_b),
      history_(std::move(history)) {}

double LinearSvmLearner::Objective(std::span<const double> w, double b, const Matrix& x,
                                   std::span<const std::uint8_t> y, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double s = y[i] ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - s * (Dot(w, x.row(i)) + b));
  }
  return 0.5 * lambda * (Dot(w, w) + b * b) + hinge / static_cast<double>(x.rows());
}

std::shared_ptr<const LinearSvmLearner> LinearSvmLearner::Fit(const LearnerSpec& spec,
                                                              const Matrix& x,
                                                              std::span<const std::uint8_t> y) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const double lambda = 1.0 / (spec.Get("c") * static_cast<double>(n));
  const auto epochs = static_cast<int>(spec.Get("epochs"));
  const double radius = 1.0 / std::sqrt(lambda);

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double scale = 1.0;
  std::uint64_t t = 0;
  std::vector<double> history{Objective(w, b, x, y, lambda)};
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);

  for (int epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<double> saved_w = w;
    const double saved_b = b;
    const std::uint64_t saved_t = t;
    rng.Shuffle(order);
    for (std::size_t i : order) {
      ++t;
      const double eta = scale / (lambda * static_cast<double>(t));
      const double s = y[i] ? 1.0 : -1.0;
      auto row = x.row(i);
      const double margin = s * (Dot(w, row) + b);
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      b *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * s * row[j];
        b += eta * s;
      }
      const double norm = std::sqrt(Dot(w, w) + b * b);
      if (norm > radius) {
        const double f = radius / norm;
        for (double& v : w) v *= f;
        b *= f;
      }
    }
    const double objective = Objective(w, b, x, y, lambda);
    if (objective <= history.back()) {
      history.push_back(objective);
    } else {
      w = saved_w;
      b = saved_b;
      t = saved_t;
      scale *= 0.5;
      history.push_back(history.back());
    }
  }

  double platt_a = 1.0, platt_b = 0.0;
  if (spec.Get("platt") == 1.0) {
    std::vector<double> margins(n);
    for (std::size_t i = 0; i < n; ++i) margins[i] = Dot(w, x.row(i)) + b;
    std::tie(platt_a, platt_b) = FitPlatt(margins, y);
  }
  return std::shared_ptr<const LinearSvmLearner>(
      new LinearSvmLearner(spec, std::move(w), b, platt_a, platt_b, std::move(history)));
}

double LinearSvmLearner::Margin(std::span<const double> x) const {
  return Dot(weights_, x) + bias_;
}

double LinearSvmLearner::Probability(std::span<const double> x) const {
  return Sigmoid(platt_a_ * Margin(x) + platt_b_);
}

nlohmann::json LinearSvmLearner::ParamsToJson() const {
  return {{"weights", weights_}, {"bias", bias_}, {"platt_a", platt_a_}, {"platt_b", platt_b_}};
}

std::shared_ptr<const LinearSvmLearner> LinearSvmLearner::FromJson(const LearnerSpec& spec,
                                                                   std::size_t d,
                                                                   const nlohmann::json& params) {
  auto w = params.at("weights").get<std::vector<double>>();
  if (w.size() != d) throw Error(ErrorCode::kArchiveError, "svm weight count mismatch");
  return std::shared_ptr<const LinearSvmLearner>(new LinearSvmLearner(
      spec, std::move(w), params.at("bias").get<double>(), params.at("platt_a").get<double>(),
      params.at("platt_b").get<double>(), {}));
}

}  // namespace tpis
