#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tpis/domain.h"
#include "tpis/matrix.h"
#include "tpis/tree.h"

namespace tpis {

enum class LearnerKind { kKnn, kLogReg, kLinearSvm, kDecisionTree, kRandomForest, kAdaBoost, kGbt };

// Short names: knn, logreg, svm, dt, rf, adaboost, gbt.
std::string_view LearnerKindName(LearnerKind kind);
std::optional<LearnerKind> ParseLearnerKind(std::string_view name);

// Display names used in comparison tables (K-NN, LR, SVM, DT, RF, ...).
std::string_view LearnerDisplayName(LearnerKind kind);

using Hyperparameters = std::map<std::string, double>;

// Recognised keys and their defaults per kind:
//   knn       k=5
//   logreg    learning_rate=0.1 iterations=500 l2=1e-3
//   svm       c=1 epochs=200 platt=0
//   dt        max_depth=6 min_leaf=2 max_features=0 laplace=0
//   rf        trees=100 max_depth=6 min_leaf=2 max_features=-1 bootstrap=1 laplace=0
//   adaboost  rounds=100 max_depth=1
//   gbt       rounds=100 learning_rate=0.1 max_depth=3 min_leaf=2 l2=0
// max_features: 0 = all features, -1 = floor(sqrt(d)), n > 0 = n features.
const Hyperparameters& DefaultHyperparameters(LearnerKind kind);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kLogReg;
  Hyperparameters hyperparameters;  // overrides of the defaults
  std::uint64_t seed = 0;

  double Get(const std::string& key) const;
  friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

// Rejects unknown keys and out-of-range values (kInvalidArgument).
void ValidateSpec(const LearnerSpec& spec);

// K-NN, LR, SVM, DT, RF with the given seed.
std::vector<LearnerSpec> DefaultBaseSpecs(std::uint64_t seed);

// A fitted binary classifier emitting P(TB). Immutable once built.
class Learner {
 public:
  virtual ~Learner() = default;

  const LearnerSpec& spec() const { return spec_; }
  LearnerKind kind() const { return spec_.kind; }
  std::size_t feature_count() const { return feature_count_; }

  // Probability of TB in [0, 1]. Throws kShapeError on a width mismatch and
  // kInvalidArgument on missing cells.
  double PredictProba(std::span<const double> x) const;

  virtual nlohmann::json ParamsToJson() const = 0;

 protected:
  Learner(LearnerSpec spec, std::size_t feature_count)
      : spec_(std::move(spec)), feature_count_(feature_count) {}

  virtual double Probability(std::span<const double> x) const = 0;

 private:
  LearnerSpec spec_;
  std::size_t feature_count_;
};

using TrainedLearner = std::shared_ptr<const Learner>;

// Hard label rule shared by every learner: TB iff p >= 0.5.
inline Label HardLabel(double p) { return p >= 0.5 ? Label::kTuberculosis : Label::kPneumonia; }

// Fits a learner. X must be complete; y must hold both classes.
// Errors: kShapeError (|y| != rows), kDegenerateLabels (single class),
// kInvalidArgument (bad spec or missing cells).
TrainedLearner Fit(const LearnerSpec& spec, const Matrix& x, std::span<const Label> y);

nlohmann::json LearnerToJson(const Learner& learner);
TrainedLearner LearnerFromJson(const nlohmann::json& j);

inline double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Concrete learners. Exposed for tests that inspect fitted internals.

class KnnLearner final : public Learner {
 public:
  static std::shared_ptr<const KnnLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                               std::vector<std::uint8_t> y);
  static std::shared_ptr<const KnnLearner> FromJson(const LearnerSpec& spec, std::size_t d,
                                                    const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;

 private:
  KnnLearner(LearnerSpec spec, Matrix x, std::vector<std::uint8_t> y);
  double Probability(std::span<const double> x) const override;

  Matrix train_x_;
  std::vector<std::uint8_t> train_y_;
  std::size_t k_;
};

// Mean logistic loss with an L2 penalty on the weights (not the bias):
//   L(w, b) = (1/n) sum softplus(z_i) - y_i z_i + (l2/2) |w|^2,  z_i = w.x_i + b.
struct LogisticObjective {
  static double Loss(std::span<const double> w, double b, const Matrix& x,
                     std::span<const std::uint8_t> y, double l2);
  // Writes dL/dw into grad_w (resized) and returns dL/db.
  static double Gradient(std::span<const double> w, double b, const Matrix& x,
                         std::span<const std::uint8_t> y, double l2, std::vector<double>& grad_w);
};

class LogRegLearner final : public Learner {
 public:
  static std::shared_ptr<const LogRegLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                                  std::span<const std::uint8_t> y);
  static std::shared_ptr<const LogRegLearner> FromJson(const LearnerSpec& spec, std::size_t d,
                                                       const nlohmann::json& params);
  // Direct construction, e.g. the all-zero model.
  static std::shared_ptr<const LogRegLearner> FromWeights(std::vector<double> w, double b);
  nlohmann::json ParamsToJson() const override;

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  LogRegLearner(LearnerSpec spec, std::vector<double> w, double b);
  double Probability(std::span<const double> x) const override;

  std::vector<double> weights_;
  double bias_;
};

// Hinge loss + L2 trained by Pegasos-style subgradient steps with step size
// scale / (lambda t), lambda = 1 / (C n), over epoch-wise shuffled rows. The
// bias is an augmented constant feature and shares the penalty. An epoch
// whose objective ends above the previous one is rolled back and the step
// scale halved, so the recorded objective never increases.
class LinearSvmLearner final : public Learner {
 public:
  static std::shared_ptr<const LinearSvmLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                                     std::span<const std::uint8_t> y);
  static std::shared_ptr<const LinearSvmLearner> FromJson(const LearnerSpec& spec, std::size_t d,
                                                          const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;

  // lambda/2 (|w|^2 + b^2) + mean hinge.
  static double Objective(std::span<const double> w, double b, const Matrix& x,
                          std::span<const std::uint8_t> y, double lambda);

  double Margin(std::span<const double> x) const;
  // Objective before training and after each epoch.
  const std::vector<double>& objective_history() const { return history_; }

 private:
  LinearSvmLearner(LearnerSpec spec, std::vector<double> w, double b, double platt_a,
                   double platt_b, std::vector<double> history);
  double Probability(std::span<const double> x) const override;

  std::vector<double> weights_;
  double bias_;
  // p = sigmoid(platt_a * margin + platt_b); (1, 0) unless Platt scaling is on.
  double platt_a_;
  double platt_b_;
  std::vector<double> history_;
};

class DecisionTreeLearner final : public Learner {
 public:
  static std::shared_ptr<const DecisionTreeLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                                        std::span<const std::uint8_t> y);
  static std::shared_ptr<const DecisionTreeLearner> FromJson(const LearnerSpec& spec,
                                                             std::size_t d,
                                                             const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;
  const Tree& tree() const { return tree_; }

 private:
  DecisionTreeLearner(LearnerSpec spec, std::size_t d, Tree tree);
  double Probability(std::span<const double> x) const override;

  Tree tree_;
};

class RandomForestLearner final : public Learner {
 public:
  static std::shared_ptr<const RandomForestLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                                        std::span<const std::uint8_t> y);
  static std::shared_ptr<const RandomForestLearner> FromJson(const LearnerSpec& spec,
                                                             std::size_t d,
                                                             const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  RandomForestLearner(LearnerSpec spec, std::size_t d, std::vector<Tree> trees);
  double Probability(std::span<const double> x) const override;

  std::vector<Tree> trees_;
};

// SAMME over depth-limited trees (stumps by default). Each accepted round has
// weighted error < 0.5 and weight alpha = log((1 - err) / err); a round with
// error >= 0.5 ends boosting and is discarded. p = sigmoid(sum alpha_m h_m(x))
// with h in {-1, +1}.
class AdaBoostLearner final : public Learner {
 public:
  static std::shared_ptr<const AdaBoostLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                                    std::span<const std::uint8_t> y);
  static std::shared_ptr<const AdaBoostLearner> FromJson(const LearnerSpec& spec, std::size_t d,
                                                         const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;

  double Score(std::span<const double> x) const;
  const std::vector<double>& alphas() const { return alphas_; }
  const std::vector<double>& round_errors() const { return errors_; }

 private:
  AdaBoostLearner(LearnerSpec spec, std::size_t d, std::vector<Tree> stumps,
                  std::vector<double> alphas, std::vector<double> errors);
  double Probability(std::span<const double> x) const override;

  std::vector<Tree> stumps_;
  std::vector<double> alphas_;
  std::vector<double> errors_;
};

// Logistic-loss gradient boosting starting from the prior log-odds; each
// round adds learning_rate times a Newton-leaf regression tree.
class GbtLearner final : public Learner {
 public:
  static std::shared_ptr<const GbtLearner> Fit(const LearnerSpec& spec, const Matrix& x,
                                               std::span<const std::uint8_t> y);
  static std::shared_ptr<const GbtLearner> FromJson(const LearnerSpec& spec, std::size_t d,
                                                    const nlohmann::json& params);
  nlohmann::json ParamsToJson() const override;

  double RawScore(std::span<const double> x) const;
  double base_score() const { return base_score_; }

 private:
  GbtLearner(LearnerSpec spec, std::size_t d, double base, double rate, std::vector<Tree> trees);
  double Probability(std::span<const double> x) const override;

  double base_score_;
  double learning_rate_;
  std::vector<Tree> trees_;
};

}  // namespace tpis
