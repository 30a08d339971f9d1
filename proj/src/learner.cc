#include <algorithm>
#include <cmath>
#include <string>

#include "tpis/error.h"
#include "tpis/learners.h"

namespace tpis {
namespace {

constexpr LearnerKind kAllKinds[] = {
    LearnerKind::kKnn,          LearnerKind::kLogReg,       LearnerKind::kLinearSvm,
    LearnerKind::kDecisionTree, LearnerKind::kRandomForest, LearnerKind::kAdaBoost,
    LearnerKind::kGbt,
};

void Require(bool ok, const LearnerSpec& spec, const std::string& what) {
  if (!ok) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(LearnerKindName(spec.kind)) + ": " + what);
  }
}

bool IsInteger(double v) { return std::isfinite(v) && v == std::floor(v); }

std::vector<std::uint8_t> ToBinary(std::span<const Label> y) {
  std::vector<std::uint8_t> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] == Label::kTuberculosis ? 1 : 0;
  return out;
}

}  // namespace

std::string_view LearnerKindName(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kKnn: return "knn";
    case LearnerKind::kLogReg: return "logreg";
    case LearnerKind::kLinearSvm: return "svm";
    case LearnerKind::kDecisionTree: return "dt";
    case LearnerKind::kRandomForest: return "rf";
    case LearnerKind::kAdaBoost: return "adaboost";
    case LearnerKind::kGbt: return "gbt";
  }
  return "?";
}

std::string_view LearnerDisplayName(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kKnn: return "K-NN";
    case LearnerKind::kLogReg: return "LR";
    case LearnerKind::kLinearSvm: return "SVM";
    case LearnerKind::kDecisionTree: return "Decision Tree";
    case LearnerKind::kRandomForest: return "RF";
    case LearnerKind::kAdaBoost: return "Adaboost";
    case LearnerKind::kGbt: return "GBT";
  }
  return "?";
}

std::optional<LearnerKind> ParseLearnerKind(std::string_view name) {
  for (LearnerKind k : kAllKinds) {
    if (LearnerKindName(k) == name) return k;
  }
  return std::nullopt;
}

const Hyperparameters& DefaultHyperparameters(LearnerKind kind) {
  static const std::map<LearnerKind, Hyperparameters> defaults = {
      {LearnerKind::kKnn, {{"k", 5}}},
      {LearnerKind::kLogReg, {{"learning_rate", 0.1}, {"iterations", 500}, {"l2", 1e-3}}},
      {LearnerKind::kLinearSvm, {{"c", 1.0}, {"epochs", 200}, {"platt", 0}}},
      {LearnerKind::kDecisionTree,
       {{"max_depth", 6}, {"min_leaf", 2}, {"max_features", 0}, {"laplace", 0}}},
      {LearnerKind::kRandomForest,
       {{"trees", 100},
        {"max_depth", 6},
        {"min_leaf", 2},
        {"max_features", -1},
        {"bootstrap", 1},
        {"laplace", 0}}},
      {LearnerKind::kAdaBoost, {{"rounds", 100}, {"max_depth", 1}}},
      {LearnerKind::kGbt,
       {{"rounds", 100}, {"learning_rate", 0.1}, {"max_depth", 3}, {"min_leaf", 2}, {"l2", 0}}},
  };
  return defaults.at(kind);
}

double LearnerSpec::Get(const std::string& key) const {
  if (auto it = hyperparameters.find(key); it != hyperparameters.end()) return it->second;
  const auto& defaults = DefaultHyperparameters(kind);
  if (auto it = defaults.find(key); it != defaults.end()) return it->second;
  throw Error(ErrorCode::kInvalidArgument,
              std::string(LearnerKindName(kind)) + " has no hyperparameter '" + key + "'");
}

void ValidateSpec(const LearnerSpec& spec) {
  const auto& defaults = DefaultHyperparameters(spec.kind);
  for (const auto& [key, value] : spec.hyperparameters) {
    Require(defaults.count(key) == 1, spec, "unknown hyperparameter '" + key + "'");
    Require(std::isfinite(value), spec, key + " must be finite");
  }
  auto positive_int = [&](const char* key) {
    Require(IsInteger(spec.Get(key)) && spec.Get(key) >= 1, spec, std::string(key) + " must be an integer >= 1");
  };
  auto flag = [&](const char* key) {
    const double v = spec.Get(key);
    Require(v == 0.0 || v == 1.0, spec, std::string(key) + " must be 0 or 1");
  };
  auto tree_params = [&] {
    positive_int("max_depth");
    positive_int("min_leaf");
    const double mf = spec.Get("max_features");
    Require(IsInteger(mf) && mf >= -1, spec, "max_features must be -1, 0 or a positive integer");
    Require(spec.Get("laplace") >= 0, spec, "laplace must be >= 0");
  };
  switch (spec.kind) {
    case LearnerKind::kKnn:
      positive_int("k");
      break;
    case LearnerKind::kLogReg:
      Require(spec.Get("learning_rate") > 0, spec, "learning_rate must be > 0");
      positive_int("iterations");
      Require(spec.Get("l2") >= 0, spec, "l2 must be >= 0");
      break;
    case LearnerKind::kLinearSvm:
      Require(spec.Get("c") > 0, spec, "c must be > 0");
      positive_int("epochs");
      flag("platt");
      break;
    case LearnerKind::kDecisionTree:
      tree_params();
      break;
    case LearnerKind::kRandomForest:
      tree_params();
      positive_int("trees");
      flag("bootstrap");
      break;
    case LearnerKind::kAdaBoost:
      positive_int("rounds");
      positive_int("max_depth");
      break;
    case LearnerKind::kGbt:
      positive_int("rounds");
      positive_int("max_depth");
      positive_int("min_leaf");
      // Zero is allowed: the model then stays at the prior log-odds.
      Require(spec.Get("learning_rate") >= 0, spec, "learning_rate must be >= 0");
      Require(spec.Get("l2") >= 0, spec, "l2 must be >= 0");
      break;
  }
}

std::vector<LearnerSpec> DefaultBaseSpecs(std::uint64_t seed) {
  std::vector<LearnerSpec> specs;
  for (LearnerKind k : {LearnerKind::kKnn, LearnerKind::kLogReg, LearnerKind::kLinearSvm,
                        LearnerKind::kDecisionTree, LearnerKind::kRandomForest}) {
    specs.push_back(LearnerSpec{k, {}, seed});
  }
  return specs;
}

double Learner::PredictProba(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorCode::kShapeError, std::string(LearnerKindName(kind())) + " expects " +
                                            std::to_string(feature_count_) + " features, got " +
                                            std::to_string(x.size()));
  }
  if (std::any_of(x.begin(), x.end(), IsMissing)) {
    throw Error(ErrorCode::kInvalidArgument, "feature vector has missing cells");
  }
  return std::clamp(Probability(x), 0.0, 1.0);
}

TrainedLearner Fit(const LearnerSpec& spec, const Matrix& x, std::span<const Label> y) {
  ValidateSpec(spec);
  if (x.rows() != y.size()) {
    throw Error(ErrorCode::kShapeError, "X has " + std::to_string(x.rows()) + " rows but y has " +
                                            std::to_string(y.size()) + " labels");
  }
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::kShapeError, "empty training matrix");
  if (x.HasMissing()) throw Error(ErrorCode::kInvalidArgument, "training matrix has missing cells");
  auto labels = ToBinary(y);
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size())) {
    throw Error(ErrorCode::kDegenerateLabels, "training labels contain a single class");
  }
  switch (spec.kind) {
    case LearnerKind::kKnn: return KnnLearner::Fit(spec, x, std::move(labels));
    case LearnerKind::kLogReg: return LogRegLearner::Fit(spec, x, labels);
    case LearnerKind::kLinearSvm: return LinearSvmLearner::Fit(spec, x, labels);
    case LearnerKind::kDecisionTree: return DecisionTreeLearner::Fit(spec, x, labels);
    case LearnerKind::kRandomForest: return RandomForestLearner::Fit(spec, x, labels);
    case LearnerKind::kAdaBoost: return AdaBoostLearner::Fit(spec, x, labels);
    case LearnerKind::kGbt: return GbtLearner::Fit(spec, x, labels);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown learner kind");
}

nlohmann::json LearnerToJson(const Learner& learner) {
  nlohmann::json j;
  j["kind"] = std::string(LearnerKindName(learner.kind()));
  j["seed"] = learner.spec().seed;
  j["hyperparameters"] = learner.spec().hyperparameters;
  j["feature_count"] = learner.feature_count();
  j["params"] = learner.ParamsToJson();
  return j;
}

TrainedLearner LearnerFromJson(const nlohmann::json& j) {
  const auto kind = ParseLearnerKind(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::kArchiveError, "unknown learner kind in archive");
  LearnerSpec spec{*kind, j.at("hyperparameters").get<Hyperparameters>(),
                   j.at("seed").get<std::uint64_t>()};
  ValidateSpec(spec);
  const auto d = j.at("feature_count").get<std::size_t>();
  const auto& params = j.at("params");
  switch (*kind) {
    case LearnerKind::kKnn: return KnnLearner::FromJson(spec, d, params);
    case LearnerKind::kLogReg: return LogRegLearner::FromJson(spec, d, params);
    case LearnerKind::kLinearSvm: return LinearSvmLearner::FromJson(spec, d, params);
    case LearnerKind::kDecisionTree: return DecisionTreeLearner::FromJson(spec, d, params);
    case LearnerKind::kRandomForest: return RandomForestLearner::FromJson(spec, d, params);
    case LearnerKind::kAdaBoost: return AdaBoostLearner::FromJson(spec, d, params);
    case LearnerKind::kGbt: return GbtLearner::FromJson(spec, d, params);
  }
  throw Error(ErrorCode::kArchiveError, "unknown learner kind in archive");
}

}  // namespace tpis
