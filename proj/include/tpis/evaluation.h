#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpis/domain.h"
#include "tpis/metrics.h"
#include "tpis/pipeline.h"

namespace tpis {

struct Prediction {
  Label label;
  double score;  // P(TB), used for AUC
};

// State shared by every recipe evaluated on one train/test split: the TPIS
// model (and its preprocessing) is fitted once, on first use.
class RunContext {
 public:
  RunContext(Dataset train, Dataset test, TpisConfig config, std::uint64_t seed);

  const Dataset& train() const { return train_; }
  const Dataset& test() const { return test_; }
  std::uint64_t seed() const { return seed_; }

  const TpisFit& tpis();
  const std::vector<EarlyDiagnosis>& test_early();

  // Preprocessed feature matrices. Training meta-features are out-of-fold.
  Matrix TrainFeatures(FeatureSet fs);
  Matrix TestFeatures(FeatureSet fs);

 private:
  Dataset train_;
  Dataset test_;
  TpisConfig config_;
  std::uint64_t seed_;
  std::optional<TpisFit> fit_;
  std::optional<std::vector<EarlyDiagnosis>> test_early_;
};

// Fits on ctx.train() and predicts every record of ctx.test().
struct ModelRecipe {
  std::string name;
  std::function<std::vector<Prediction>(RunContext&)> run;
};

// One base learner on a feature set. The learner seed is mixed with the
// run seed so repeated runs differ.
ModelRecipe SingleLearnerRecipe(const LearnerSpec& spec, FeatureSet fs, std::string name = {});

enum class TpisStage {
  kLayerOne,  // step 1, first layer vote
  kLayerTwo,  // step 1 output
  kStepTwo,   // step 2 applied to everyone (FS4)
  kWorkflow,  // routed two-step policy
};

// Ensemble labels come from the epsilon tally; undetermined panels fall back
// to mean P(TB) >= 0.5. The score is the panel's mean P(TB).
ModelRecipe TpisRecipe(TpisStage stage);

// Row sets of the comparison tables:
//   FS1: DT, LR, SVM, RF, Adaboost, GBT, TPIS layer 1, TPIS layer 2
//   FS4: DT, LR, SVM, Adaboost, GBT, RF, TPIS step 2
//   FS2, FS3, FS5: DT, LR, SVM, Adaboost, GBT, RF
// `overrides` replaces hyperparameters of the single-learner rows by kind.
using LearnerOverrides = std::map<LearnerKind, Hyperparameters>;
std::vector<ModelRecipe> DefaultRecipes(FeatureSet fs, const LearnerOverrides& overrides = {});

struct EvalOptions {
  std::size_t runs = 30;
  std::size_t train_per_class = 60;
  std::uint64_t seed = 1;
  // Learner kinds/hyperparameters, folds, policy and preprocessing. Seeds are
  // re-derived for every run.
  TpisConfig tpis = DefaultTpisConfig();
};

struct MetricReport {
  MetricSummary accuracy, auc, precision, recall, f_score;
  std::vector<double> run_accuracy;
};

struct ComparisonRow {
  std::string name;
  MetricReport report;
};

struct ComparisonTable {
  FeatureSet feature_set;
  std::size_t runs = 0;
  std::vector<ComparisonRow> rows;

  // Percentages with two decimals; CSV carries mean and half-width columns.
  std::string ToCsv() const;
  std::string ToText() const;
};

// Run r splits `dataset` with BalancedSplit(seed = DeriveSeed(seed, 2r)) and
// fits everything with seeds from DeriveSeed(seed, 2r + 1); each metric is
// summarised as mean +- 1.96 sd / sqrt(R).
ComparisonTable CompareModels(FeatureSet fs, const std::vector<ModelRecipe>& recipes,
                              const Dataset& dataset, const EvalOptions& options);

MetricReport RepeatedEval(const ModelRecipe& recipe, const Dataset& dataset,
                          const EvalOptions& options);

// Per-run metrics of one recipe on one context.
BasicMetrics EvaluateRun(const std::vector<Prediction>& predictions, const Dataset& test,
                         double* auc);

// Copy of `config` with every seed derived from `seed`.
TpisConfig Reseed(TpisConfig config, std::uint64_t seed);

}  // namespace tpis
