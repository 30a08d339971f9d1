#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tpis/domain.h"
#include "tpis/preprocess.h"
#include "tpis/stacking.h"

namespace tpis {

struct TpisConfig {
  std::vector<LearnerSpec> layer1;  // step 1, on FS1
  std::vector<LearnerSpec> layer2;  // step 1, on layer-1 meta-features
  std::vector<LearnerSpec> step2;   // step 2, on FS4
  std::size_t folds = 5;
  std::uint64_t seed = 7;
  ConfidencePolicy policy;
  BlockPreprocessor::Options preprocess;
};

// K-NN, LR, SVM, DT, RF in every layer, learner seeds derived from `seed`.
TpisConfig DefaultTpisConfig(std::uint64_t seed = 7);

// Seed handed to a layer's learners and fold split (layer 0, 1, 2).
std::uint64_t LayerSeed(std::uint64_t seed, int layer);
std::uint64_t FoldSeed(std::uint64_t seed, int layer);

struct TpisModel {
  BlockPreprocessor step1_prep;
  BlockPreprocessor step2_prep;
  EnsembleLayer layer1;
  EnsembleLayer layer2;
  EnsembleLayer step2_layer;
  ConfidencePolicy policy;
  std::uint64_t seed = 0;
  std::size_t folds = 0;

  // Column names of the step-2 layer input: retained FS2 columns then meta2_j.
  std::vector<std::string> Step2InputNames() const;
};

// Everything fit_tpis computes, including the training-side matrices.
struct TpisFit {
  TpisModel model;
  Matrix step1;  // preprocessed FS1 rows
  Matrix step2;  // preprocessed FS2 rows
  Matrix meta1;  // out-of-fold layer-1 outputs
  Matrix meta2;  // out-of-fold layer-2 outputs (FS3 for training rows)
};

// Errors: kInvalidArgument (unlabeled rows), kDegenerateLabels,
// kStepTwoUnavailable (a training record without step-2 data), plus
// anything raised by preprocessing and FitLayer.
TpisFit FitTpisDetailed(const Dataset& train, const TpisConfig& config);
inline TpisModel FitTpis(const Dataset& train, const TpisConfig& config) {
  return FitTpisDetailed(train, config).model;
}

// Routing rule: undetermined always routes; otherwise cs < threshold routes.
inline bool ShouldRoute(Verdict verdict, double cs, double threshold) {
  return verdict == Verdict::kUndetermined || cs < threshold;
}

struct EarlyDiagnosis {
  Verdict verdict;
  double cs;
  VotePanel meta1;
  VotePanel meta2;
  bool routed;  // under the model's policy
};

// Raw step-1 features (missing cells are imputed from the training rows).
EarlyDiagnosis EarlyDiagnose(const TpisModel& model, const StepOneFeatures& features);

struct FinalDecision {
  Label label;
  VotePanel votes;  // step-2 learners' P(TB)
  std::size_t tb_votes = 0;
};

FinalDecision FinalDiagnose(const TpisModel& model, const VotePanel& meta2,
                            const StepTwoFeatures& features);

// Step 2 applied to every record, routed or not.
std::vector<Label> FinalDiagnoseAll(const TpisModel& model, const Dataset& dataset);

enum class Stage { kStepOne, kStepTwo };

struct TriageOutcome {
  std::string id;
  Verdict early;
  double cs;
  bool routed;
  Label final_label;
  Stage stage;
};

struct RecordFailure {
  std::string id;
  std::string message;
};

// Counts of step-1 predictions sharing one CS value.
struct CsBucket {
  double cs;
  std::size_t predicted_p = 0;
  std::size_t predicted_tb = 0;
  std::size_t undetermined = 0;
};

struct ClassRouting {
  std::size_t total = 0;
  std::size_t routed = 0;
  std::size_t step1_wrong = 0;  // confident (not routed) and wrong
  std::size_t step2_wrong = 0;  // routed and wrong after step 2
  std::vector<CsBucket> buckets;  // ascending cs

  double Fraction(std::size_t count) const {
    return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total);
  }
};

struct RoutingReport {
  double threshold = 0.0;
  ClassRouting pneumonia;
  ClassRouting tuberculosis;
  std::size_t evaluated = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;  // final labels vs truth over labeled records
};

struct WorkflowResult {
  std::vector<TriageOutcome> outcomes;
  std::vector<RecordFailure> failures;
  RoutingReport report;
};

// Runs early diagnosis on every record, routes under `threshold` (the
// model's policy when unset) and finishes routed records with step 2.
// Routed records lacking step-2 data are listed as failures.
WorkflowResult RunWorkflow(const TpisModel& model, const Dataset& cohort,
                           std::optional<double> threshold = std::nullopt);

std::string FormatRoutingReport(const RoutingReport& report);

// --- Aggregate accuracy from published-style fractions ---------------------

struct StepOneClassRow {
  double class_size = 0;
  std::vector<double> routed_fractions;  // one per routed CS bucket
  double confident_wrong = 0;
};

struct StepTwoClassRow {
  double wrong_of_routed = 0;
};

struct AggregateResult {
  long misdiagnosed = 0;
  double total = 0;
  double accuracy = 0;
};

// Half-up rounding to whole patients.
long RoundHalfUp(double x);

// Per class: round(confident_wrong * size) + round(wrong_of_routed *
// sum(routed_fractions) * size) misdiagnosed patients; accuracy is
// 1 - misdiagnosed / total size. Throws kInvalidTable when a fraction is
// outside [0, 1], a class size is not positive, or a class's routed plus
// confident-wrong fractions exceed 1 (+1e-9).
AggregateResult AggregateAccuracy(std::span<const StepOneClassRow> step1,
                                  std::span<const StepTwoClassRow> step2);

// Fractions of a RoutingReport in the shape AggregateAccuracy consumes
// (index 0 pneumonia, 1 TB).
std::pair<std::vector<StepOneClassRow>, std::vector<StepTwoClassRow>> ReportTables(
    const RoutingReport& report);

}  // namespace tpis
