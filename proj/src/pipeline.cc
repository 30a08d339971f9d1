#include "tpis/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "tpis/error.h"
#include "tpis/rng.h"

namespace tpis {
namespace {

bool IsWrong(Label truth, Verdict v) { return ToVerdict(truth) != v; }

void AddToBucket(ClassRouting& cls, double cs, Verdict verdict) {
  auto it = std::find_if(cls.buckets.begin(), cls.buckets.end(),
                         [&](const CsBucket& b) { return std::abs(b.cs - cs) < 1e-9; });
  if (it == cls.buckets.end()) {
    cls.buckets.push_back(CsBucket{cs});
    it = cls.buckets.end() - 1;
  }
  switch (verdict) {
    case Verdict::kPneumonia: ++it->predicted_p; break;
    case Verdict::kTuberculosis: ++it->predicted_tb; break;
    case Verdict::kUndetermined: ++it->undetermined; break;
  }
}

std::string Percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * fraction);
  return buf;
}

}  // namespace

std::uint64_t LayerSeed(std::uint64_t seed, int layer) { return DeriveSeed(seed, 10 + layer); }
std::uint64_t FoldSeed(std::uint64_t seed, int layer) { return DeriveSeed(seed, 20 + layer); }

TpisConfig DefaultTpisConfig(std::uint64_t seed) {
  TpisConfig config;
  config.seed = seed;
  config.layer1 = DefaultBaseSpecs(LayerSeed(seed, 0));
  config.layer2 = DefaultBaseSpecs(LayerSeed(seed, 1));
  config.step2 = DefaultBaseSpecs(LayerSeed(seed, 2));
  return config;
}

std::vector<std::string> TpisModel::Step2InputNames() const {
  std::vector<std::string> names = step2_prep.OutputNames();
  for (std::size_t j = 0; j < layer2.size(); ++j) names.push_back("meta2_" + std::to_string(j));
  return names;
}

TpisFit FitTpisDetailed(const Dataset& train, const TpisConfig& config) {
  config.policy.Validate();
  if (train.empty()) throw Error(ErrorCode::kEmptyDataset, "no training records");
  ValidateDataset(train);
  const std::vector<Label> y = Labels(train);
  if (std::all_of(y.begin(), y.end(), [&](Label l) { return l == y.front(); })) {
    throw Error(ErrorCode::kDegenerateLabels, "training data holds a single class");
  }
  for (const auto& r : train) {
    if (!r.step2) {
      throw Error(ErrorCode::kStepTwoUnavailable,
                  "training record '" + r.id + "' has no step-2 features");
    }
  }

  TpisFit fit;
  TpisModel& model = fit.model;
  model.policy = config.policy;
  model.seed = config.seed;
  model.folds = config.folds;
  model.step1_prep = FitStepOnePreprocessor(train, config.preprocess);
  model.step2_prep = FitStepTwoPreprocessor(train, config.preprocess);
  fit.step1 = model.step1_prep.Transform(StepOneMatrix(train));
  fit.step2 = model.step2_prep.Transform(StepTwoMatrix(train));

  LayerOptions options;
  options.folds = config.folds;

  options.seed = FoldSeed(config.seed, 0);
  LayerFit first = FitLayer(config.layer1, fit.step1, y, options);
  model.layer1 = std::move(first.layer);
  fit.meta1 = std::move(first.meta);

  options.seed = FoldSeed(config.seed, 1);
  LayerFit second = FitLayer(config.layer2, fit.meta1, y, options);
  model.layer2 = std::move(second.layer);
  fit.meta2 = std::move(second.meta);

  options.seed = FoldSeed(config.seed, 2);
  options.out_of_fold = false;
  const Matrix fs4 = Matrix::HConcat(fit.step2, fit.meta2);
  model.step2_layer = FitLayer(config.step2, fs4, y, options).layer;
  return fit;
}

EarlyDiagnosis EarlyDiagnose(const TpisModel& model, const StepOneFeatures& features) {
  const std::vector<double> x = model.step1_prep.Transform(features.values);
  EarlyDiagnosis out;
  out.meta1 = model.layer1.MetaFeatures(x);
  out.meta2 = model.layer2.MetaFeatures(out.meta1.probs);
  const VoteTally tally = TallyVotes(out.meta2, model.policy);
  out.verdict = VoteLabel(tally);
  out.cs = ConfidenceScore(tally);
  out.routed = ShouldRoute(out.verdict, out.cs, model.policy.route_threshold);
  return out;
}

FinalDecision FinalDiagnose(const TpisModel& model, const VotePanel& meta2,
                            const StepTwoFeatures& features) {
  if (meta2.size() != model.layer2.size()) {
    throw Error(ErrorCode::kShapeError, "meta2 must have " + std::to_string(model.layer2.size()) +
                                            " entries, got " + std::to_string(meta2.size()));
  }
  std::vector<double> x = model.step2_prep.Transform(features.values);
  x.insert(x.end(), meta2.probs.begin(), meta2.probs.end());
  FinalDecision out;
  out.votes = model.step2_layer.MetaFeatures(x);
  for (double p : out.votes.probs) out.tb_votes += HardLabel(p) == Label::kTuberculosis ? 1 : 0;
  out.label = HardMajority(out.votes);
  return out;
}

std::vector<Label> FinalDiagnoseAll(const TpisModel& model, const Dataset& dataset) {
  std::vector<Label> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset) {
    if (!r.step2) {
      throw Error(ErrorCode::kStepTwoUnavailable, "record '" + r.id + "' has no step-2 features");
    }
    const EarlyDiagnosis early = EarlyDiagnose(model, r.step1);
    out.push_back(FinalDiagnose(model, early.meta2, *r.step2).label);
  }
  return out;
}

WorkflowResult RunWorkflow(const TpisModel& model, const Dataset& cohort,
                           std::optional<double> threshold) {
  const double cutoff = threshold.value_or(model.policy.route_threshold);
  WorkflowResult result;
  RoutingReport& report = result.report;
  report.threshold = cutoff;
  for (const auto& record : cohort) {
    const EarlyDiagnosis early = EarlyDiagnose(model, record.step1);
    TriageOutcome outcome{record.id, early.verdict, early.cs, false, Label::kPneumonia,
                          Stage::kStepOne};
    outcome.routed = ShouldRoute(early.verdict, early.cs, cutoff);
    if (outcome.routed) {
      if (!record.step2) {
        result.failures.push_back(
            {record.id, "StepTwoUnavailable: routed record has no step-2 features"});
        continue;
      }
      outcome.final_label = FinalDiagnose(model, early.meta2, *record.step2).label;
      outcome.stage = Stage::kStepTwo;
    } else {
      outcome.final_label =
          early.verdict == Verdict::kTuberculosis ? Label::kTuberculosis : Label::kPneumonia;
    }
    result.outcomes.push_back(outcome);

    if (!record.label) continue;
    ClassRouting& cls =
        *record.label == Label::kTuberculosis ? report.tuberculosis : report.pneumonia;
    ++cls.total;
    AddToBucket(cls, early.cs, early.verdict);
    if (outcome.routed) {
      ++cls.routed;
      if (outcome.final_label != *record.label) ++cls.step2_wrong;
    } else if (IsWrong(*record.label, early.verdict)) {
      ++cls.step1_wrong;
    }
    ++report.evaluated;
    if (outcome.final_label == *record.label) ++report.correct;
  }
  for (ClassRouting* cls : {&report.pneumonia, &report.tuberculosis}) {
    std::sort(cls->buckets.begin(), cls->buckets.end(),
              [](const CsBucket& a, const CsBucket& b) { return a.cs < b.cs; });
  }
  report.accuracy = report.evaluated == 0 ? 0.0
                                          : static_cast<double>(report.correct) /
                                                static_cast<double>(report.evaluated);
  return result;
}

std::string FormatRoutingReport(const RoutingReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "Routing threshold: %.4g (route when CS < threshold)\n\n",
                report.threshold);
  out << buf;
  out << "Step 1 by confidence score (fraction of each real class)\n";
  const std::pair<const char*, const ClassRouting*> classes[] = {
      {"P", &report.pneumonia}, {"TB", &report.tuberculosis}};
  for (const auto& [name, cls] : classes) {
    std::snprintf(buf, sizeof(buf), "  Real class %s (n=%zu)\n", name, cls->total);
    out << buf;
    out << "    CS       pred P    pred TB   undetermined  routed\n";
    for (const auto& b : cls->buckets) {
      // CS = 0 is exactly the undetermined case, which always routes.
      const bool routed = b.cs < report.threshold || b.cs == 0.0;
      std::snprintf(buf, sizeof(buf), "    %-8.4g %-9s %-9s %-13s %s\n", b.cs,
                    Percent(cls->Fraction(b.predicted_p)).c_str(),
                    Percent(cls->Fraction(b.predicted_tb)).c_str(),
                    Percent(cls->Fraction(b.undetermined)).c_str(),
                    routed ? "yes" : "no");
      out << buf;
    }
  }
  out << "\nRouting summary\n";
  for (const auto& [name, cls] : classes) {
    std::snprintf(buf, sizeof(buf),
                  "  %-3s routed %s, misdiagnosed at step 1 %s, step-2 errors among routed %s\n",
                  name, Percent(cls->Fraction(cls->routed)).c_str(),
                  Percent(cls->Fraction(cls->step1_wrong)).c_str(),
                  Percent(cls->routed == 0 ? 0.0
                                           : static_cast<double>(cls->step2_wrong) /
                                                 static_cast<double>(cls->routed))
                      .c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "\nAggregate accuracy: %.2f%% (%zu of %zu correct)\n",
                100.0 * report.accuracy, report.correct, report.evaluated);
  out << buf;
  return out.str();
}

long RoundHalfUp(double x) { return static_cast<long>(std::floor(x + 0.5 + 1e-9)); }

AggregateResult AggregateAccuracy(std::span<const StepOneClassRow> step1,
                                  std::span<const StepTwoClassRow> step2) {
  if (step1.size() != step2.size() || step1.empty()) {
    throw Error(ErrorCode::kInvalidTable, "step-1 and step-2 tables must list the same classes");
  }
  auto check_fraction = [](double f, const char* what) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw Error(ErrorCode::kInvalidTable, std::string(what) + " fraction outside [0, 1]");
    }
  };
  AggregateResult result;
  for (std::size_t c = 0; c < step1.size(); ++c) {
    const auto& row = step1[c];
    if (!(row.class_size > 0)) throw Error(ErrorCode::kInvalidTable, "class size must be positive");
    check_fraction(row.confident_wrong, "confident-wrong");
    check_fraction(step2[c].wrong_of_routed, "step-2 error");
    double routed = 0.0;
    for (double f : row.routed_fractions) {
      check_fraction(f, "routed");
      routed += f;
    }
    if (routed + row.confident_wrong > 1.0 + 1e-9) {
      throw Error(ErrorCode::kInvalidTable, "class fractions sum above 1");
    }
    result.misdiagnosed += RoundHalfUp(row.confident_wrong * row.class_size) +
                           RoundHalfUp(step2[c].wrong_of_routed * routed * row.class_size);
    result.total += row.class_size;
  }
  result.accuracy = 1.0 - static_cast<double>(result.misdiagnosed) / result.total;
  return result;
}

std::pair<std::vector<StepOneClassRow>, std::vector<StepTwoClassRow>> ReportTables(
    const RoutingReport& report) {
  std::pair<std::vector<StepOneClassRow>, std::vector<StepTwoClassRow>> out;
  for (const ClassRouting* cls : {&report.pneumonia, &report.tuberculosis}) {
    StepOneClassRow row;
    row.class_size = static_cast<double>(cls->total);
    row.routed_fractions = {cls->Fraction(cls->routed)};
    row.confident_wrong = cls->Fraction(cls->step1_wrong);
    out.first.push_back(row);
    out.second.push_back({cls->routed == 0 ? 0.0
                                           : static_cast<double>(cls->step2_wrong) /
                                                 static_cast<double>(cls->routed)});
  }
  return out;
}

}  // namespace tpis
