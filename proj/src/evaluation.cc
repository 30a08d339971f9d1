#include "tpis/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "tpis/error.h"
#include "tpis/rng.h"

namespace tpis {
namespace {

Label EnsembleLabel(const VotePanel& panel, const ConfidencePolicy& policy) {
  switch (VoteLabel(panel, policy)) {
    case Verdict::kTuberculosis: return Label::kTuberculosis;
    case Verdict::kPneumonia: return Label::kPneumonia;
    case Verdict::kUndetermined: break;
  }
  return MeanProbability(panel) >= 0.5 ? Label::kTuberculosis : Label::kPneumonia;
}

std::string Cell(const MetricSummary& s) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f±%.2f", 100.0 * s.mean, 100.0 * s.half_width);
  return buf;
}

}  // namespace

RunContext::RunContext(Dataset train, Dataset test, TpisConfig config, std::uint64_t seed)
    : train_(std::move(train)), test_(std::move(test)), config_(std::move(config)), seed_(seed) {}

const TpisFit& RunContext::tpis() {
  if (!fit_) fit_ = FitTpisDetailed(train_, config_);
  return *fit_;
}

const std::vector<EarlyDiagnosis>& RunContext::test_early() {
  if (!test_early_) {
    const TpisModel& model = tpis().model;
    std::vector<EarlyDiagnosis> early;
    early.reserve(test_.size());
    for (const auto& r : test_) early.push_back(EarlyDiagnose(model, r.step1));
    test_early_ = std::move(early);
  }
  return *test_early_;
}

Matrix RunContext::TrainFeatures(FeatureSet fs) {
  const TpisFit& fit = tpis();
  switch (fs) {
    case FeatureSet::kFs1: return fit.step1;
    case FeatureSet::kFs2: return fit.step2;
    case FeatureSet::kFs3: return fit.meta2;
    case FeatureSet::kFs4: return Matrix::HConcat(fit.step2, fit.meta2);
    case FeatureSet::kFs5: return Matrix::HConcat(fit.step1, fit.step2);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown feature set");
}

Matrix RunContext::TestFeatures(FeatureSet fs) {
  const TpisModel& model = tpis().model;
  auto step1 = [&] { return model.step1_prep.Transform(StepOneMatrix(test_)); };
  auto step2 = [&] { return model.step2_prep.Transform(StepTwoMatrix(test_)); };
  auto meta2 = [&] {
    const auto& early = test_early();
    Matrix m(0, model.layer2.size());
    for (const auto& e : early) m.AppendRow(e.meta2.probs);
    return m;
  };
  switch (fs) {
    case FeatureSet::kFs1: return step1();
    case FeatureSet::kFs2: return step2();
    case FeatureSet::kFs3: return meta2();
    case FeatureSet::kFs4: return Matrix::HConcat(step2(), meta2());
    case FeatureSet::kFs5: return Matrix::HConcat(step1(), step2());
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown feature set");
}

ModelRecipe SingleLearnerRecipe(const LearnerSpec& spec, FeatureSet fs, std::string name) {
  if (name.empty()) name = std::string(LearnerDisplayName(spec.kind));
  return {std::move(name), [spec, fs](RunContext& ctx) {
            LearnerSpec seeded = spec;
            seeded.seed = DeriveSeed(ctx.seed(), spec.seed);
            const Matrix train_x = ctx.TrainFeatures(fs);
            const TrainedLearner learner = Fit(seeded, train_x, Labels(ctx.train()));
            const Matrix test_x = ctx.TestFeatures(fs);
            std::vector<Prediction> out;
            for (std::size_t r = 0; r < test_x.rows(); ++r) {
              const double p = learner->PredictProba(test_x.row(r));
              out.push_back({HardLabel(p), p});
            }
            return out;
          }};
}

ModelRecipe TpisRecipe(TpisStage stage) {
  std::string name;
  switch (stage) {
    case TpisStage::kLayerOne: name = "TPIS step 1, layer 1"; break;
    case TpisStage::kLayerTwo: name = "TPIS step 1, layer 2"; break;
    case TpisStage::kStepTwo: name = "TPIS step 2"; break;
    case TpisStage::kWorkflow: name = "TPIS routed workflow"; break;
  }
  return {name, [stage](RunContext& ctx) {
            const TpisModel& model = ctx.tpis().model;
            const auto& early = ctx.test_early();
            const Dataset& test = ctx.test();
            std::vector<Prediction> out;
            for (std::size_t i = 0; i < test.size(); ++i) {
              const EarlyDiagnosis& e = early[i];
              auto step_two = [&] {
                if (!test[i].step2) {
                  throw Error(ErrorCode::kStepTwoUnavailable,
                              "record '" + test[i].id + "' has no step-2 features");
                }
                const FinalDecision d = FinalDiagnose(model, e.meta2, *test[i].step2);
                return Prediction{d.label, MeanProbability(d.votes)};
              };
              switch (stage) {
                case TpisStage::kLayerOne:
                  out.push_back({EnsembleLabel(e.meta1, model.policy), MeanProbability(e.meta1)});
                  break;
                case TpisStage::kLayerTwo:
                  out.push_back({EnsembleLabel(e.meta2, model.policy), MeanProbability(e.meta2)});
                  break;
                case TpisStage::kStepTwo:
                  out.push_back(step_two());
                  break;
                case TpisStage::kWorkflow:
                  out.push_back(e.routed ? step_two()
                                         : Prediction{EnsembleLabel(e.meta2, model.policy),
                                                      MeanProbability(e.meta2)});
                  break;
              }
            }
            return out;
          }};
}

std::vector<ModelRecipe> DefaultRecipes(FeatureSet fs, const LearnerOverrides& overrides) {
  auto single = [&](LearnerKind kind) {
    LearnerSpec spec{kind, {}, static_cast<std::uint64_t>(kind)};
    if (auto it = overrides.find(kind); it != overrides.end()) spec.hyperparameters = it->second;
    ValidateSpec(spec);
    return SingleLearnerRecipe(spec, fs);
  };
  std::vector<ModelRecipe> out;
  if (fs == FeatureSet::kFs1) {
    for (LearnerKind k : {LearnerKind::kDecisionTree, LearnerKind::kLogReg, LearnerKind::kLinearSvm,
                          LearnerKind::kRandomForest, LearnerKind::kAdaBoost, LearnerKind::kGbt}) {
      out.push_back(single(k));
    }
    out.push_back(TpisRecipe(TpisStage::kLayerOne));
    out.push_back(TpisRecipe(TpisStage::kLayerTwo));
    return out;
  }
  for (LearnerKind k : {LearnerKind::kDecisionTree, LearnerKind::kLogReg, LearnerKind::kLinearSvm,
                        LearnerKind::kAdaBoost, LearnerKind::kGbt, LearnerKind::kRandomForest}) {
    out.push_back(single(k));
  }
  if (fs == FeatureSet::kFs4) out.push_back(TpisRecipe(TpisStage::kStepTwo));
  return out;
}

TpisConfig Reseed(TpisConfig config, std::uint64_t seed) {
  config.seed = seed;
  for (auto& s : config.layer1) s.seed = LayerSeed(seed, 0);
  for (auto& s : config.layer2) s.seed = LayerSeed(seed, 1);
  for (auto& s : config.step2) s.seed = LayerSeed(seed, 2);
  return config;
}

BasicMetrics EvaluateRun(const std::vector<Prediction>& predictions, const Dataset& test,
                         double* auc) {
  const std::vector<Label> truth = Labels(test);
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::kShapeError, "prediction count differs from test size");
  }
  std::vector<Label> labels;
  std::vector<double> scores;
  for (const auto& p : predictions) {
    labels.push_back(p.label);
    scores.push_back(p.score);
  }
  if (auc) *auc = RocAuc(scores, truth).auc;
  return ComputeBasicMetrics(Confusion(truth, labels));
}

ComparisonTable CompareModels(FeatureSet fs, const std::vector<ModelRecipe>& recipes,
                              const Dataset& dataset, const EvalOptions& options) {
  if (recipes.empty()) throw Error(ErrorCode::kInvalidArgument, "no models to compare");
  if (options.runs == 0) throw Error(ErrorCode::kInvalidArgument, "runs must be >= 1");
  struct Series {
    std::vector<double> accuracy, auc, precision, recall, f_score;
  };
  std::vector<Series> series(recipes.size());
  for (std::size_t r = 0; r < options.runs; ++r) {
    auto [train, test] =
        BalancedSplit(dataset, SplitSpec{options.train_per_class, DeriveSeed(options.seed, 2 * r)});
    const std::uint64_t run_seed = DeriveSeed(options.seed, 2 * r + 1);
    RunContext ctx(std::move(train), std::move(test), Reseed(options.tpis, run_seed), run_seed);
    for (std::size_t m = 0; m < recipes.size(); ++m) {
      double auc = 0.0;
      const BasicMetrics metrics = EvaluateRun(recipes[m].run(ctx), ctx.test(), &auc);
      series[m].accuracy.push_back(metrics.accuracy);
      series[m].auc.push_back(auc);
      series[m].precision.push_back(metrics.precision);
      series[m].recall.push_back(metrics.recall);
      series[m].f_score.push_back(metrics.f_score);
    }
  }
  ComparisonTable table;
  table.feature_set = fs;
  table.runs = options.runs;
  for (std::size_t m = 0; m < recipes.size(); ++m) {
    MetricReport report;
    report.accuracy = Summarize(series[m].accuracy);
    report.auc = Summarize(series[m].auc);
    report.precision = Summarize(series[m].precision);
    report.recall = Summarize(series[m].recall);
    report.f_score = Summarize(series[m].f_score);
    report.run_accuracy = series[m].accuracy;
    table.rows.push_back({recipes[m].name, std::move(report)});
  }
  return table;
}

MetricReport RepeatedEval(const ModelRecipe& recipe, const Dataset& dataset,
                          const EvalOptions& options) {
  // The feature set only labels the table; the recipe carries its own.
  return CompareModels(FeatureSet::kFs1, {recipe}, dataset, options).rows.front().report;
}

std::string ComparisonTable::ToCsv() const {
  std::ostringstream out;
  out << "feature_set,model,accuracy,accuracy_ci,auc,auc_ci,precision,precision_ci,recall,"
         "recall_ci,f_score,f_score_ci\n";
  char buf[64];
  for (const auto& row : rows) {
    std::string name = row.name;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = quoted + "\"";
    }
    out << FeatureSetName(feature_set) << ',' << name;
    for (const MetricSummary* s : {&row.report.accuracy, &row.report.auc, &row.report.precision,
                                   &row.report.recall, &row.report.f_score}) {
      std::snprintf(buf, sizeof(buf), ",%.4f,%.4f", 100.0 * s->mean, 100.0 * s->half_width);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string ComparisonTable::ToText() const {
  std::size_t width = 5;
  for (const auto& row : rows) width = std::max(width, row.name.size());
  std::ostringstream out;
  out << FeatureSetName(feature_set) << " (" << runs << " runs, mean ± 95% CI half-width, %)\n";
  auto pad = [](std::string s, std::size_t w) {
    // "±" is two bytes but one column wide.
    std::size_t cols = 0;
    for (unsigned char c : s) cols += (c & 0xC0) != 0x80 ? 1 : 0;
    if (cols < w) s.append(w - cols, ' ');
    return s;
  };
  out << pad("Model", width) << "  " << pad("Accuracy", 13) << "  " << pad("AUC", 13) << "  "
      << pad("Precision", 13) << "  " << pad("Recall", 13) << "  F-Score\n";
  for (const auto& row : rows) {
    out << pad(row.name, width) << "  " << pad(Cell(row.report.accuracy), 13) << "  "
        << pad(Cell(row.report.auc), 13) << "  " << pad(Cell(row.report.precision), 13) << "  "
        << pad(Cell(row.report.recall), 13) << "  " << Cell(row.report.f_score) << '\n';
  }
  return out.str();
}

}  // namespace tpis
