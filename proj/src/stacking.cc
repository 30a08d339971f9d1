#include "tpis/stacking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tpis/error.h"
#include "tpis/rng.h"

namespace tpis {

void ConfidencePolicy::Validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  }
  if (!(route_threshold >= 0.0) || !std::isfinite(route_threshold)) {
    throw Error(ErrorCode::kInvalidArgument, "route_threshold must be a finite value >= 0");
  }
}

std::string_view VerdictCode(Verdict verdict) {
  switch (verdict) {
    case Verdict::kPneumonia: return "P";
    case Verdict::kTuberculosis: return "TB";
    case Verdict::kUndetermined: return "undetermined";
  }
  return "?";
}

Verdict ToVerdict(Label label) {
  return label == Label::kTuberculosis ? Verdict::kTuberculosis : Verdict::kPneumonia;
}

VoteTally TallyVotes(const VotePanel& panel, const ConfidencePolicy& policy) {
  VoteTally tally;
  for (double p : panel.probs) {
    if (p > policy.epsilon) ++tally.tb;
    if (1.0 - p > policy.epsilon) ++tally.pneumonia;
  }
  return tally;
}

double ConfidenceScore(VoteTally tally) {
  const std::size_t total = tally.tb + tally.pneumonia;
  if (total == 0) return 0.0;
  const std::size_t diff = tally.tb > tally.pneumonia ? tally.tb - tally.pneumonia
                                                      : tally.pneumonia - tally.tb;
  return static_cast<double>(diff) / static_cast<double>(total);
}

Verdict VoteLabel(VoteTally tally) {
  if (tally.tb > tally.pneumonia) return Verdict::kTuberculosis;
  if (tally.pneumonia > tally.tb) return Verdict::kPneumonia;
  return Verdict::kUndetermined;
}

Label HardMajority(const VotePanel& panel) {
  std::size_t tb = 0;
  for (double p : panel.probs) tb += HardLabel(p) == Label::kTuberculosis ? 1 : 0;
  return 2 * tb >= panel.size() ? Label::kTuberculosis : Label::kPneumonia;
}

double MeanProbability(const VotePanel& panel) {
  if (panel.probs.empty()) return 0.5;
  return std::accumulate(panel.probs.begin(), panel.probs.end(), 0.0) /
         static_cast<double>(panel.size());
}

EnsembleLayer::EnsembleLayer(std::vector<TrainedLearner> learners, std::size_t folds)
    : learners_(std::move(learners)), folds_(folds) {
  if (learners_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "an ensemble layer needs at least two learners");
  }
  feature_count_ = learners_.front()->feature_count();
  for (const auto& l : learners_) {
    if (l->feature_count() != feature_count_) {
      throw Error(ErrorCode::kShapeError, "layer learners disagree on feature count");
    }
  }
}

VotePanel EnsembleLayer::MetaFeatures(std::span<const double> x) const {
  if (x.size() != feature_count_) {
    throw Error(ErrorCode::kShapeError, "layer expects " + std::to_string(feature_count_) +
                                            " features, got " + std::to_string(x.size()));
  }
  VotePanel panel;
  panel.probs.reserve(learners_.size());
  for (const auto& l : learners_) panel.probs.push_back(l->PredictProba(x));
  return panel;
}

Matrix EnsembleLayer::MetaFeatures(const Matrix& x) const {
  Matrix out(x.rows(), learners_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const VotePanel panel = MetaFeatures(x.row(r));
    std::copy(panel.probs.begin(), panel.probs.end(), out.row(r).begin());
  }
  return out;
}

std::vector<std::size_t> StratifiedFolds(std::span<const Label> y, std::size_t folds,
                                         std::uint64_t seed) {
  if (folds < 2) {
    throw Error(ErrorCode::kInvalidArgument, "out-of-fold stacking needs at least 2 folds");
  }
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<int>(y[i])].push_back(i);
  for (const auto& members : by_class) {
    if (members.size() < folds) {
      throw Error(ErrorCode::kDegenerateFold,
                  "a class has " + std::to_string(members.size()) + " rows, fewer than " +
                      std::to_string(folds) + " folds");
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> fold(y.size());
  for (auto& members : by_class) {
    rng.Shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) fold[members[i]] = i % folds;
  }
  return fold;
}

LayerFit FitLayer(std::span<const LearnerSpec> specs, const Matrix& x, std::span<const Label> y,
                  const LayerOptions& options) {
  if (specs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "an ensemble layer needs at least two learners");
  }
  if (x.rows() != y.size()) throw Error(ErrorCode::kShapeError, "X and y row counts differ");
  LayerFit fit;
  if (options.out_of_fold) {
    fit.fold_of_row = StratifiedFolds(y, options.folds, options.seed);
    fit.meta = Matrix(x.rows(), specs.size());
    for (std::size_t f = 0; f < options.folds; ++f) {
      std::vector<std::size_t> train_rows, held_rows;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        (fit.fold_of_row[i] == f ? held_rows : train_rows).push_back(i);
      }
      const Matrix train_x = x.SelectRows(train_rows);
      std::vector<Label> train_y;
      for (std::size_t i : train_rows) train_y.push_back(y[i]);
      for (std::size_t j = 0; j < specs.size(); ++j) {
        const TrainedLearner learner = Fit(specs[j], train_x, train_y);
        for (std::size_t i : held_rows) fit.meta(i, j) = learner->PredictProba(x.row(i));
      }
    }
  }
  std::vector<TrainedLearner> learners;
  for (const auto& spec : specs) learners.push_back(Fit(spec, x, y));
  fit.layer = EnsembleLayer(std::move(learners), options.folds);
  return fit;
}

}  // namespace tpis
