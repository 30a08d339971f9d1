#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tpis/domain.h"
#include "tpis/learners.h"
#include "tpis/matrix.h"

namespace tpis {

// Per-learner P(TB) outputs of one layer, in layer order. P(pneumonia) for
// learner j is 1 - probs[j].
struct VotePanel {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  friend bool operator==(const VotePanel&, const VotePanel&) = default;
};

struct ConfidencePolicy {
  // A learner counts toward a class when its probability for that class
  // exceeds epsilon. Below 0.5 a learner can count toward both classes.
  double epsilon = 0.4;
  // Patients with a confidence score strictly below this are routed.
  double route_threshold = 0.51;

  // Throws kInvalidArgument unless 0 < epsilon < 1 and route_threshold >= 0.
  void Validate() const;
  friend bool operator==(const ConfidencePolicy&, const ConfidencePolicy&) = default;
};

struct VoteTally {
  std::size_t tb = 0;
  std::size_t pneumonia = 0;
  friend bool operator==(const VoteTally&, const VoteTally&) = default;
};

enum class Verdict { kPneumonia, kTuberculosis, kUndetermined };

// "P", "TB", "undetermined".
std::string_view VerdictCode(Verdict verdict);
Verdict ToVerdict(Label label);

VoteTally TallyVotes(const VotePanel& panel, const ConfidencePolicy& policy);

// |tb - p| / (tb + p), or 0 when no learner clears epsilon for either class.
double ConfidenceScore(VoteTally tally);
inline double ConfidenceScore(const VotePanel& panel, const ConfidencePolicy& policy) {
  return ConfidenceScore(TallyVotes(panel, policy));
}

// Majority of the epsilon tallies; equal tallies are undetermined.
Verdict VoteLabel(VoteTally tally);
inline Verdict VoteLabel(const VotePanel& panel, const ConfidencePolicy& policy) {
  return VoteLabel(TallyVotes(panel, policy));
}

// Plain majority of hard votes (p >= 0.5 is a TB vote). Ties go to TB; with
// an odd number of voters there are none.
Label HardMajority(const VotePanel& panel);

double MeanProbability(const VotePanel& panel);

// An ordered set of learners fitted on the same feature dimension.
class EnsembleLayer {
 public:
  EnsembleLayer() = default;
  EnsembleLayer(std::vector<TrainedLearner> learners, std::size_t folds);

  const std::vector<TrainedLearner>& learners() const { return learners_; }
  std::size_t size() const { return learners_.size(); }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t folds() const { return folds_; }

  // probs[j] = learner j's PredictProba(x).
  VotePanel MetaFeatures(std::span<const double> x) const;
  Matrix MetaFeatures(const Matrix& x) const;

 private:
  std::vector<TrainedLearner> learners_;
  std::size_t folds_ = 0;
  std::size_t feature_count_ = 0;
};

struct LayerOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  // When false, no out-of-fold matrix is produced (meta stays empty).
  bool out_of_fold = true;
};

struct LayerFit {
  EnsembleLayer layer;
  // rows(X) x |specs|; entry (i, j) comes from learner j refitted without
  // the fold that holds row i.
  Matrix meta;
  std::vector<std::size_t> fold_of_row;
};

// Stratified fold assignment: each class is shuffled with `seed` and dealt
// round-robin over the folds. Throws kInvalidArgument for folds < 2 and
// kDegenerateFold when some fold would miss a class.
std::vector<std::size_t> StratifiedFolds(std::span<const Label> y, std::size_t folds,
                                         std::uint64_t seed);

// Fits every spec on all of (X, y) and builds the out-of-fold meta matrix.
// Needs at least two specs.
LayerFit FitLayer(std::span<const LearnerSpec> specs, const Matrix& x, std::span<const Label> y,
                  const LayerOptions& options);

}  // namespace tpis
