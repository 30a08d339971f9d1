#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpis/domain.h"
#include "tpis/matrix.h"

namespace tpis {

// Per-column min/max learned on training data. Missing cells are ignored;
// a column with no observed value gets min = max = 0.
struct ScalerState {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const { return min.size(); }
  bool IsConstant(std::size_t column) const { return max[column] == min[column]; }
};

ScalerState FitScaler(const Matrix& train);

// (x - min) / (max - min) clamped to [0, 1]; constant columns map to 0 and
// missing cells stay missing.
std::vector<double> ApplyScaler(const ScalerState& state, std::span<const double> x);
Matrix ApplyScaler(const ScalerState& state, const Matrix& m);

// Quantile of already-sorted values by linear interpolation between order
// statistics: position h = (n - 1) q.
double SortedQuantile(std::span<const double> sorted, double q);

struct BoxplotFences {
  double lower;
  double upper;
};

// Whiskers Q1 - 1.5 IQR and Q3 + 1.5 IQR over the non-missing values.
// Throws kInsufficientData with fewer than four observed values.
BoxplotFences ComputeFences(std::span<const double> column);

// Row indices (ascending) whose value lies strictly outside the whiskers.
std::vector<std::size_t> FlagOutliersBoxplot(std::span<const double> column);

// Columns whose missing fraction is <= threshold (a column is dropped only
// when strictly more than `threshold` of its cells are missing).
std::vector<std::size_t> DropHighMissing(const Matrix& m, double threshold = 0.30);

struct ImputeOptions {
  std::size_t k = 5;
  // Per column; binary columns take the neighbours' majority (ties and the
  // no-neighbour case resolve to 0), numeric columns the neighbours' mean.
  std::vector<bool> binary_columns;
};

// Fills every missing cell of `target` from the k nearest rows of `donors`
// that observe the column. Distance is the Euclidean distance over the
// columns observed in both rows, divided by the square root of the number of
// such columns; rows sharing no observed column are never neighbours. Ties
// in distance go to the lower donor index. A target row never serves as its
// own donor for a cell it is missing, so ImputeKnn(m, m, ...) is the usual
// in-sample imputation.
//
// Throws kUnimputableColumn for a column with no observed donor value and
// kInvalidArgument for a target row with no observed cell.
Matrix ImputeKnn(const Matrix& target, const Matrix& donors, const ImputeOptions& options);

inline Matrix ImputeKnn(const Matrix& m, const ImputeOptions& options) {
  return ImputeKnn(m, m, options);
}

struct SplitSpec {
  std::size_t train_per_class = 60;
  std::uint64_t seed = 0;
};

// Draws exactly train_per_class records per class without replacement; the
// test set is everything else. Both keep the input order. Throws
// kInsufficientClassSize when a class is too small.
std::pair<Dataset, Dataset> BalancedSplit(const Dataset& dataset, const SplitSpec& spec);

// Cleaning chain for one feature block (step-1 or step-2):
//   1. drop columns with > missing_threshold missing cells
//   2. boxplot fences on numeric columns; cells outside become missing
//   3. min-max scaling fitted on the cleaned training block
//   4. KNN imputation against the scaled training rows
// The fitted state is enough to transform unseen records identically.
struct BlockPreprocessor {
  struct Options {
    double missing_threshold = 0.30;
    std::size_t impute_k = 5;
    bool flag_outliers = true;
  };

  std::vector<std::string> column_names;   // full block, before dropping
  std::vector<bool> binary_columns;        // full block
  std::vector<std::size_t> retained;       // indices into the full block
  std::vector<std::optional<BoxplotFences>> fences;  // per retained column
  ScalerState scaler;                      // per retained column
  Matrix donors;                           // scaled training rows, may hold missing
  std::size_t impute_k = 5;

  static BlockPreprocessor Fit(const Matrix& raw, std::vector<std::string> names,
                               std::vector<bool> binary, const Options& options);

  std::size_t output_width() const { return retained.size(); }
  std::vector<std::string> OutputNames() const;

  // Input rows have the full block width; output rows have output_width().
  std::vector<double> Transform(std::span<const double> raw) const;
  Matrix Transform(const Matrix& raw) const;

  friend bool operator==(const BlockPreprocessor&, const BlockPreprocessor&);

 private:
  Matrix Clean(const Matrix& raw) const;
};

// Raw step-1 / step-2 blocks of a dataset, one row per record.
Matrix StepOneMatrix(const Dataset& dataset);
Matrix StepTwoMatrix(const Dataset& dataset);  // kStepTwoUnavailable if absent

BlockPreprocessor FitStepOnePreprocessor(const Dataset& train,
                                         const BlockPreprocessor::Options& options);
BlockPreprocessor FitStepTwoPreprocessor(const Dataset& train,
                                         const BlockPreprocessor::Options& options);

}  // namespace tpis
