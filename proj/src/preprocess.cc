#include "tpis/preprocess.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tpis/error.h"
#include "tpis/rng.h"

namespace tpis {

ScalerState FitScaler(const Matrix& train) {
  if (train.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot fit scaler on empty matrix");
  ScalerState state;
  state.min.assign(train.cols(), 0.0);
  state.max.assign(train.cols(), 0.0);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    bool seen = false;
    for (std::size_t r = 0; r < train.rows(); ++r) {
      const double v = train(r, c);
      if (IsMissing(v)) continue;
      if (!seen) {
        state.min[c] = state.max[c] = v;
        seen = true;
      } else {
        state.min[c] = std::min(state.min[c], v);
        state.max[c] = std::max(state.max[c], v);
      }
    }
  }
  return state;
}

std::vector<double> ApplyScaler(const ScalerState& state, std::span<const double> x) {
  if (x.size() != state.size()) {
    throw Error(ErrorCode::kShapeError, "scaler expects " + std::to_string(state.size()) +
                                            " columns, got " + std::to_string(x.size()));
  }
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < x.size(); ++c) {
    if (IsMissing(x[c])) {
      out[c] = kMissing;
    } else if (state.IsConstant(c)) {
      out[c] = 0.0;
    } else {
      out[c] = std::clamp((x[c] - state.min[c]) / (state.max[c] - state.min[c]), 0.0, 1.0);
    }
  }
  return out;
}

Matrix ApplyScaler(const ScalerState& state, const Matrix& m) {
  Matrix out;
  for (std::size_t r = 0; r < m.rows(); ++r) out.AppendRow(ApplyScaler(state, m.row(r)));
  if (m.rows() == 0) out = Matrix(0, m.cols());
  return out;
}

double SortedQuantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::kInsufficientData, "quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxplotFences ComputeFences(std::span<const double> column) {
  std::vector<double> values;
  for (double v : column) {
    if (!IsMissing(v)) values.push_back(v);
  }
  if (values.size() < 4) {
    throw Error(ErrorCode::kInsufficientData,
                "boxplot needs at least 4 values, got " + std::to_string(values.size()));
  }
  std::sort(values.begin(), values.end());
  const double q1 = SortedQuantile(values, 0.25);
  const double q3 = SortedQuantile(values, 0.75);
  const double iqr = q3 - q1;
  return {q1 - 1.5 * iqr, q3 + 1.5 * iqr};
}

std::vector<std::size_t> FlagOutliersBoxplot(std::span<const double> column) {
  const BoxplotFences fences = ComputeFences(column);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double v = column[i];
    if (!IsMissing(v) && (v < fences.lower || v > fences.upper)) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> DropHighMissing(const Matrix& m, double threshold) {
  if (m.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "missing-rate filter on empty matrix");
  std::vector<std::size_t> retained;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::size_t missing = 0;
    for (std::size_t r = 0; r < m.rows(); ++r) missing += IsMissing(m(r, c)) ? 1 : 0;
    const double rate = static_cast<double>(missing) / static_cast<double>(m.rows());
    if (!(rate > threshold)) retained.push_back(c);
  }
  return retained;
}

Matrix ImputeKnn(const Matrix& target, const Matrix& donors, const ImputeOptions& options) {
  if (options.k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (target.cols() != donors.cols() && target.rows() > 0) {
    throw Error(ErrorCode::kShapeError, "target and donor widths differ");
  }
  const std::size_t cols = target.cols();
  if (!options.binary_columns.empty() && options.binary_columns.size() != cols) {
    throw Error(ErrorCode::kShapeError, "binary column mask has wrong width");
  }
  auto is_binary = [&](std::size_t c) {
    return !options.binary_columns.empty() && options.binary_columns[c];
  };

  for (std::size_t c = 0; c < cols; ++c) {
    bool observed = false;
    for (std::size_t r = 0; r < donors.rows() && !observed; ++r) observed = !IsMissing(donors(r, c));
    bool needed = false;
    for (std::size_t r = 0; r < target.rows() && !needed; ++r) needed = IsMissing(target(r, c));
    if (needed && !observed) {
      throw Error(ErrorCode::kUnimputableColumn,
                  "column " + std::to_string(c) + " has no observed value to impute from");
    }
  }

  Matrix out = target;
  std::vector<double> distance(donors.rows());
  std::vector<std::size_t> candidates;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    auto row = target.row(r);
    if (std::none_of(row.begin(), row.end(), IsMissing)) continue;
    if (std::all_of(row.begin(), row.end(), IsMissing)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "row " + std::to_string(r) + " has no observed feature");
    }
    for (std::size_t d = 0; d < donors.rows(); ++d) {
      double sum = 0.0;
      std::size_t shared = 0;
      for (std::size_t c = 0; c < cols; ++c) {
        const double a = row[c];
        const double b = donors(d, c);
        if (IsMissing(a) || IsMissing(b)) continue;
        sum += (a - b) * (a - b);
        ++shared;
      }
      distance[d] = shared == 0 ? kMissing : std::sqrt(sum / static_cast<double>(shared));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!IsMissing(row[c])) continue;
      candidates.clear();
      for (std::size_t d = 0; d < donors.rows(); ++d) {
        if (!IsMissing(distance[d]) && !IsMissing(donors(d, c))) candidates.push_back(d);
      }
      const std::size_t k = std::min(options.k, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                        candidates.end(), [&](std::size_t a, std::size_t b) {
                          return distance[a] < distance[b] ||
                                 (distance[a] == distance[b] && a < b);
                        });
      double value;
      if (is_binary(c)) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < k; ++i) ones += donors(candidates[i], c) >= 0.5 ? 1 : 0;
        value = (k > 0 && 2 * ones > k) ? 1.0 : 0.0;
      } else if (k > 0) {
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) sum += donors(candidates[i], c);
        value = sum / static_cast<double>(k);
      } else {
        // No donor shares an observed column with this row; use the column mean.
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t d = 0; d < donors.rows(); ++d) {
          if (!IsMissing(donors(d, c))) {
            sum += donors(d, c);
            ++n;
          }
        }
        value = sum / static_cast<double>(n);
      }
      out(r, c) = value;
    }
  }
  return out;
}

std::pair<Dataset, Dataset> BalancedSplit(const Dataset& dataset, const SplitSpec& spec) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!dataset[i].label) {
      throw Error(ErrorCode::kInvalidArgument,
                  "record '" + dataset[i].id + "' has no label; cannot split");
    }
    by_class[static_cast<int>(*dataset[i].label)].push_back(i);
  }
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < spec.train_per_class) {
      throw Error(ErrorCode::kInsufficientClassSize,
                  "class " + std::string(LabelCode(static_cast<Label>(c))) + " has " +
                      std::to_string(by_class[c].size()) + " records, need " +
                      std::to_string(spec.train_per_class));
    }
  }
  Rng rng(spec.seed);
  std::vector<bool> in_train(dataset.size(), false);
  for (int c = 0; c < 2; ++c) {
    auto& idx = by_class[c];
    rng.Shuffle(idx);
    for (std::size_t i = 0; i < spec.train_per_class; ++i) in_train[idx[i]] = true;
  }
  std::pair<Dataset, Dataset> out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_train[i] ? out.first : out.second).push_back(dataset[i]);
  }
  return out;
}

BlockPreprocessor BlockPreprocessor::Fit(const Matrix& raw, std::vector<std::string> names,
                                         std::vector<bool> binary, const Options& options) {
  if (raw.rows() == 0) throw Error(ErrorCode::kEmptyDataset, "cannot fit preprocessing on no rows");
  if (names.size() != raw.cols() || binary.size() != raw.cols()) {
    throw Error(ErrorCode::kShapeError, "column metadata does not match block width");
  }
  BlockPreprocessor prep;
  prep.column_names = std::move(names);
  prep.binary_columns = std::move(binary);
  prep.impute_k = options.impute_k;
  prep.retained = DropHighMissing(raw, options.missing_threshold);
  if (prep.retained.empty()) {
    throw Error(ErrorCode::kInsufficientData, "every column exceeds the missing-rate threshold");
  }

  const Matrix kept = raw.SelectColumns(prep.retained);
  prep.fences.assign(prep.retained.size(), std::nullopt);
  if (options.flag_outliers) {
    for (std::size_t j = 0; j < prep.retained.size(); ++j) {
      if (prep.binary_columns[prep.retained[j]]) continue;
      const auto column = kept.column(j);
      const auto observed = std::count_if(column.begin(), column.end(),
                                          [](double v) { return !IsMissing(v); });
      if (observed >= 4) prep.fences[j] = ComputeFences(column);
    }
  }
  Matrix cleaned = prep.Clean(kept);
  prep.scaler = FitScaler(cleaned);
  prep.donors = ApplyScaler(prep.scaler, cleaned);
  return prep;
}

Matrix BlockPreprocessor::Clean(const Matrix& kept) const {
  Matrix out = kept;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double v = out(r, j);
      if (fences[j] && !IsMissing(v) && (v < fences[j]->lower || v > fences[j]->upper)) {
        out(r, j) = kMissing;
      }
    }
  }
  return out;
}

std::vector<std::string> BlockPreprocessor::OutputNames() const {
  std::vector<std::string> out;
  for (std::size_t c : retained) out.push_back(column_names[c]);
  return out;
}

std::vector<double> BlockPreprocessor::Transform(std::span<const double> raw) const {
  Matrix m;
  m.AppendRow(raw);
  Matrix t = Transform(m);
  return {t.row(0).begin(), t.row(0).end()};
}

Matrix BlockPreprocessor::Transform(const Matrix& raw) const {
  if (raw.cols() != column_names.size()) {
    throw Error(ErrorCode::kShapeError, "block expects " + std::to_string(column_names.size()) +
                                            " columns, got " + std::to_string(raw.cols()));
  }
  const Matrix scaled = ApplyScaler(scaler, Clean(raw.SelectColumns(retained)));
  ImputeOptions options;
  options.k = impute_k;
  for (std::size_t c : retained) options.binary_columns.push_back(binary_columns[c]);
  return ImputeKnn(scaled, donors, options);
}

bool operator==(const BlockPreprocessor& a, const BlockPreprocessor& b) {
  if (a.fences.size() != b.fences.size()) return false;
  for (std::size_t i = 0; i < a.fences.size(); ++i) {
    if (a.fences[i].has_value() != b.fences[i].has_value()) return false;
    if (a.fences[i] && (a.fences[i]->lower != b.fences[i]->lower ||
                        a.fences[i]->upper != b.fences[i]->upper)) {
      return false;
    }
  }
  return a.column_names == b.column_names && a.binary_columns == b.binary_columns &&
         a.retained == b.retained && a.scaler.min == b.scaler.min &&
         a.scaler.max == b.scaler.max && a.donors == b.donors && a.impute_k == b.impute_k;
}

Matrix StepOneMatrix(const Dataset& dataset) {
  Matrix m(0, kStepOneFeatureCount);
  for (const auto& r : dataset) m.AppendRow(r.step1.values);
  return m;
}

Matrix StepTwoMatrix(const Dataset& dataset) {
  Matrix m(0, kStepTwoFeatureCount);
  for (const auto& r : dataset) {
    if (!r.step2) {
      throw Error(ErrorCode::kStepTwoUnavailable, "record '" + r.id + "' has no step-2 features");
    }
    m.AppendRow(r.step2->values);
  }
  return m;
}

namespace {

template <std::size_t N>
std::vector<std::string> Names(const std::array<std::string_view, N>& names) {
  return {names.begin(), names.end()};
}

}  // namespace

BlockPreprocessor FitStepOnePreprocessor(const Dataset& train,
                                         const BlockPreprocessor::Options& options) {
  std::vector<bool> binary(kStepOneFeatureCount);
  for (std::size_t i = 0; i < kStepOneFeatureCount; ++i) binary[i] = IsStepOneBinary(i);
  return BlockPreprocessor::Fit(StepOneMatrix(train), Names(kStepOneFeatureNames),
                                std::move(binary), options);
}

BlockPreprocessor FitStepTwoPreprocessor(const Dataset& train,
                                         const BlockPreprocessor::Options& options) {
  std::vector<bool> binary(kStepTwoFeatureCount);
  for (std::size_t i = 0; i < kStepTwoFeatureCount; ++i) binary[i] = IsStepTwoBinary(i);
  return BlockPreprocessor::Fit(StepTwoMatrix(train), Names(kStepTwoFeatureNames),
                                std::move(binary), options);
}

}  // namespace tpis
