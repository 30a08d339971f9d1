#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace tpis {

// Missing cells are stored as quiet NaN throughout the library.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool IsMissing(double v) { return std::isnan(v); }

// Bitwise-style equality that treats two missing markers as equal.
inline bool SameValue(double a, double b) {
  return (IsMissing(a) && IsMissing(b)) || a == b;
}

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix FromRows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;

  // The first appended row fixes the column count of an empty matrix.
  void AppendRow(std::span<const double> values);

  Matrix SelectRows(std::span<const std::size_t> rows) const;
  Matrix SelectColumns(std::span<const std::size_t> cols) const;

  // Horizontal concatenation [left | right]; row counts must agree.
  static Matrix HConcat(const Matrix& left, const Matrix& right);

  const std::vector<double>& data() const { return data_; }

  bool HasMissing() const;

  friend bool operator==(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace tpis
