#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "tpis/error.h"
#include "tpis/pipeline.h"
#include "tpis/rng.h"
#include "tpis/synthgen.h"

namespace tpis::testing {

// Asserts that `stmt` throws tpis::Error with the given code.
#define EXPECT_TPIS_ERROR(stmt, expected_code)                                    \
  do {                                                                            \
    try {                                                                         \
      stmt;                                                                       \
      ADD_FAILURE() << "expected " << ::tpis::ErrorCodeName(expected_code);       \
    } catch (const ::tpis::Error& e) {                                            \
      EXPECT_EQ(e.code(), expected_code) << e.what();                             \
    }                                                                             \
  } while (0)

inline Matrix RandomMatrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.Uniform();
  }
  return m;
}

// Labels from a noisy linear rule, with both classes guaranteed.
inline std::vector<Label> NoisyLabels(const Matrix& x, Rng& rng) {
  std::vector<Label> y;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += (c % 2 ? -1.0 : 1.0) * x(r, c);
    s += 0.3 * rng.Normal();
    y.push_back(s > 0.0 ? Label::kTuberculosis : Label::kPneumonia);
  }
  y[0] = Label::kTuberculosis;
  y[1] = Label::kPneumonia;
  return y;
}

inline const Dataset& Cohort199() {
  static const Dataset d = SampleCohort(DefaultSpec(), 199, 7, true);
  return d;
}

// Default-config model on Cohort199(); fitted once per test binary.
inline const TpisModel& DefaultModel() {
  static const TpisModel m = FitTpis(Cohort199(), DefaultTpisConfig(7));
  return m;
}

inline StepOneFeatures RandomStepOne(Rng& rng) {
  StepOneFeatures f;
  f.values[0] = std::round(15.0 + 85.0 * rng.Uniform());
  for (std::size_t i = 1; i < kStepOneFeatureCount; ++i) f.values[i] = rng.Bernoulli(0.4);
  return f;
}

inline StepTwoFeatures RandomStepTwo(Rng& rng) {
  StepTwoFeatures f;
  const double lo[] = {3, 6, 22, 55, 8, 4, 0, 0};
  const double hi[] = {27, 20, 60, 100, 100, 78, 7, 124};
  for (std::size_t i = 0; i < 8; ++i) f.values[i] = lo[i] + (hi[i] - lo[i]) * rng.Uniform();
  f.values[8] = rng.Bernoulli(0.9);
  f.values[9] = rng.Bernoulli(0.9);
  return f;
}

}  // namespace tpis::testing
