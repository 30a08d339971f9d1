#include "tpis/metrics.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_util.h"

namespace tpis {
namespace {

constexpr Label P = Label::kPneumonia;
constexpr Label TB = Label::kTuberculosis;

TEST(ConfusionTest, CountsWithTbPositive) {
  const std::vector<Label> truth = {TB, TB, TB, P, P};
  const std::vector<Label> pred = {TB, P, TB, TB, P};
  const ConfusionMatrix cm = Confusion(truth, pred);
  EXPECT_EQ(cm, (ConfusionMatrix{2, 1, 1, 1}));
}

TEST(ConfusionTest, LengthMismatch) {
  const std::vector<Label> a = {TB, P};
  const std::vector<Label> b = {TB};
  EXPECT_TPIS_ERROR(Confusion(a, b), ErrorCode::kShapeError);
}

TEST(BasicMetricsTest, Example) {
  const BasicMetrics m = ComputeBasicMetrics({2, 1, 1, 1});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.f_score, 2.0 / 3.0);
}

TEST(BasicMetricsTest, NoPositivePredictions) {
  const BasicMetrics m = ComputeBasicMetrics({0, 0, 3, 5});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_TRUE(m.precision_degenerate);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_FALSE(m.recall_degenerate);
  EXPECT_TRUE(m.f_score_degenerate);
}

TEST(BasicMetricsTest, EmptyMatrix) {
  EXPECT_TPIS_ERROR(ComputeBasicMetrics({}), ErrorCode::kEmptyEvaluation);
}

TEST(BasicMetricsTest, RangesOverAllSmallMatrices) {
  for (std::size_t tp = 0; tp < 5; ++tp)
    for (std::size_t fp = 0; fp < 5; ++fp)
      for (std::size_t fn = 0; fn < 5; ++fn)
        for (std::size_t tn = 0; tn < 5; ++tn) {
          const ConfusionMatrix cm{tp, fp, fn, tn};
          if (cm.total() == 0) continue;
          const BasicMetrics m = ComputeBasicMetrics(cm);
          for (double v : {m.accuracy, m.precision, m.recall, m.f_score}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
          }
          EXPECT_EQ(m.precision_degenerate, tp + fp == 0);
          EXPECT_EQ(m.recall_degenerate, tp + fn == 0);
        }
}

TEST(RocAucTest, PerfectAndInverted) {
  const std::vector<Label> y = {P, P, TB, TB};
  const std::vector<double> good = {0.1, 0.2, 0.8, 0.9};
  const std::vector<double> bad = {0.9, 0.8, 0.2, 0.1};
  EXPECT_DOUBLE_EQ(RocAuc(good, y).auc, 1.0);
  EXPECT_DOUBLE_EQ(RocAuc(bad, y).auc, 0.0);
}

TEST(RocAucTest, AllTiedIsHalf) {
  const std::vector<Label> y = {P, TB, P, TB, TB};
  const std::vector<double> s(5, 0.3);
  const RocResult r = RocAuc(s, y);
  EXPECT_DOUBLE_EQ(r.auc, 0.5);
  ASSERT_EQ(r.curve.size(), 2u);
}

TEST(RocAucTest, SmallExample) {
  // Pairs (TB, P): 0.8>0.3, 0.8>0.6, 0.4>0.3, 0.4<0.6 -> 3 of 4.
  const std::vector<Label> y = {TB, P, TB, P};
  const std::vector<double> s = {0.8, 0.3, 0.4, 0.6};
  EXPECT_DOUBLE_EQ(RocAuc(s, y).auc, 0.75);
}

TEST(RocAucTest, OneClassThrows) {
  const std::vector<Label> y = {P, P};
  const std::vector<double> s = {0.1, 0.2};
  EXPECT_TPIS_ERROR(RocAuc(s, y), ErrorCode::kDegenerateLabels);
}

// Pairwise (Mann-Whitney) statistic with ties counted as one half.
double PairwiseAuc(const std::vector<double>& s, const std::vector<Label>& y) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != TB) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != P) continue;
      pairs += 1;
      wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return wins / pairs;
}

TEST(RocAucTest, MatchesPairwiseOracleOnSmallInputs) {
  Rng rng(61);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.UniformIndex(19);
    std::vector<double> s(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = double(rng.UniformIndex(6)) / 5.0;  // plenty of ties
      y[i] = rng.Bernoulli(0.5) ? TB : P;
    }
    y[0] = TB;
    y[1] = P;
    EXPECT_NEAR(RocAuc(s, y).auc, PairwiseAuc(s, y), 1e-12) << "trial " << trial;
  }
}

TEST(RocAucTest, MatchesPairwiseOracleOnLargeInput) {
  Rng rng(62);
  std::vector<double> s(1000);
  std::vector<Label> y(1000);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = rng.Bernoulli(0.4) ? TB : P;
    s[i] = rng.Uniform() + (y[i] == TB ? 0.3 : 0.0);
  }
  EXPECT_NEAR(RocAuc(s, y).auc, PairwiseAuc(s, y), 1e-12);
}

TEST(RocAucTest, CurveIsMonotoneFromOriginToCorner) {
  Rng rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(40);
    std::vector<Label> y(40);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = double(rng.UniformIndex(10));
      y[i] = rng.Bernoulli(0.5) ? TB : P;
    }
    y[0] = TB;
    y[1] = P;
    const RocResult r = RocAuc(s, y);
    EXPECT_EQ(r.curve.front().fpr, 0.0);
    EXPECT_EQ(r.curve.front().tpr, 0.0);
    EXPECT_EQ(r.curve.back().fpr, 1.0);
    EXPECT_EQ(r.curve.back().tpr, 1.0);
    for (std::size_t k = 1; k < r.curve.size(); ++k) {
      EXPECT_GE(r.curve[k].fpr, r.curve[k - 1].fpr);
      EXPECT_GE(r.curve[k].tpr, r.curve[k - 1].tpr);
    }
  }
}

TEST(SummarizeTest, SingleRunHasZeroHalfWidth) {
  const std::vector<double> v = {0.7};
  const MetricSummary s = Summarize(v);
  EXPECT_EQ(s.mean, 0.7);
  EXPECT_EQ(s.half_width, 0.0);
}

TEST(SummarizeTest, ConstantRuns) {
  const std::vector<double> v(30, 0.8);
  const MetricSummary s = Summarize(v);
  EXPECT_DOUBLE_EQ(s.mean, 0.8);
  EXPECT_NEAR(s.half_width, 0.0, 1e-15);
}

TEST(SummarizeTest, AlternatingSigns) {
  for (std::size_t r : {2u, 4u, 10u, 30u}) {
    std::vector<double> v(r);
    for (std::size_t i = 0; i < r; ++i) v[i] = i % 2 ? -1.0 : 1.0;
    const MetricSummary s = Summarize(v);
    EXPECT_NEAR(s.mean, 0.0, 1e-15);
    EXPECT_NEAR(s.half_width, 1.96 / std::sqrt(double(r) - 1.0), 1e-12) << r;
  }
}

TEST(SummarizeTest, EmptyThrows) {
  EXPECT_TPIS_ERROR(Summarize(std::vector<double>{}), ErrorCode::kEmptyEvaluation);
}

}  // namespace
}  // namespace tpis
