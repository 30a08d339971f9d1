#pragma once

#include <span>
#include <vector>

#include "tpis/domain.h"

namespace tpis {

// TB is the positive class.
ConfusionMatrix Confusion(std::span<const Label> truth, std::span<const Label> predicted);

struct BasicMetrics {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f_score = 0;
  // Set when the ratio had a zero denominator; the value is then reported as 0.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f_score_degenerate = false;
};

// Throws kEmptyEvaluation when the matrix is empty.
BasicMetrics ComputeBasicMetrics(const ConfusionMatrix& cm);

struct RocPoint {
  double fpr;
  double tpr;
};

struct RocResult {
  std::vector<RocPoint> curve;  // from (0,0) to (1,1)
  double auc = 0;
};

// Sweeps descending unique score thresholds; tied scores move both rates in
// one step, so the trapezoid area counts ties as one half. Throws
// kDegenerateLabels unless both classes are present.
RocResult RocAuc(std::span<const double> scores, std::span<const Label> truth);

struct MetricSummary {
  double mean = 0;
  double half_width = 0;  // 1.96 * sample sd / sqrt(R); 0 for a single run
};

MetricSummary Summarize(std::span<const double> values);

}  // namespace tpis
