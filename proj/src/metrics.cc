#include "tpis/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tpis/error.h"

namespace tpis {

ConfusionMatrix Confusion(std::span<const Label> truth, std::span<const Label> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kShapeError, "truth and prediction lengths differ (" +
                                            std::to_string(truth.size()) + " vs " +
                                            std::to_string(predicted.size()) + ")");
  }
  if (truth.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no records to evaluate");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == Label::kTuberculosis;
    const bool guess = predicted[i] == Label::kTuberculosis;
    if (actual && guess) ++cm.tp;
    else if (!actual && guess) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

BasicMetrics ComputeBasicMetrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyEvaluation, "empty confusion matrix");
  BasicMetrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp == 0) {
    m.precision_degenerate = true;
  } else {
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  }
  if (cm.tp + cm.fn == 0) {
    m.recall_degenerate = true;
  } else {
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  }
  if (m.precision + m.recall == 0.0) {
    m.f_score_degenerate = true;
  } else {
    m.f_score = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

RocResult RocAuc(std::span<const double> scores, std::span<const Label> truth) {
  if (scores.size() != truth.size()) {
    throw Error(ErrorCode::kShapeError, "scores and labels lengths differ");
  }
  const auto positives = static_cast<std::size_t>(
      std::count(truth.begin(), truth.end(), Label::kTuberculosis));
  const std::size_t negatives = truth.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kDegenerateLabels, "ROC needs both classes");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocResult result;
  result.curve.push_back({0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (truth[order[i]] == Label::kTuberculosis ? tp : fp) += 1;
      ++i;
    }
    result.curve.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  for (std::size_t k = 1; k < result.curve.size(); ++k) {
    const auto& a = result.curve[k - 1];
    const auto& b = result.curve[k];
    result.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return result;
}

MetricSummary Summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no values to summarize");
  MetricSummary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

}  // namespace tpis
