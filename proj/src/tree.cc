#include "tpis/tree.h"

#include <algorithm>
#include <numeric>
#include <string>

#include "tpis/error.h"

namespace tpis {

const TreeNode& Tree::Leaf(std::span<const double> x) const {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "empty tree");
  const TreeNode* node = &nodes_[0];
  while (!node->is_leaf()) {
    node = &nodes_[x[node->feature] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    depth[n.left] = depth[n.right] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

nlohmann::json Tree::ToJson() const {
  // Columnar layout keeps archives compact.
  nlohmann::json j;
  std::vector<int> feature, left, right;
  std::vector<double> threshold, value;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
  }
  j["feature"] = feature;
  j["threshold"] = threshold;
  j["left"] = left;
  j["right"] = right;
  j["value"] = value;
  return j;
}

Tree Tree::FromJson(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
      n == 0) {
    throw Error(ErrorCode::kArchiveError, "inconsistent tree arrays");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = nodes[i];
    node.feature = feature[i];
    node.threshold = threshold[i];
    node.left = left[i];
    node.right = right[i];
    node.value = value[i];
    if (!node.is_leaf()) {
      const auto ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
      if (!ok(node.left) || !ok(node.right)) {
        throw Error(ErrorCode::kArchiveError, "tree child index out of range");
      }
    }
  }
  return Tree(std::move(nodes));
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
};

// Sorted (value, row) pairs for one feature over a node's rows.
void SortByFeature(const Matrix& x, std::span<const std::size_t> rows, int feature,
                   std::vector<std::size_t>& order) {
  order.assign(rows.begin(), rows.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x(a, feature) < x(b, feature);
  });
}

std::vector<int> CandidateFeatures(std::size_t cols, std::size_t max_features, Rng* rng) {
  std::vector<int> features(cols);
  std::iota(features.begin(), features.end(), 0);
  if (max_features == 0 || max_features >= cols) return features;
  if (rng == nullptr) throw Error(ErrorCode::kInvalidArgument, "feature subsampling needs an Rng");
  rng->Shuffle(features);
  features.resize(max_features);
  std::sort(features.begin(), features.end());
  return features;
}

class ClassificationGrower {
 public:
  ClassificationGrower(const Matrix& x, std::span<const std::uint8_t> y,
                       std::span<const double> weights, const ClassificationTreeOptions& options,
                       Rng* rng)
      : x_(x), y_(y), weights_(weights), options_(options), rng_(rng) {}

  Tree Grow(std::span<const std::size_t> rows) {
    std::vector<std::size_t> all(rows.begin(), rows.end());
    Build(std::move(all), 0);
    return Tree(std::move(nodes_));
  }

 private:
  double W(std::size_t row) const { return weights_.empty() ? 1.0 : weights_[row]; }

  int Build(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double total = 0.0, positive = 0.0;
    for (std::size_t r : rows) {
      total += W(r);
      positive += y_[r] ? W(r) : 0.0;
    }
    {
      TreeNode& node = nodes_[id];
      node.weight = total;
      node.positive_weight = positive;
      node.samples = rows.size();
      node.impurity = Gini(positive, total);
      node.value = total > 0.0 || options_.laplace > 0.0
                       ? (positive + options_.laplace) / (total + 2.0 * options_.laplace)
                       : 0.5;
    }
    const double impurity = nodes_[id].impurity;
    if (depth >= options_.max_depth || impurity <= 0.0 ||
        rows.size() < 2 * options_.min_leaf) {
      return id;
    }

    SplitChoice best;
    best.score = impurity;
    std::vector<std::size_t> order;
    for (int f : CandidateFeatures(x_.cols(), options_.max_features, rng_)) {
      SortByFeature(x_, rows, f, order);
      double left_w = 0.0, left_pos = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_w += W(order[i]);
        left_pos += y_[order[i]] ? W(order[i]) : 0.0;
        const double a = x_(order[i], f);
        const double b = x_(order[i + 1], f);
        if (!(a < b)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < options_.min_leaf || order.size() - n_left < options_.min_leaf) continue;
        const double right_w = total - left_w;
        const double right_pos = positive - left_pos;
        if (total <= 0.0) continue;
        const double child =
            (left_w * Gini(left_pos, left_w) + right_w * Gini(right_pos, right_w)) / total;
        if (child < best.score - 1e-12) {
          best.feature = f;
          best.threshold = a + (b - a) / 2.0;
          best.score = child;
        }
      }
    }
    if (best.feature < 0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int left = Build(std::move(left_rows), depth + 1);
    const int right = Build(std::move(right_rows), depth + 1);
    TreeNode& node = nodes_[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const Matrix& x_;
  std::span<const std::uint8_t> y_;
  std::span<const double> weights_;
  const ClassificationTreeOptions& options_;
  Rng* rng_;
  std::vector<TreeNode> nodes_;
};

class NewtonGrower {
 public:
  NewtonGrower(const Matrix& x, std::span<const double> g, std::span<const double> h,
               const NewtonTreeOptions& options)
      : x_(x), g_(g), h_(h), options_(options) {}

  Tree Grow(std::span<const std::size_t> rows) {
    Build({rows.begin(), rows.end()}, 0);
    return Tree(std::move(nodes_));
  }

 private:
  double Score(double g, double h) const { return g * g / (h + options_.l2); }

  int Build(std::vector<std::size_t> rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double g = 0.0, h = 0.0;
    for (std::size_t r : rows) {
      g += g_[r];
      h += h_[r];
    }
    {
      TreeNode& node = nodes_[id];
      node.samples = rows.size();
      node.weight = h;
      node.value = g / (std::max(h, options_.min_hessian) + options_.l2);
    }
    if (depth >= options_.max_depth || rows.size() < 2 * options_.min_leaf) return id;

    const double parent = Score(g, std::max(h, options_.min_hessian));
    SplitChoice best;
    best.score = 1e-12;
    std::vector<std::size_t> order;
    for (int f = 0; f < static_cast<int>(x_.cols()); ++f) {
      SortByFeature(x_, rows, f, order);
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        gl += g_[order[i]];
        hl += h_[order[i]];
        const double a = x_(order[i], f);
        const double b = x_(order[i + 1], f);
        if (!(a < b)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < options_.min_leaf || order.size() - n_left < options_.min_leaf) continue;
        const double gain = Score(gl, std::max(hl, options_.min_hessian)) +
                            Score(g - gl, std::max(h - hl, options_.min_hessian)) - parent;
        if (gain > best.score) {
          best.feature = f;
          best.threshold = a + (b - a) / 2.0;
          best.score = gain;
        }
      }
    }
    if (best.feature < 0) return id;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
      (x_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    const int left = Build(std::move(left_rows), depth + 1);
    const int right = Build(std::move(right_rows), depth + 1);
    TreeNode& node = nodes_[id];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  const Matrix& x_;
  std::span<const double> g_;
  std::span<const double> h_;
  const NewtonTreeOptions& options_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

Tree GrowClassificationTree(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const double> weights,
                            std::span<const std::size_t> rows,
                            const ClassificationTreeOptions& options, Rng* rng) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "tree needs at least one row");
  return ClassificationGrower(x, y, weights, options, rng).Grow(rows);
}

Tree GrowNewtonTree(const Matrix& x, std::span<const double> gradient,
                    std::span<const double> hessian, std::span<const std::size_t> rows,
                    const NewtonTreeOptions& options) {
  if (rows.empty()) throw Error(ErrorCode::kInvalidArgument, "tree needs at least one row");
  return NewtonGrower(x, gradient, hessian, options).Grow(rows);
}

}  // namespace tpis
