#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "tpis/matrix.h"
#include "tpis/rng.h"

namespace tpis {

// Binary decision tree over dense features. Rows with x[feature] <= threshold
// descend left. Leaves carry the prediction in `value`.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  // Training statistics: weighted mass, weighted positive mass and impurity.
  double weight = 0.0;
  double positive_weight = 0.0;
  double impurity = 0.0;
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& Leaf(std::span<const double> x) const;
  double Predict(std::span<const double> x) const { return Leaf(x).value; }
  int depth() const;

  nlohmann::json ToJson() const;
  static Tree FromJson(const nlohmann::json& j);

 private:
  std::vector<TreeNode> nodes_;
};

struct ClassificationTreeOptions {
  int max_depth = 6;
  std::size_t min_leaf = 2;
  // 0 = every feature at every split; otherwise this many features drawn
  // without replacement per split (needs an Rng).
  std::size_t max_features = 0;
  // Leaf value = (positive + laplace) / (total + 2 laplace), in weight units.
  double laplace = 0.0;
};

inline double Gini(double positive, double total) {
  if (total <= 0.0) return 0.0;
  const double p = positive / total;
  return 2.0 * p * (1.0 - p);
}

// CART with Gini impurity. Candidate thresholds are midpoints between
// consecutive distinct values. A node is split only when the weighted child
// impurity is strictly below the node impurity. `rows` may repeat indices
// (bootstrap); `weights` is indexed by row and may be empty (all ones).
Tree GrowClassificationTree(const Matrix& x, std::span<const std::uint8_t> y,
                            std::span<const double> weights,
                            std::span<const std::size_t> rows,
                            const ClassificationTreeOptions& options, Rng* rng);

struct NewtonTreeOptions {
  int max_depth = 3;
  std::size_t min_leaf = 2;
  double l2 = 0.0;
  double min_hessian = 1e-6;
};

// Regression tree for one boosting round. Splits maximise the second-order
// gain G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2); each leaf holds the
// Newton step G/(H+l2), where G sums `gradient` (residual y - p) and H sums
// `hessian` (p (1 - p)).
Tree GrowNewtonTree(const Matrix& x, std::span<const double> gradient,
                    std::span<const double> hessian, std::span<const std::size_t> rows,
                    const NewtonTreeOptions& options);

}  // namespace tpis
