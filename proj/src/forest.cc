#include <cmath>
#include <numeric>

#include "tpis/error.h"
#include "tpis/learners.h"
#include "tpis/rng.h"

namespace tpis {
namespace {

std::size_t ResolveMaxFeatures(double setting, std::size_t d) {
  if (setting == 0) return 0;
  if (setting < 0) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d))));
  }
  return std::min(static_cast<std::size_t>(setting), d);
}

ClassificationTreeOptions TreeOptions(const LearnerSpec& spec, std::size_t d) {
  ClassificationTreeOptions options;
  options.max_depth = static_cast<int>(spec.Get("max_depth"));
  options.min_leaf = static_cast<std::size_t>(spec.Get("min_leaf"));
  options.max_features = ResolveMaxFeatures(spec.Get("max_features"), d);
  options.laplace = spec.Get("laplace");
  return options;
}

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

DecisionTreeLearner::DecisionTreeLearner(LearnerSpec spec, std::size_t d, Tree tree)
    : Learner(std::move(spec), d), tree_(std::move(tree)) {}

std::shared_ptr<const DecisionTreeLearner> DecisionTreeLearner::Fit(
    const LearnerSpec& spec, const Matrix& x, std::span<const std::uint8_t> y) {
  Rng rng(spec.seed);
  Tree tree = GrowClassificationTree(x, y, {}, AllRows(x.rows()), TreeOptions(spec, x.cols()), &rng);
  return std::shared_ptr<const DecisionTreeLearner>(
      new DecisionTreeLearner(spec, x.cols(), std::move(tree)));
}

double DecisionTreeLearner::Probability(std::span<const double> x) const {
  return tree_.Predict(x);
}

nlohmann::json DecisionTreeLearner::ParamsToJson() const { return {{"tree", tree_.ToJson()}}; }

std::shared_ptr<const DecisionTreeLearner> DecisionTreeLearner::FromJson(
    const LearnerSpec& spec, std::size_t d, const nlohmann::json& params) {
  return std::shared_ptr<const DecisionTreeLearner>(
      new DecisionTreeLearner(spec, d, Tree::FromJson(params.at("tree"))));
}

RandomForestLearner::RandomForestLearner(LearnerSpec spec, std::size_t d, std::vector<Tree> trees)
    : Learner(std::move(spec), d), trees_(std::move(trees)) {}

std::shared_ptr<const RandomForestLearner> RandomForestLearner::Fit(
    const LearnerSpec& spec, const Matrix& x, std::span<const std::uint8_t> y) {
  const auto count = static_cast<std::size_t>(spec.Get("trees"));
  const bool bootstrap = spec.Get("bootstrap") == 1.0;
  const auto options = TreeOptions(spec, x.cols());
  const std::size_t n = x.rows();
  std::vector<Tree> trees;
  trees.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    // Each tree owns a stream derived from (seed, t), so the forest does not
    // depend on the order in which trees are grown.
    Rng rng(DeriveSeed(spec.seed, t));
    std::vector<std::size_t> rows;
    if (bootstrap) {
      rows.resize(n);
      for (auto& r : rows) r = rng.UniformIndex(n);
    } else {
      rows = AllRows(n);
    }
    trees.push_back(GrowClassificationTree(x, y, {}, rows, options, &rng));
  }
  return std::shared_ptr<const RandomForestLearner>(
      new RandomForestLearner(spec, x.cols(), std::move(trees)));
}

double RandomForestLearner::Probability(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees_) sum += tree.Predict(x);
  return sum / static_cast<double>(trees_.size());
}

nlohmann::json RandomForestLearner::ParamsToJson() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.ToJson());
  return {{"trees", trees}};
}

std::shared_ptr<const RandomForestLearner> RandomForestLearner::FromJson(
    const LearnerSpec& spec, std::size_t d, const nlohmann::json& params) {
  std::vector<Tree> trees;
  for (const auto& t : params.at("trees")) trees.push_back(Tree::FromJson(t));
  if (trees.empty()) throw Error(ErrorCode::kArchiveError, "forest without trees");
  return std::shared_ptr<const RandomForestLearner>(
      new RandomForestLearner(spec, d, std::move(trees)));
}

}  // namespace tpis
