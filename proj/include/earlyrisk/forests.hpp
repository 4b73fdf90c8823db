#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "earlyrisk/model.hpp"
#include "earlyrisk/rng.hpp"

namespace earlyrisk::forests {

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

/// Leaf when feature < 0. Rows with x[feature] <= threshold go left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double positive_fraction = 0.0;
    std::size_t sample_count = 0;
    double impurity_decrease = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

/// Flat tree; node 0 is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    double score(std::span<const double> row) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    bool operator==(const Tree&) const = default;
};

struct TreeOptions {
    std::size_t max_depth = kUnlimited;
    std::size_t min_samples_split = 2;
    /// Features examined per split; 0 means all. Features are drawn in random order
    /// and the search continues past this count until one non-constant feature has
    /// been seen, so a node is only a leaf when no feature can split it.
    std::size_t feature_subsample = 0;
    /// Extremely randomized trees: one uniform threshold in [min, max) per feature.
    bool random_thresholds = false;
};

/// Gini impurity 1 - q^2 - (1-q)^2 of a node with the given counts.
double gini(double positives, double total);

/// CART on the rows listed in `sample` (repeats allowed, as in a bootstrap draw).
/// Split quality is the Gini decrease g(parent) - nL/n g(L) - nR/n g(R); thresholds
/// are midpoints between consecutive distinct values. Ties prefer the larger
/// decrease, then the lower feature index, then the lower threshold.
Tree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> sample, const TreeOptions& options,
              Rng& rng);
Tree fit_tree(const Matrix& x, std::span<const int> y, const TreeOptions& options, Rng& rng);

class TreeModel final : public ScoredModel {
public:
    explicit TreeModel(Tree tree) : tree_(std::move(tree)) {}
    double score(std::span<const double> row) const override { return tree_.score(row); }
    std::string name() const override { return "dt"; }
    const Tree& tree() const noexcept { return tree_; }

private:
    Tree tree_;
};

struct DecisionTreeOptions {
    std::size_t max_depth = kUnlimited;
    std::size_t min_samples_split = 2;
    std::uint64_t seed = 0;
};

TreeModel fit_decision_tree(const Matrix& x, std::span<const int> y, const DecisionTreeOptions& options = {});

struct ForestOptions {
    std::size_t n_trees = 100;
    std::size_t max_depth = kUnlimited;
    std::size_t min_samples_split = 2;
    /// 0 selects ceil(sqrt(p)).
    std::size_t feature_subsample = 0;
    bool bootstrap = true;
    bool random_thresholds = false;
    std::uint64_t seed = 0;
};

/// Mean of the per-tree leaf positive fractions.
class ForestModel final : public ScoredModel {
public:
    ForestModel(std::vector<Tree> trees, std::vector<std::uint64_t> tree_seeds, std::size_t feature_count,
                std::string name)
        : trees_(std::move(trees)), seeds_(std::move(tree_seeds)), feature_count_(feature_count), name_(std::move(name)) {}

    double score(std::span<const double> row) const override;
    std::string name() const override { return name_; }

    const std::vector<Tree>& trees() const noexcept { return trees_; }
    const std::vector<std::uint64_t>& tree_seeds() const noexcept { return seeds_; }

    /// Sum over splits on feature j of (node samples * Gini decrease), normalized to
    /// sum to 1. All zeros when no tree has a split.
    std::vector<double> impurity_importance() const;

private:
    std::vector<Tree> trees_;
    std::vector<std::uint64_t> seeds_;
    std::size_t feature_count_;
    std::string name_;
};

/// Tree i is fit on its own bootstrap draw with seed derive_seed(seed, i).
ForestModel fit_forest(const Matrix& x, std::span<const int> y, const ForestOptions& options, std::string name);

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y, ForestOptions options = {});

/// No bootstrap; random thresholds.
ForestModel fit_extra_trees(const Matrix& x, std::span<const int> y, ForestOptions options = {});

}  // namespace earlyrisk::forests
