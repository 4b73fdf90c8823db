#include "earlyrisk/forests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace earlyrisk::forests {
namespace {

constexpr double kTieTolerance = 1e-12;

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double decrease = -1.0;
};

/// a beats b under (larger decrease, lower feature, lower threshold).
bool better(const Candidate& a, const Candidate& b) {
    if (b.feature < 0) return a.feature >= 0;
    if (a.decrease > b.decrease + kTieTolerance) return true;
    if (a.decrease < b.decrease - kTieTolerance) return false;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

class Builder {
public:
    Builder(const Matrix& x, std::span<const int> y, const TreeOptions& options, Rng& rng)
        : x_(x), y_(y), options_(options), rng_(rng) {
        const std::size_t p = x.cols();
        subsample_ = options.feature_subsample == 0 ? p : std::min(options.feature_subsample, p);
    }

    Tree build(std::vector<std::size_t> rows) {
        Tree tree;
        tree.nodes.reserve(2 * rows.size() + 1);
        grow(tree, rows, 0);
        return tree;
    }

private:
    int grow(Tree& tree, std::vector<std::size_t>& rows, std::size_t depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double pos = 0.0;
        for (auto r : rows) pos += y_[r];
        const double n = static_cast<double>(rows.size());
        tree.nodes[id].sample_count = rows.size();
        tree.nodes[id].positive_fraction = rows.empty() ? 0.0 : pos / n;

        const bool pure = pos == 0.0 || pos == n;
        if (pure || depth >= options_.max_depth || rows.size() < options_.min_samples_split) {
            return id;
        }
        const Candidate best = find_split(rows, pos);
        if (best.feature < 0) {
            return id;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : rows) {
            (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
        }
        std::vector<std::size_t>().swap(rows);
        tree.nodes[id].feature = best.feature;
        tree.nodes[id].threshold = best.threshold;
        tree.nodes[id].impurity_decrease = std::max(0.0, best.decrease);
        const int l = grow(tree, left, depth + 1);
        tree.nodes[id].left = l;
        const int r = grow(tree, right, depth + 1);
        tree.nodes[id].right = r;
        return id;
    }

    Candidate find_split(const std::vector<std::size_t>& rows, double pos) {
        const std::size_t p = x_.cols();
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (subsample_ < p) {
            rng_.shuffle(order);
        }
        const double n = static_cast<double>(rows.size());
        const double parent = gini(pos, n);
        Candidate best;
        std::size_t usable = 0;
        std::vector<std::pair<double, int>> values(rows.size());
        for (auto j : order) {
            if (usable >= subsample_) {
                break;
            }
            for (std::size_t i = 0; i < rows.size(); ++i) {
                values[i] = {x_(rows[i], j), y_[rows[i]]};
            }
            const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
            if (lo->first == hi->first) {
                continue;  // constant here: does not count against the subsample
            }
            ++usable;
            if (options_.random_thresholds) {
                const double lo_v = lo->first;
                const double hi_v = hi->first;
                Candidate c{static_cast<int>(j), rng_.uniform(lo_v, hi_v), 0.0};
                double nl = 0.0;
                double pl = 0.0;
                for (const auto& [v, label] : values) {
                    if (v <= c.threshold) {
                        nl += 1.0;
                        pl += label;
                    }
                }
                c.decrease = parent - nl / n * gini(pl, nl) - (n - nl) / n * gini(pos - pl, n - nl);
                if (better(c, best)) best = c;
                continue;
            }
            std::sort(values.begin(), values.end());
            double nl = 0.0;
            double pl = 0.0;
            for (std::size_t i = 0; i + 1 < values.size(); ++i) {
                nl += 1.0;
                pl += values[i].second;
                if (values[i].first == values[i + 1].first) {
                    continue;
                }
                Candidate c{static_cast<int>(j), 0.5 * (values[i].first + values[i + 1].first), 0.0};
                c.decrease = parent - nl / n * gini(pl, nl) - (n - nl) / n * gini(pos - pl, n - nl);
                if (better(c, best)) best = c;
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const int> y_;
    const TreeOptions& options_;
    Rng& rng_;
    std::size_t subsample_ = 0;
};

}  // namespace

double gini(double positives, double total) {
    if (total <= 0.0) return 0.0;
    const double q = positives / total;
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
}

double Tree::score(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].positive_fraction;
}

std::size_t Tree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

std::size_t Tree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

Tree fit_tree(const Matrix& x, std::span<const int> y, std::span<const std::size_t> sample, const TreeOptions& options,
              Rng& rng) {
    if (sample.empty()) {
        throw Error("fit_tree: empty sample");
    }
    if (x.rows() != y.size()) {
        throw Error("fit_tree: feature rows and labels differ in length");
    }
    Builder builder(x, y, options, rng);
    return builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
}

Tree fit_tree(const Matrix& x, std::span<const int> y, const TreeOptions& options, Rng& rng) {
    std::vector<std::size_t> all(x.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit_tree(x, y, all, options, rng);
}

TreeModel fit_decision_tree(const Matrix& x, std::span<const int> y, const DecisionTreeOptions& options) {
    require_fit_data(x, y, "fit_decision_tree", false);
    Rng rng(options.seed);
    TreeOptions topt;
    topt.max_depth = options.max_depth;
    topt.min_samples_split = options.min_samples_split;
    return TreeModel(fit_tree(x, y, topt, rng));
}

double ForestModel::score(std::span<const double> row) const {
    double total = 0.0;
    for (const auto& t : trees_) total += t.score(row);
    return total / static_cast<double>(trees_.size());
}

std::vector<double> ForestModel::impurity_importance() const {
    std::vector<double> imp(feature_count_, 0.0);
    for (const auto& t : trees_) {
        for (const auto& node : t.nodes) {
            if (!node.is_leaf()) {
                imp[node.feature] += static_cast<double>(node.sample_count) * node.impurity_decrease;
            }
        }
    }
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0) {
        for (auto& v : imp) v /= total;
    }
    return imp;
}

ForestModel fit_forest(const Matrix& x, std::span<const int> y, const ForestOptions& options, std::string name) {
    require_fit_data(x, y, "fit_" + name, false);
    if (options.n_trees < 1) {
        throw Error("fit_" + name + ": n_trees must be at least 1");
    }
    const std::size_t n = x.rows();
    TreeOptions topt;
    topt.max_depth = options.max_depth;
    topt.min_samples_split = options.min_samples_split;
    topt.random_thresholds = options.random_thresholds;
    topt.feature_subsample = options.feature_subsample == 0
                                 ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))))
                                 : options.feature_subsample;

    std::vector<Tree> trees(options.n_trees);
    std::vector<std::uint64_t> seeds(options.n_trees);
    parallel_for(options.n_trees, [&](std::size_t i) {
        seeds[i] = derive_seed(options.seed, i);
        Rng rng(seeds[i]);
        std::vector<std::size_t> sample(n);
        if (options.bootstrap) {
            for (auto& s : sample) s = rng.below(n);
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        trees[i] = fit_tree(x, y, sample, topt, rng);
    });
    return ForestModel(std::move(trees), std::move(seeds), x.cols(), std::move(name));
}

ForestModel fit_random_forest(const Matrix& x, std::span<const int> y, ForestOptions options) {
    return fit_forest(x, y, options, "rf");
}

ForestModel fit_extra_trees(const Matrix& x, std::span<const int> y, ForestOptions options) {
    options.bootstrap = false;
    options.random_thresholds = true;
    return fit_forest(x, y, options, "extra_trees");
}

}  // namespace earlyrisk::forests
