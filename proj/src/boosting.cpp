#include "earlyrisk/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace earlyrisk::boosting {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kMinError = 1e-10;

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

/// (larger gain, lower feature, lower threshold); `a` must be a valid split.
bool better(const SplitChoice& a, const SplitChoice& b) {
    if (b.feature < 0) return true;
    if (a.gain > b.gain + kTieTolerance) return true;
    if (a.gain < b.gain - kTieTolerance) return false;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

/// Best split of `rows` over every feature. `stat` maps a row to additive statistics;
/// `gain_of(left, right, total, gain)` scores a threshold and returns false to reject it.
template <typename Stats, typename Gain>
SplitChoice best_split(const Matrix& x, const std::vector<std::size_t>& rows, const std::function<Stats(std::size_t)>& stat,
                       const Gain& gain_of) {
    SplitChoice best;
    std::vector<std::pair<double, std::size_t>> values(rows.size());
    Stats total{};
    for (auto r : rows) total += stat(r);
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < rows.size(); ++i) values[i] = {x(rows[i], j), rows[i]};
        std::sort(values.begin(), values.end());
        Stats left{};
        for (std::size_t i = 0; i + 1 < values.size(); ++i) {
            left += stat(values[i].second);
            if (values[i].first == values[i + 1].first) continue;
            double g = 0.0;
            if (!gain_of(left, total - left, total, g)) continue;
            SplitChoice c{static_cast<int>(j), 0.5 * (values[i].first + values[i + 1].first), g};
            if (better(c, best)) best = c;
        }
    }
    return best;
}

struct WeightedCounts {
    double pos = 0.0;
    double total = 0.0;
    WeightedCounts& operator+=(const WeightedCounts& o) {
        pos += o.pos;
        total += o.total;
        return *this;
    }
    WeightedCounts operator-(const WeightedCounts& o) const { return {pos - o.pos, total - o.total}; }
};

struct SumCount {
    double sum = 0.0;
    double count = 0.0;
    SumCount& operator+=(const SumCount& o) {
        sum += o.sum;
        count += o.count;
        return *this;
    }
    SumCount operator-(const SumCount& o) const { return {sum - o.sum, count - o.count}; }
};

struct GradHess {
    double g = 0.0;
    double h = 0.0;
    GradHess& operator+=(const GradHess& o) {
        g += o.g;
        h += o.h;
        return *this;
    }
    GradHess operator-(const GradHess& o) const { return {g - o.g, h - o.h}; }
};

double weighted_gini(double pos, double total) {
    if (total <= 0.0) return 0.0;
    const double q = pos / total;
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
}

double soft_threshold(double g, double alpha) {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

double base_log_odds(std::span<const int> y) {
    const double p = static_cast<double>(std::count(y.begin(), y.end(), 1)) / static_cast<double>(y.size());
    return std::log(p / (1.0 - p));
}

double training_log_loss(std::span<const double> f, std::span<const int> y) {
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) loss += softplus(f[i]) - y[i] * f[i];
    return loss / static_cast<double>(y.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// AdaBoost

Stump fit_stump(const Matrix& x, std::span<const int> y, std::span<const double> weights) {
    const auto rows = all_rows(x.rows());
    const std::function<WeightedCounts(std::size_t)> stat = [&](std::size_t r) {
        return WeightedCounts{y[r] == 1 ? weights[r] : 0.0, weights[r]};
    };
    WeightedCounts total{};
    for (auto r : rows) total += stat(r);
    const double parent = weighted_gini(total.pos, total.total);
    const auto choice = best_split<WeightedCounts>(
        x, rows, stat, [&](const WeightedCounts& l, const WeightedCounts& r, const WeightedCounts& t, double& gain) {
            gain = parent - l.total / t.total * weighted_gini(l.pos, l.total) -
                   r.total / t.total * weighted_gini(r.pos, r.total);
            return true;
        });
    auto majority = [](double pos, double total) { return pos >= total - pos ? 1 : -1; };
    Stump stump;
    if (choice.feature < 0) {
        stump.left = stump.right = majority(total.pos, total.total);
        return stump;
    }
    stump.feature = choice.feature;
    stump.threshold = choice.threshold;
    WeightedCounts left{};
    for (auto r : rows) {
        if (x(r, choice.feature) <= choice.threshold) left += stat(r);
    }
    const auto right = total - left;
    stump.left = majority(left.pos, left.total);
    stump.right = majority(right.pos, right.total);
    return stump;
}

double AdaBoostModel::margin(std::span<const double> row) const {
    double f = 0.0;
    for (const auto& r : rounds_) f += r.alpha * r.stump.predict(row);
    return f;
}

double AdaBoostModel::score(std::span<const double> row) const { return sigmoid(margin(row)); }

AdaBoostModel fit_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostOptions& options) {
    require_fit_data(x, y, "fit_adaboost");
    const std::size_t n = x.rows();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<AdaBoostRound> rounds;
    for (std::size_t t = 0; t < options.n_rounds; ++t) {
        AdaBoostRound round;
        round.weights = w;
        round.stump = fit_stump(x, y, w);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int label = y[i] == 1 ? 1 : -1;
            if (round.stump.predict(x.row(i)) != label) err += w[i];
        }
        if (err >= 0.5) {
            if (t == 0) {
                throw Error("fit_adaboost: the first stump has weighted error " + format_roundtrip(err) +
                            " >= 0.5; the data are not weak-learnable by stumps");
            }
            break;
        }
        round.error = err;
        const double clamped = std::max(err, kMinError);
        round.alpha = 0.5 * std::log((1.0 - clamped) / clamped);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int label = y[i] == 1 ? 1 : -1;
            w[i] *= std::exp(-round.alpha * label * round.stump.predict(x.row(i)));
            total += w[i];
        }
        for (auto& v : w) v /= total;
        rounds.push_back(std::move(round));
        if (err <= kMinError) {
            break;  // a perfect stump: further rounds cannot change the sign
        }
    }
    return AdaBoostModel(std::move(rounds), std::move(w));
}

// ---------------------------------------------------------------------------
// Regression trees

double RegressionTree::predict(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        i = static_cast<std::size_t>(row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right);
    }
    return nodes[i].value;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

std::size_t RegressionTree::depth() const {
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

double BoostedTreesModel::raw_score(std::span<const double> row) const {
    double f = 0.0;
    for (const auto& t : stages_) f += t.predict(row);
    return initial_score_ + learning_rate_ * f;
}

namespace {

/// Squared-error tree on residuals; leaves get leaf_value(rows).
RegressionTree fit_residual_tree(const Matrix& x, std::span<const double> residual, std::size_t max_depth,
                                 std::size_t min_samples_split,
                                 const std::function<double(const std::vector<std::size_t>&)>& leaf_value) {
    RegressionTree tree;
    const std::function<SumCount(std::size_t)> stat = [&](std::size_t r) { return SumCount{residual[r], 1.0}; };
    std::function<int(std::vector<std::size_t>, std::size_t)> grow = [&](std::vector<std::size_t> rows,
                                                                        std::size_t depth) -> int {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[id].sample_count = rows.size();
        SplitChoice choice;
        if (depth < max_depth && rows.size() >= min_samples_split) {
            choice = best_split<SumCount>(x, rows, stat,
                                          [](const SumCount& l, const SumCount& r, const SumCount& t, double& gain) {
                                              gain = l.sum * l.sum / l.count + r.sum * r.sum / r.count -
                                                     t.sum * t.sum / t.count;
                                              return gain > kTieTolerance;
                                          });
        }
        if (choice.feature < 0) {
            tree.nodes[id].value = leaf_value(rows);
            return id;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        for (auto r : rows) (x(r, choice.feature) <= choice.threshold ? left : right).push_back(r);
        tree.nodes[id].feature = choice.feature;
        tree.nodes[id].threshold = choice.threshold;
        tree.nodes[id].gain = choice.gain;
        const int l = grow(std::move(left), depth + 1);
        tree.nodes[id].left = l;
        const int r = grow(std::move(right), depth + 1);
        tree.nodes[id].right = r;
        return id;
    };
    grow(all_rows(x.rows()), 0);
    return tree;
}

void accumulate_gain(const RegressionTree& tree, std::vector<double>& feature_gain) {
    for (const auto& node : tree.nodes) {
        if (!node.is_leaf()) feature_gain[node.feature] += node.gain;
    }
}

}  // namespace

BoostedTreesModel fit_gradient_boosting(const Matrix& x, std::span<const int> y,
                                        const GradientBoostingOptions& options) {
    require_fit_data(x, y, "fit_gradient_boosting");
    if (!(options.learning_rate > 0.0)) {
        throw Error("fit_gradient_boosting: learning rate must be positive");
    }
    const std::size_t n = x.rows();
    const double f0 = base_log_odds(y);
    std::vector<double> f(n, f0);
    std::vector<double> residual(n);
    std::vector<double> prob(n);
    std::vector<RegressionTree> stages;
    std::vector<double> feature_gain(x.cols(), 0.0);
    std::vector<double> losses{training_log_loss(f, y)};

    for (std::size_t s = 0; s < options.n_stages; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            prob[i] = sigmoid(f[i]);
            residual[i] = y[i] - prob[i];
        }
        auto tree = fit_residual_tree(x, residual, options.max_depth, options.min_samples_split,
                                      [&](const std::vector<std::size_t>& rows) {
                                          double num = 0.0;
                                          double den = 0.0;
                                          for (auto r : rows) {
                                              num += residual[r];
                                              den += prob[r] * (1.0 - prob[r]);
                                          }
                                          if (num == 0.0) return 0.0;
                                          const double step = den > 0.0 ? num / den : std::copysign(options.leaf_clamp, num);
                                          return std::clamp(step, -options.leaf_clamp, options.leaf_clamp);
                                      });
        for (std::size_t i = 0; i < n; ++i) f[i] += options.learning_rate * tree.predict(x.row(i));
        accumulate_gain(tree, feature_gain);
        stages.push_back(std::move(tree));
        losses.push_back(training_log_loss(f, y));
    }
    return BoostedTreesModel("gb", f0, options.learning_rate, std::move(stages), std::move(feature_gain),
                             std::move(losses));
}

double split_gain(double gl, double hl, double gr, double hr, const GainTreeOptions& options) {
    auto term = [&](double g, double h) {
        const double t = soft_threshold(g, options.alpha);
        return t * t / (h + options.lambda);
    };
    return 0.5 * (term(gl, hl) + term(gr, hr) - term(gl + gr, hl + hr)) - options.gamma;
}

double leaf_weight(double g, double h, const GainTreeOptions& options) {
    return -soft_threshold(g, options.alpha) / (h + options.lambda);
}

RegressionTree fit_gain_tree(const Matrix& x, std::span<const double> g, std::span<const double> h,
                             const GainTreeOptions& options, Growth growth) {
    const std::function<GradHess(std::size_t)> stat = [&](std::size_t r) { return GradHess{g[r], h[r]}; };
    auto find = [&](const std::vector<std::size_t>& rows, std::size_t depth) {
        if (depth >= options.max_depth || rows.size() < 2) return SplitChoice{};
        return best_split<GradHess>(x, rows, stat,
                                    [&](const GradHess& l, const GradHess& r, const GradHess&, double& gain) {
                                        if (l.h < options.min_child_weight || r.h < options.min_child_weight) {
                                            return false;
                                        }
                                        gain = split_gain(l.g, l.h, r.g, r.h, options);
                                        return gain > 0.0;
                                    });
    };

    struct Pending {
        int node;
        std::vector<std::size_t> rows;
        std::size_t depth;
        SplitChoice split;
    };

    RegressionTree tree;
    auto make_leaf = [&](const std::vector<std::size_t>& rows) {
        GradHess t{};
        for (auto r : rows) t += stat(r);
        RegressionNode node;
        node.value = leaf_weight(t.g, t.h, options);
        node.sample_count = rows.size();
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size() - 1);
    };
    auto apply_split = [&](Pending& p, std::vector<std::size_t>& left, std::vector<std::size_t>& right) {
        for (auto r : p.rows) (x(r, p.split.feature) <= p.split.threshold ? left : right).push_back(r);
        auto& node = tree.nodes[p.node];
        node.feature = p.split.feature;
        node.threshold = p.split.threshold;
        node.gain = p.split.gain;
    };

    auto rows = all_rows(x.rows());
    const int root = make_leaf(rows);

    if (growth == Growth::level_wise) {
        std::function<void(Pending)> grow = [&](Pending p) {
            p.split = find(p.rows, p.depth);
            if (p.split.feature < 0) return;
            std::vector<std::size_t> left;
            std::vector<std::size_t> right;
            apply_split(p, left, right);
            const int l = make_leaf(left);
            const int r = make_leaf(right);
            tree.nodes[p.node].left = l;
            tree.nodes[p.node].right = r;
            grow({l, std::move(left), p.depth + 1, {}});
            grow({r, std::move(right), p.depth + 1, {}});
        };
        grow({root, std::move(rows), 0, {}});
        return tree;
    }

    // Best-first: always split the frontier leaf whose best split has the largest gain.
    std::vector<Pending> frontier;
    frontier.push_back({root, rows, 0, find(rows, 0)});
    std::size_t leaves = 1;
    while (leaves < options.max_leaves) {
        std::size_t pick = frontier.size();
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (frontier[i].split.feature < 0) continue;
            if (pick == frontier.size() || frontier[i].split.gain > frontier[pick].split.gain + kTieTolerance) {
                pick = i;
            }
        }
        if (pick == frontier.size()) break;
        Pending p = std::move(frontier[pick]);
        frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        apply_split(p, left, right);
        const int l = make_leaf(left);
        const int r = make_leaf(right);
        tree.nodes[p.node].left = l;
        tree.nodes[p.node].right = r;
        ++leaves;
        auto left_split = find(left, p.depth + 1);
        auto right_split = find(right, p.depth + 1);
        frontier.push_back({l, std::move(left), p.depth + 1, left_split});
        frontier.push_back({r, std::move(right), p.depth + 1, right_split});
    }
    return tree;
}

namespace {

BoostedTreesModel fit_second_order(const Matrix& x, std::span<const int> y, std::size_t rounds, double eta,
                                   const GainTreeOptions& tree_options, Growth growth, std::string name) {
    require_fit_data(x, y, "fit_" + name);
    if (!(eta > 0.0)) {
        throw Error("fit_" + name + ": learning rate must be positive");
    }
    if (tree_options.lambda < 0.0 || tree_options.gamma < 0.0 || tree_options.alpha < 0.0) {
        throw Error("fit_" + name + ": lambda, gamma and alpha must be nonnegative");
    }
    const std::size_t n = x.rows();
    const double f0 = base_log_odds(y);
    std::vector<double> f(n, f0);
    std::vector<double> g(n);
    std::vector<double> h(n);
    std::vector<RegressionTree> stages;
    std::vector<double> feature_gain(x.cols(), 0.0);
    std::vector<double> losses{training_log_loss(f, y)};
    for (std::size_t t = 0; t < rounds; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sigmoid(f[i]);
            g[i] = s - y[i];
            h[i] = s * (1.0 - s);
        }
        auto tree = fit_gain_tree(x, g, h, tree_options, growth);
        for (std::size_t i = 0; i < n; ++i) f[i] += eta * tree.predict(x.row(i));
        accumulate_gain(tree, feature_gain);
        stages.push_back(std::move(tree));
        losses.push_back(training_log_loss(f, y));
    }
    return BoostedTreesModel(std::move(name), f0, eta, std::move(stages), std::move(feature_gain), std::move(losses));
}

}  // namespace

BoostedTreesModel fit_xgb_style(const Matrix& x, std::span<const int> y, const XgbOptions& options) {
    return fit_second_order(x, y, options.n_rounds, options.learning_rate, options.tree, Growth::level_wise, "xgb");
}

BoostedTreesModel fit_leafwise_gbdt(const Matrix& x, std::span<const int> y, const LeafwiseOptions& options) {
    if (options.tree.max_leaves < 2) {
        throw Error("fit_leafwise_gbdt: max_leaves must be at least 2");
    }
    return fit_second_order(x, y, options.n_rounds, options.learning_rate, options.tree, Growth::leaf_wise,
                            "leafwise_gbdt");
}

}  // namespace earlyrisk::boosting
