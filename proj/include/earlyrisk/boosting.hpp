#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "earlyrisk/model.hpp"

namespace earlyrisk::boosting {

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

// ---------------------------------------------------------------------------
// AdaBoost

/// Depth-one tree. feature < 0 means a constant prediction (no usable split).
struct Stump {
    int feature = -1;
    double threshold = 0.0;
    int left = 1;   ///< prediction in {-1, +1} for x[feature] <= threshold
    int right = 1;  ///< prediction for x[feature] > threshold

    int predict(std::span<const double> row) const {
        if (feature < 0) return left;
        return row[feature] <= threshold ? left : right;
    }
};

/// One boosting round as executed: the sample weights the stump was fit on, its
/// weighted error and its stage weight.
struct AdaBoostRound {
    Stump stump;
    double error = 0.0;
    double alpha = 0.0;
    std::vector<double> weights;
};

class AdaBoostModel final : public ScoredModel {
public:
    AdaBoostModel(std::vector<AdaBoostRound> rounds, std::vector<double> final_weights)
        : rounds_(std::move(rounds)), final_weights_(std::move(final_weights)) {}

    /// sigmoid(sum_t alpha_t h_t(x)).
    double score(std::span<const double> row) const override;
    std::string name() const override { return "adaboost"; }

    double margin(std::span<const double> row) const;
    const std::vector<AdaBoostRound>& rounds() const noexcept { return rounds_; }
    const std::vector<double>& final_weights() const noexcept { return final_weights_; }

private:
    std::vector<AdaBoostRound> rounds_;
    std::vector<double> final_weights_;
};

/// Weighted-Gini stump chosen under the same tie-breaks as the CART trees; each
/// side predicts its weighted majority (ties go to +1).
Stump fit_stump(const Matrix& x, std::span<const int> y, std::span<const double> weights);

struct AdaBoostOptions {
    std::size_t n_rounds = 50;
    std::uint64_t seed = 0;
};

/// Binary AdaBoost with labels in {-1, +1}: alpha = 0.5 ln((1 - e) / e) with e
/// clamped at 1e-10, w_i <- w_i exp(-alpha y_i h(x_i)) renormalized. Stops early
/// once a round reaches e <= 1e-10, or before any round with e >= 0.5.
AdaBoostModel fit_adaboost(const Matrix& x, std::span<const int> y, const AdaBoostOptions& options = {});

// ---------------------------------------------------------------------------
// Gradient-boosted regression trees

/// Leaf when feature < 0; x[feature] <= threshold goes left.
struct RegressionNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    double gain = 0.0;
    std::size_t sample_count = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const RegressionNode&) const = default;
};

struct RegressionTree {
    std::vector<RegressionNode> nodes;

    double predict(std::span<const double> row) const;
    std::size_t leaf_count() const;
    std::size_t depth() const;
};

/// sigmoid(F0 + learning_rate * sum of stage outputs).
class BoostedTreesModel final : public ScoredModel {
public:
    BoostedTreesModel(std::string name, double initial_score, double learning_rate, std::vector<RegressionTree> stages,
                      std::vector<double> feature_gain, std::vector<double> train_loss)
        : name_(std::move(name)),
          initial_score_(initial_score),
          learning_rate_(learning_rate),
          stages_(std::move(stages)),
          feature_gain_(std::move(feature_gain)),
          train_loss_(std::move(train_loss)) {}

    double score(std::span<const double> row) const override { return sigmoid(raw_score(row)); }
    std::string name() const override { return name_; }

    double raw_score(std::span<const double> row) const;
    double initial_score() const noexcept { return initial_score_; }
    const std::vector<RegressionTree>& stages() const noexcept { return stages_; }
    /// Summed split gain (or squared-error reduction) per feature over all stages.
    const std::vector<double>& feature_gain() const noexcept { return feature_gain_; }
    /// Training log-loss before the first stage and after each stage.
    const std::vector<double>& train_loss() const noexcept { return train_loss_; }

private:
    std::string name_;
    double initial_score_;
    double learning_rate_;
    std::vector<RegressionTree> stages_;
    std::vector<double> feature_gain_;
    std::vector<double> train_loss_;
};

struct GradientBoostingOptions {
    std::size_t n_stages = 100;
    double learning_rate = 0.1;
    std::size_t max_depth = 3;
    std::size_t min_samples_split = 2;
    double leaf_clamp = 4.0;
    std::uint64_t seed = 0;
};

/// Log-loss boosting: each stage fits a squared-error regression tree to the
/// residuals y - p and sets each leaf to the Newton step sum(r) / sum(p (1 - p)),
/// clamped to [-leaf_clamp, leaf_clamp].
BoostedTreesModel fit_gradient_boosting(const Matrix& x, std::span<const int> y,
                                        const GradientBoostingOptions& options = {});

/// Shared second-order tree settings.
struct GainTreeOptions {
    double lambda = 1.0;  ///< L2 on leaf weights
    double gamma = 0.0;   ///< per-split penalty
    double alpha = 0.0;   ///< L1 on leaf weights (soft-threshold on G)
    double min_child_weight = 1.0;
    std::size_t max_depth = 3;
    std::size_t max_leaves = kUnlimited;
};

/// Split gain 0.5 [T(GL)^2/(HL+lambda) + T(GR)^2/(HR+lambda) - T(G)^2/(H+lambda)] - gamma,
/// with T the soft-threshold by alpha.
double split_gain(double gl, double hl, double gr, double hr, const GainTreeOptions& options);

/// -T(G) / (H + lambda).
double leaf_weight(double g, double h, const GainTreeOptions& options);

enum class Growth { level_wise, leaf_wise };

/// One second-order tree on gradients g and hessians h. Level-wise growth splits every
/// node with positive gain down to max_depth; leaf-wise growth repeatedly splits the
/// frontier leaf with the largest positive gain until max_leaves leaves exist.
RegressionTree fit_gain_tree(const Matrix& x, std::span<const double> g, std::span<const double> h,
                             const GainTreeOptions& options, Growth growth);

struct XgbOptions {
    std::size_t n_rounds = 100;
    double learning_rate = 0.3;
    GainTreeOptions tree{};
    std::uint64_t seed = 0;
};

BoostedTreesModel fit_xgb_style(const Matrix& x, std::span<const int> y, const XgbOptions& options = {});

struct LeafwiseOptions {
    std::size_t n_rounds = 100;
    double learning_rate = 0.1;
    GainTreeOptions tree{1.0, 0.0, 0.0, 1e-3, kUnlimited, 31};
    std::uint64_t seed = 0;
};

BoostedTreesModel fit_leafwise_gbdt(const Matrix& x, std::span<const int> y, const LeafwiseOptions& options = {});

}  // namespace earlyrisk::boosting
