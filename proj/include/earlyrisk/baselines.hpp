#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "earlyrisk/model.hpp"

namespace earlyrisk::baselines {

struct LinearWeights {
    std::vector<double> w;
    double b = 0.0;

    double margin(std::span<const double> row) const;
};

enum class Penalty { none, l1, l2 };

struct LogisticOptions {
    Penalty penalty = Penalty::l2;
    double strength = 1e-3;
    /// Gradient step; a value <= 0 selects 1/L from a bound on the loss curvature.
    double lr = 0.1;
    std::size_t max_iter = 2000;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    /// Nesterov/FISTA momentum on top of the (proximal) gradient step.
    bool accelerated = false;
};

struct FitInfo {
    std::size_t iterations = 0;
    bool converged = false;
    /// Max-abs component of the (proximal) gradient at the returned weights.
    double gradient_norm = 0.0;
};

/// Mean log-loss plus penalty: strength/2 * |w|^2 for L2, strength * |w|_1 for L1.
/// The intercept is never penalized.
class LogisticModel final : public ScoredModel {
public:
    LogisticModel(LinearWeights weights, FitInfo info) : weights_(std::move(weights)), info_(info) {}

    double score(std::span<const double> row) const override { return sigmoid(weights_.margin(row)); }
    std::string name() const override { return "lr"; }

    const LinearWeights& weights() const noexcept { return weights_; }
    const FitInfo& info() const noexcept { return info_; }

private:
    LinearWeights weights_;
    FitInfo info_;
};

/// Full-batch gradient descent (proximal step for L1). Stops when the max gradient
/// component drops below tol or after max_iter steps.
LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticOptions& options = {});

/// Objective value and gradient (w..., b) of the logistic problem; exposed for tests.
double logistic_objective(const Matrix& x, std::span<const int> y, const LinearWeights& weights,
                          const LogisticOptions& options);

struct SvmOptions {
    double strength = 1e-2;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
};

/// Linear SVM. The decision is sign(w.x + b); score() squashes the margin through a
/// sigmoid so that it can be ranked for ROC.
class LinearSvmModel final : public ScoredModel {
public:
    explicit LinearSvmModel(LinearWeights weights) : weights_(std::move(weights)) {}

    double score(std::span<const double> row) const override { return sigmoid(weights_.margin(row)); }
    std::string name() const override { return "svm"; }

    const LinearWeights& weights() const noexcept { return weights_; }

private:
    LinearWeights weights_;
};

/// Pegasos: stochastic subgradient steps 1/(strength * t) on
/// strength/2 * (|w|^2 + b^2) + mean hinge(1 - y (w.x + b)), labels in {-1, +1}.
/// The bias is folded in as a constant feature and so is regularized with w.
/// The returned weights average the iterates of the final epoch.
LinearSvmModel fit_linear_svm(const Matrix& x, std::span<const int> y, const SvmOptions& options = {});

double svm_objective(const Matrix& x, std::span<const int> y, const LinearWeights& weights, double strength);

class KnnModel final : public ScoredModel {
public:
    KnnModel(Matrix train, std::vector<int> labels, std::size_t k);

    /// Fraction of positives among the k nearest rows (Euclidean; equal distances
    /// resolve to the lower training index).
    double score(std::span<const double> row) const override;
    std::string name() const override { return "knn"; }

    /// Indices of the k nearest training rows, nearest first.
    std::vector<std::size_t> neighbors(std::span<const double> row) const;

private:
    Matrix train_;
    std::vector<int> labels_;
    std::size_t k_;
};

KnnModel fit_knn(const Matrix& x, std::span<const int> y, std::size_t k = 5);

struct GaussianClassStats {
    std::array<double, 2> prior{};
    std::array<std::vector<double>, 2> mean;
    std::array<std::vector<double>, 2> variance;
};

class GaussianNbModel final : public ScoredModel {
public:
    explicit GaussianNbModel(GaussianClassStats stats) : stats_(std::move(stats)) {}

    double score(std::span<const double> row) const override;
    std::string name() const override { return "gnb"; }

    /// log prior + sum of log normal densities for class c.
    double log_posterior(std::span<const double> row, int c) const;

    const GaussianClassStats& stats() const noexcept { return stats_; }

private:
    GaussianClassStats stats_;
};

/// Per-class means and variances; every variance is increased by
/// var_smoothing * (largest per-feature variance of x).
GaussianNbModel fit_gnb(const Matrix& x, std::span<const int> y, double var_smoothing = 1e-9);

}  // namespace earlyrisk::baselines
