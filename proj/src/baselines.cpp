#include "earlyrisk/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "earlyrisk/rng.hpp"

namespace earlyrisk::baselines {
namespace {

double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

/// Mean log-loss gradient; returns the data term of the loss.
double logistic_gradient(const Matrix& x, std::span<const int> y, const LinearWeights& wt, std::vector<double>& grad_w,
                         double& grad_b) {
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        const double z = wt.margin(row);
        const double r = sigmoid(z) - y[i];
        loss += softplus(z) - y[i] * z;
        for (std::size_t j = 0; j < p; ++j) {
            grad_w[j] += r * row[j];
        }
        grad_b += r;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& g : grad_w) g *= inv;
    grad_b *= inv;
    return loss * inv;
}

double penalty_value(const LinearWeights& wt, const LogisticOptions& opt) {
    double v = 0.0;
    for (double w : wt.w) {
        if (opt.penalty == Penalty::l2) v += 0.5 * opt.strength * w * w;
        if (opt.penalty == Penalty::l1) v += opt.strength * std::abs(w);
    }
    return v;
}

}  // namespace

double LinearWeights::margin(std::span<const double> row) const {
    double z = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
        z += w[j] * row[j];
    }
    return z;
}

double logistic_objective(const Matrix& x, std::span<const int> y, const LinearWeights& weights,
                          const LogisticOptions& options) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double z = weights.margin(x.row(i));
        loss += softplus(z) - y[i] * z;
    }
    return loss / static_cast<double>(x.rows()) + penalty_value(weights, options);
}

LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, const LogisticOptions& options) {
    require_fit_data(x, y, "fit_logistic");
    if (options.penalty != Penalty::none && options.strength < 0.0) {
        throw Error("fit_logistic: penalty strength must be nonnegative");
    }
    const std::size_t p = x.cols();
    const bool l1 = options.penalty == Penalty::l1;
    const double l2 = options.penalty == Penalty::l2 ? options.strength : 0.0;

    double step = options.lr;
    if (step <= 0.0) {
        // Curvature of the mean log-loss is at most 0.25 * lambda_max(A^T A / n) with
        // A = [x 1]; the trace bounds lambda_max.
        double trace = 1.0;
        for (double v : x.values()) trace += v * v / static_cast<double>(x.rows());
        step = 1.0 / (0.25 * trace + l2);
    }

    LinearWeights wt{std::vector<double>(p, 0.0), 0.0};
    LinearWeights prev = wt;
    LinearWeights look = wt;  // extrapolated point when accelerated
    std::vector<double> grad(p);
    double grad_b = 0.0;
    double momentum_t = 1.0;
    FitInfo info;

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        const LinearWeights& at = options.accelerated ? look : wt;
        const double data_loss = logistic_gradient(x, y, at, grad, grad_b);
        if (!std::isfinite(data_loss)) {
            throw Error("fit_logistic: loss diverged (non-finite) at iteration " + std::to_string(it) +
                        " with lr = " + format_roundtrip(step));
        }
        LinearWeights next = at;
        double mapping = std::abs(grad_b);
        next.b = at.b - step * grad_b;
        for (std::size_t j = 0; j < p; ++j) {
            const double g = grad[j] + l2 * at.w[j];
            if (l1) {
                next.w[j] = soft_threshold(at.w[j] - step * g, step * options.strength);
                mapping = std::max(mapping, std::abs(at.w[j] - next.w[j]) / step);
            } else {
                next.w[j] = at.w[j] - step * g;
                mapping = std::max(mapping, std::abs(g));
            }
        }
        info.iterations = it + 1;
        info.gradient_norm = mapping;
        if (mapping < options.tol) {
            // `at` already satisfies the stopping rule.
            wt = at;
            info.converged = true;
            info.iterations = it;
            break;
        }
        prev = wt;
        wt = std::move(next);
        if (options.accelerated) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
            const double beta = (momentum_t - 1.0) / t_next;
            momentum_t = t_next;
            look = wt;
            look.b += beta * (wt.b - prev.b);
            for (std::size_t j = 0; j < p; ++j) {
                look.w[j] += beta * (wt.w[j] - prev.w[j]);
            }
        }
    }
    if (!info.converged) {
        // Report the stationarity measure at the returned weights.
        logistic_gradient(x, y, wt, grad, grad_b);
        double mapping = std::abs(grad_b);
        for (std::size_t j = 0; j < p; ++j) {
            const double g = grad[j] + l2 * wt.w[j];
            if (l1) {
                const double moved = soft_threshold(wt.w[j] - step * g, step * options.strength);
                mapping = std::max(mapping, std::abs(wt.w[j] - moved) / step);
            } else {
                mapping = std::max(mapping, std::abs(g));
            }
        }
        info.gradient_norm = mapping;
        info.converged = mapping < options.tol;
    }
    return LogisticModel(std::move(wt), info);
}

double svm_objective(const Matrix& x, std::span<const int> y, const LinearWeights& weights, double strength) {
    double hinge = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double s = y[i] == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - s * weights.margin(x.row(i)));
    }
    double sq = weights.b * weights.b;
    for (double w : weights.w) sq += w * w;
    return 0.5 * strength * sq + hinge / static_cast<double>(x.rows());
}

LinearSvmModel fit_linear_svm(const Matrix& x, std::span<const int> y, const SvmOptions& options) {
    require_fit_data(x, y, "fit_linear_svm");
    if (!(options.strength > 0.0)) {
        throw Error("fit_linear_svm: strength must be positive");
    }
    if (options.epochs == 0) {
        throw Error("fit_linear_svm: epochs must be positive");
    }
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();
    const double lambda = options.strength;
    const double radius = 1.0 / std::sqrt(lambda);

    // w[p] is the bias weight of the constant feature.
    std::vector<double> w(p + 1, 0.0);
    std::vector<double> avg(p + 1, 0.0);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        Rng rng(derive_seed(options.seed, epoch));
        const auto order = permutation(n, rng);
        const bool last = epoch + 1 == options.epochs;
        for (auto i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const auto row = x.row(i);
            const double s = y[i] == 1 ? 1.0 : -1.0;
            double z = w[p];
            for (std::size_t j = 0; j < p; ++j) z += w[j] * row[j];
            const double shrink = 1.0 - eta * lambda;
            for (auto& v : w) v *= shrink;
            if (s * z < 1.0) {
                for (std::size_t j = 0; j < p; ++j) w[j] += eta * s * row[j];
                w[p] += eta * s;
            }
            double norm = 0.0;
            for (double v : w) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > radius) {
                for (auto& v : w) v *= radius / norm;
            }
            if (!std::isfinite(norm)) {
                throw Error("fit_linear_svm: weights diverged at step " + std::to_string(t));
            }
            if (last) {
                for (std::size_t j = 0; j <= p; ++j) avg[j] += w[j];
            }
        }
    }
    LinearWeights out;
    out.w.assign(avg.begin(), avg.begin() + static_cast<std::ptrdiff_t>(p));
    for (auto& v : out.w) v /= static_cast<double>(n);
    out.b = avg[p] / static_cast<double>(n);
    return LinearSvmModel(std::move(out));
}

KnnModel::KnnModel(Matrix train, std::vector<int> labels, std::size_t k)
    : train_(std::move(train)), labels_(std::move(labels)), k_(k) {}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> row) const {
    const std::size_t n = train_.rows();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto t = train_.row(i);
        double d = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) {
            const double diff = t[j] - row[j];
            d += diff * diff;
        }
        dist[i] = {d, i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    std::vector<std::size_t> out(k_);
    for (std::size_t i = 0; i < k_; ++i) out[i] = dist[i].second;
    return out;
}

double KnnModel::score(std::span<const double> row) const {
    std::size_t pos = 0;
    for (auto i : neighbors(row)) pos += static_cast<std::size_t>(labels_[i]);
    return static_cast<double>(pos) / static_cast<double>(k_);
}

KnnModel fit_knn(const Matrix& x, std::span<const int> y, std::size_t k) {
    require_fit_data(x, y, "fit_knn", false);
    if (k < 1 || k > x.rows()) {
        throw Error("fit_knn: k must satisfy 1 <= k <= n_train (k = " + std::to_string(k) +
                    ", n_train = " + std::to_string(x.rows()) + ")");
    }
    return KnnModel(x, std::vector<int>(y.begin(), y.end()), k);
}

double GaussianNbModel::log_posterior(std::span<const double> row, int c) const {
    double lp = std::log(stats_.prior[c]);
    const auto& mu = stats_.mean[c];
    const auto& var = stats_.variance[c];
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double d = row[j] - mu[j];
        lp += -0.5 * std::log(2.0 * std::numbers::pi * var[j]) - d * d / (2.0 * var[j]);
    }
    return lp;
}

double GaussianNbModel::score(std::span<const double> row) const {
    return sigmoid(log_posterior(row, 1) - log_posterior(row, 0));
}

GaussianNbModel fit_gnb(const Matrix& x, std::span<const int> y, double var_smoothing) {
    require_fit_data(x, y, "fit_gnb");
    if (var_smoothing < 0.0) {
        throw Error("fit_gnb: var_smoothing must be nonnegative");
    }
    const std::size_t n = x.rows();
    const std::size_t p = x.cols();

    double largest = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += x(i, j);
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (x(i, j) - m) * (x(i, j) - m);
        largest = std::max(largest, v / static_cast<double>(n));
    }
    double epsilon = var_smoothing * largest;
    if (!(epsilon > 0.0)) {
        epsilon = std::max(var_smoothing, 1e-12);  // all-constant features: keep variances positive
    }

    GaussianClassStats stats;
    for (int c = 0; c < 2; ++c) {
        std::size_t count = 0;
        stats.mean[c].assign(p, 0.0);
        stats.variance[c].assign(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] != c) continue;
            ++count;
            for (std::size_t j = 0; j < p; ++j) stats.mean[c][j] += x(i, j);
        }
        for (auto& m : stats.mean[c]) m /= static_cast<double>(count);
        for (std::size_t i = 0; i < n; ++i) {
            if (y[i] != c) continue;
            for (std::size_t j = 0; j < p; ++j) {
                const double d = x(i, j) - stats.mean[c][j];
                stats.variance[c][j] += d * d;
            }
        }
        for (auto& v : stats.variance[c]) v = v / static_cast<double>(count) + epsilon;
        stats.prior[c] = static_cast<double>(count) / static_cast<double>(n);
    }
    return GaussianNbModel(std::move(stats));
}

}  // namespace earlyrisk::baselines
