#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace earlyrisk {

/// Base exception for every recoverable failure raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const;

    const std::vector<double>& values() const noexcept { return data_; }

    Matrix select_rows(std::span<const std::size_t> indices) const;
    Matrix select_cols(std::span<const std::size_t> indices) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// Mean binary cross-entropy of probabilities against 0/1 labels, clipped at 1e-15.
double log_loss(std::span<const double> probabilities, std::span<const int> labels);

/// Throws unless x and y agree in length, are nonempty and (optionally) y holds both 0 and 1.
void require_fit_data(const Matrix& x, std::span<const int> y, const std::string& who, bool two_classes = true);

/// Runs body(i) for i in [0, n). Work may be spread over threads; each index must
/// only write state it owns so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Shortest decimal text that parses back to the same double.
std::string format_roundtrip(double value);

/// Fixed-point text with the given number of decimals.
std::string format_fixed(double value, int decimals);

}  // namespace earlyrisk
