#include "earlyrisk/common.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <thread>

namespace earlyrisk {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw Error("matrix: value count " + std::to_string(data_.size()) + " does not match shape " +
                    std::to_string(rows) + "x" + std::to_string(cols));
    }
}

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
    Matrix out(rows_, indices.size());
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t j = 0; j < indices.size(); ++j) {
            out(r, j) = (*this)(r, indices[j]);
        }
    }
    return out;
}

double softplus(double z) {
    if (z > 0.0) {
        return z + std::log1p(std::exp(-z));
    }
    return std::log1p(std::exp(z));
}

double log_loss(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.size() != labels.size() || probabilities.empty()) {
        throw Error("log_loss: size mismatch or empty input");
    }
    constexpr double kClip = 1e-15;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probabilities[i], kClip, 1.0 - kClip);
        total -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return total / static_cast<double>(labels.size());
}

void require_fit_data(const Matrix& x, std::span<const int> y, const std::string& who, bool two_classes) {
    if (x.rows() != y.size()) {
        throw Error(who + ": " + std::to_string(x.rows()) + " feature rows but " + std::to_string(y.size()) + " labels");
    }
    if (y.empty()) {
        throw Error(who + ": empty training set");
    }
    std::size_t positives = 0;
    for (int label : y) {
        if (label != 0 && label != 1) {
            throw Error(who + ": labels must be 0 or 1");
        }
        positives += static_cast<std::size_t>(label);
    }
    if (two_classes && (positives == 0 || positives == y.size())) {
        throw Error(who + ": training data must contain both classes");
    }
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) {
                        body(i);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string format_roundtrip(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    std::string out(buf);
    if (out.find_first_not_of("-0.") == std::string::npos && out.front() == '-') {
        out.erase(0, 1);  // no "-0.000"
    }
    return out;
}

}  // namespace earlyrisk
