#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "earlyrisk/common.hpp"

namespace earlyrisk {

/// A fitted binary classifier. score() is the positive-class score in [0, 1]; the
/// predicted label is score >= 0.5 for every model.
class ScoredModel {
public:
    virtual ~ScoredModel() = default;

    virtual double score(std::span<const double> row) const = 0;
    virtual std::string name() const = 0;

    virtual std::vector<double> score_all(const Matrix& rows) const {
        std::vector<double> out(rows.rows());
        for (std::size_t i = 0; i < rows.rows(); ++i) {
            out[i] = score(rows.row(i));
        }
        return out;
    }

    int predict(std::span<const double> row) const { return score(row) >= 0.5 ? 1 : 0; }
};

using ModelPtr = std::unique_ptr<ScoredModel>;

}  // namespace earlyrisk
