#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "earlyrisk/common.hpp"

namespace earlyrisk::tabular {

/// Header plus string cells, exactly as read from a CSV file.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(std::string_view name) const;
};

/// Parses comma-separated text. Cells are whitespace-trimmed; blank lines are skipped.
RawTable parse_csv(std::string_view text);

RawTable load_csv(const std::filesystem::path& path);

enum class ColumnKind { yes_no, gender, continuous };

struct EncodingSchema {
    std::set<std::string> binary_yes_no;
    std::string gender_column;
    std::string target_column = "class";
    std::set<std::string> continuous;

    /// Age is continuous, Gender is the gender column, `class` is the target and
    /// every other column is Yes/No.
    static EncodingSchema for_header(const std::vector<std::string>& header);
};

struct NormParams {
    double min = 0.0;
    double max = 0.0;
};

/// Numeric view of the table: every feature cell is in [0, 1] and the target is 0/1.
struct EncodedDataset {
    Matrix features;
    std::vector<int> target;
    std::vector<std::string> feature_names;
    std::vector<ColumnKind> kinds;
    std::map<std::string, NormParams> norm_params;

    std::size_t size() const noexcept { return target.size(); }
    std::size_t feature_count() const noexcept { return feature_names.size(); }
    std::size_t feature_index(std::string_view name) const;
    std::size_t positives() const;

    EncodedDataset subset(std::span<const std::size_t> rows) const;
    EncodedDataset select_features(const std::vector<std::string>& names) const;

    /// Throws unless both classes are present.
    void require_two_classes(std::string_view who) const;
};

/// Yes/No, Male/Female and Positive/Negative become 1/0 (case-insensitive); the
/// continuous columns are min-max scaled over the whole table.
EncodedDataset encode(const RawTable& raw, const EncodingSchema& schema);

/// Inverse of the Yes/No mapping.
std::string decode_yes_no(double cell);

/// Serializes an encoded dataset (features, target and column kinds) losslessly.
void save_encoded(const EncodedDataset& ds, const std::filesystem::path& csv_path);
EncodedDataset load_encoded(const std::filesystem::path& csv_path);

struct SplitPlan {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    std::uint64_t seed = 0;
};

/// Uniform random permutation; the first floor(ratio * n) indices train.
SplitPlan train_test_split(std::size_t n, double ratio, std::uint64_t seed);
inline SplitPlan train_test_split(const EncodedDataset& ds, double ratio, std::uint64_t seed) {
    return train_test_split(ds.size(), ratio, seed);
}

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::vector<std::size_t>> folds;
    bool stratified = false;
    std::uint64_t seed = 0;

    /// Every index not in fold i.
    std::vector<std::size_t> training_indices(std::size_t fold) const;
};

/// Fold sizes differ by at most one. When stratified, the per-fold positive counts
/// also differ by at most one.
FoldPlan kfold(std::span<const int> labels, std::size_t k, bool stratified, std::uint64_t seed);
inline FoldPlan kfold(const EncodedDataset& ds, std::size_t k, bool stratified, std::uint64_t seed) {
    return kfold(ds.target, k, stratified, seed);
}

}  // namespace earlyrisk::tabular
