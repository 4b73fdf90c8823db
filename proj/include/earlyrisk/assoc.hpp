#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "earlyrisk/tabular.hpp"

namespace earlyrisk::assoc {

/// Item bitmask; bit i set means item i is present. At most 64 items.
using Itemset = std::uint64_t;

inline constexpr std::size_t kMaxItems = 64;

struct TransactionSet {
    std::vector<std::string> item_names;
    std::vector<Itemset> rows;

    std::size_t item_count() const noexcept { return item_names.size(); }
    std::size_t size() const noexcept { return rows.size(); }

    /// Number of rows containing every item of `items`.
    std::size_t count(Itemset items) const;

    /// Item names of `items`, sorted lexicographically.
    std::vector<std::string> names(Itemset items) const;
};

/// The binary columns that describe symptoms: every Yes/No feature (Gender and the
/// continuous columns are excluded).
std::vector<std::string> symptom_columns(const tabular::EncodedDataset& ds);

/// One transaction per row; an item is present iff its cell equals 1.0.
TransactionSet to_transactions(const tabular::EncodedDataset& ds, const std::vector<std::string>& columns);

struct FrequentItemset {
    Itemset items = 0;
    std::size_t count = 0;
    double support = 0.0;
};

/// Level-wise Apriori. Returns every itemset with support >= min_support, sorted by
/// (size asc, support desc, item names).
std::vector<FrequentItemset> apriori(const TransactionSet& tx, double min_support);

struct AssociationRule {
    Itemset antecedent = 0;
    Itemset consequent = 0;
    double support = 0.0;  ///< supp(antecedent | consequent)
    double confidence = 0.0;
    double lift = 0.0;
};

/// Every A -> S\A over frequent S (|S| >= 2) with confidence >= min_confidence, sorted
/// by (confidence desc, support desc, antecedent names, consequent names).
std::vector<AssociationRule> generate_rules(const std::vector<FrequentItemset>& itemsets, const TransactionSet& tx,
                                            double min_confidence);

std::size_t rule_count(const TransactionSet& tx, double min_support, double min_confidence);

/// `antecedent;consequent;support;confidence;lift`, items `|`-joined, metrics to 3 decimals.
void write_rules_csv(const std::vector<AssociationRule>& rules, const TransactionSet& tx,
                     const std::filesystem::path& path);

std::string join_items(const std::vector<std::string>& names);

}  // namespace earlyrisk::assoc
