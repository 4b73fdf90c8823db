#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "earlyrisk/baselines.hpp"
#include "earlyrisk/boosting.hpp"
#include "earlyrisk/tabular.hpp"

namespace earlyrisk::featsel {

/// Output of one selector: a score per feature and the features it keeps.
struct SelectorReport {
    std::string method;
    std::vector<std::string> feature_names;
    std::vector<double> scores;
    std::vector<bool> selected;
    /// Human-readable remarks (degenerate columns, empty selection, ...).
    std::vector<std::string> notes;
    /// Model fits performed (RFE only).
    std::size_t fits = 0;

    std::size_t selected_count() const;
};

struct ScoreResult {
    std::vector<double> scores;
    /// Columns whose score is defined by convention (zero variance, skipped terms).
    std::vector<bool> degenerate;
};

/// Pearson r between each feature and the target with population moments.
/// Zero-variance features get r = 0 and are flagged.
ScoreResult pearson_scores(const tabular::EncodedDataset& ds);

/// Chi-square statistic per feature: O_cj = sum over rows of class c of x_ij,
/// E_cj = (sum_i x_ij) n_c / n, chi2_j = sum_c (O - E)^2 / E. Terms with E = 0 are
/// skipped and flagged. Features must be nonnegative.
ScoreResult chi2_scores(const tabular::EncodedDataset& ds);

/// Keeps |r| >= threshold.
SelectorReport pearson_select(const tabular::EncodedDataset& ds, double threshold = 0.0);

/// Keeps the top_k chi-square scores (equal scores keep the lower feature index).
SelectorReport chi2_select(const tabular::EncodedDataset& ds, std::size_t top_k = 10);

/// Logistic settings for the selectors: auto step, accelerated, enough iterations
/// for well-converged coefficients.
baselines::LogisticOptions selector_logistic_defaults();

/// Recursive feature elimination with L2 logistic regression: refit on the survivors
/// and drop the smallest |coefficient| (ties drop the highest index) until n_select
/// remain. Scores are 1 for kept features and 1/rank for eliminated ones, where the
/// last feature eliminated has rank 2.
SelectorReport rfe(const tabular::EncodedDataset& ds, std::size_t n_select,
                   baselines::LogisticOptions options = selector_logistic_defaults());

/// L1 logistic regression; keeps |w_j| > 1e-8. Scores are |w_j|.
SelectorReport l1_logistic_select(const tabular::EncodedDataset& ds, double strength,
                                  baselines::LogisticOptions options = selector_logistic_defaults());

enum class ForestKind { random_forest, leafwise_gbdt };

struct ImportanceOptions {
    std::size_t n_trees = 500;
    boosting::LeafwiseOptions gbdt{};
    std::uint64_t seed = 0;
};

/// Normalized impurity (forest) or split-gain (leaf-wise boosting) importance; keeps
/// importance >= 1/p, the mean importance.
SelectorReport impurity_importance_select(const tabular::EncodedDataset& ds, ForestKind kind,
                                          const ImportanceOptions& options = {});

struct VoteTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> methods;
    /// votes[method][feature]
    std::vector<std::vector<bool>> votes;
    std::vector<std::size_t> counts;
    std::vector<double> abs_pearson;
    std::size_t threshold = 4;
    /// Features with count >= threshold, ordered by (count desc, |r| desc, name).
    std::vector<std::string> chosen;
    /// Every feature in the same order as `chosen`.
    std::vector<std::string> ranking;
};

/// Counts selections per feature. |r| is taken from the report named "pearson".
VoteTable vote(const std::vector<SelectorReport>& reports, std::size_t threshold = 4);

struct SelectionConfig {
    double pearson_threshold = 0.0;
    std::size_t chi2_top_k = 10;
    /// 0 means every feature.
    std::size_t rfe_n_select = 0;
    double l1_strength = 0.01;
    ImportanceOptions importance{};
    std::size_t vote_threshold = 4;
};

/// The six selectors in the order pearson, chi2, rfe, l1, rf, gbdt.
std::vector<SelectorReport> run_selectors(const tabular::EncodedDataset& ds, const SelectionConfig& config);

/// `feature,pearson,chi2,rfe,l1,rf,gbdt,total,chosen` with True/False cells, one row
/// per feature in ranking order.
void write_votes_csv(const VoteTable& table, const std::filesystem::path& path);

/// Reads the `chosen` column of votes.csv back, in file order.
std::vector<std::string> read_chosen_features(const std::filesystem::path& path);

}  // namespace earlyrisk::featsel
