#pragma once

#include <string>
#include <vector>

#include "earlyrisk/eval.hpp"
#include "earlyrisk/tabular.hpp"

/// Published reference results for the early-stage diabetes data set and the
/// tolerances used when comparing a run against them.
namespace earlyrisk::reference {

struct Correlation {
    std::string feature;
    double value;
};

struct Rule {
    int number;
    std::vector<std::string> antecedent;
    std::string consequent;
    double support;
    double confidence;
    double lift;
};

struct AccuracyFloor {
    std::string model;
    double floor;
};

inline constexpr double kCorrelationTolerance = 0.02;
inline constexpr double kRuleSupportTolerance = 0.005;
inline constexpr double kRuleConfidenceTolerance = 0.005;
inline constexpr double kRuleLiftTolerance = 0.02;
inline constexpr std::size_t kMinMatchingRules = 5;
inline constexpr std::size_t kRuleCount = 1150;
inline constexpr double kRuleCountTolerance = 0.15;
inline constexpr std::size_t kMinChosenOverlap = 8;
inline constexpr double kRfCvFloor = 0.93;

const std::vector<Correlation>& correlations();
/// Top rules at min support 0.1 / min confidence 0.7; rules that must match are listed first.
const std::vector<Rule>& rules();
const std::vector<int>& required_rules();
const std::vector<std::string>& chosen_features();
const std::vector<AccuracyFloor>& accuracy_floors();

/// One comparison against a reference value.
struct Check {
    std::string group;
    std::string description;
    std::string expected;
    std::string observed;
    bool passed = false;
};

/// Pearson r per listed feature.
std::vector<Check> correlation_checks(const tabular::EncodedDataset& ds);

/// Support, confidence and lift of each reference rule computed on the presence items of `ds`.
std::vector<Check> rule_metric_checks(const tabular::EncodedDataset& ds);

/// Passes when at least kMinMatchingRules rule checks pass, the required ones among them.
Check rule_metric_summary(const std::vector<Check>& rule_checks);

Check rule_count_check(std::size_t count);

Check vote_overlap_check(const std::vector<std::string>& chosen);

/// Test accuracy floors for the models present, plus the forest CV floor.
std::vector<Check> accuracy_floor_checks(const std::vector<eval::MetricsRow>& rows);

}  // namespace earlyrisk::reference
