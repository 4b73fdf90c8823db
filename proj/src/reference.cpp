#include "earlyrisk/reference.hpp"

#include <algorithm>
#include <cmath>

#include "earlyrisk/assoc.hpp"
#include "earlyrisk/featsel.hpp"

namespace earlyrisk::reference {
namespace {

std::string fixed(double v, int decimals) { return format_fixed(v, decimals); }

}  // namespace

const std::vector<Correlation>& correlations() {
    static const std::vector<Correlation> values{
        {"Polyuria", 0.66},          {"Polydipsia", 0.64},      {"Gender", -0.44},
        {"sudden weight loss", 0.43}, {"Polyphagia", 0.34},      {"weakness", 0.24},
        {"visual blurring", 0.2},     {"Genital thrush", 0.11},  {"Age", 0.10},
    };
    return values;
}

const std::vector<Rule>& rules() {
    static const std::vector<Rule> values{
    {861, {"Polyphagia", "delayed healing", "sudden weight loss", "partial paresis"}, "Polyuria", 0.102, 0.981, 1.978},
    {912, {"sudden weight loss", "Polydipsia", "visual blurring", "partial paresis"}, "weakness", 0.131, 0.971, 1.656},
    {530, {"muscle stiffness", "sudden weight loss", "partial paresis"}, "weakness", 0.121, 0.969, 1.652},
    {1048, {"Polyphagia", "muscle stiffness", "visual blurring", "Itching"}, "delayed healing", 0.119, 0.969, 2.108},
    {1073, {"Polyuria", "visual blurring", "sudden weight loss", "partial paresis", "weakness"}, "Polydipsia", 0.119, 0.969, 2.162},
    {1074, {"Polyuria", "visual blurring", "sudden weight loss", "partial paresis", "Polydipsia"}, "weakness", 0.119, 0.969, 1.652},
    {972, {"muscle stiffness", "Polydipsia", "visual blurring", "partial paresis"}, "weakness", 0.115, 0.968, 1.65},
    {1102, {"Polyuria", "visual blurring", "Polyphagia", "partial paresis", "weakness"}, "Polydipsia", 0.112, 0.967, 2.157},
    {851, {"Polyuria", "muscle stiffness", "sudden weight loss", "partial paresis"}, "weakness", 0.112, 0.967, 1.648},
    {701, {"delayed healing", "sudden weight loss", "partial paresis", "Polydipsia"}, "Polyuria", 0.112, 0.967, 1.948},
    {659, {"Polyuria", "Polyphagia", "visual blurring", "sudden weight loss"}, "Polydipsia", 0.11, 0.966, 2.156},
    {929, {"muscle stiffness", "Polydipsia", "sudden weight loss", "partial paresis"}, "weakness", 0.108, 0.966, 1.646},
    {840, {"Polyuria", "muscle stiffness", "visual blurring", "sudden weight loss"}, "weakness", 0.106, 0.965, 1.645},
    {688, {"Polyuria", "muscle stiffness", "visual blurring", "sudden weight loss"}, "Polydipsia", 0.106, 0.965, 2.153},
    {1050, {"Polyuria", "visual blurring", "sudden weight loss", "Polyphagia", "weakness"}, "Polydipsia", 0.104, 0.964, 2.152},
    {1087, {"Polyuria", "visual blurring", "sudden weight loss", "weakness", "muscle stiffness"}, "Polydipsia", 0.102, 0.964, 2.151},
    {1088, {"muscle stiffness", "Polyuria", "visual blurring", "sudden weight loss", "Polydipsia"}, "weakness", 0.102, 0.964, 1.643},
    {695, {"Polyuria", "Itching", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.102, 0.964, 2.151},
    {664, {"Polyuria", "Polyphagia", "sudden weight loss", "Itching"}, "Polydipsia", 0.102, 0.964, 2.151},
    {627, {"Polyuria", "Polydipsia", "visual blurring", "sudden weight loss"}, "weakness", 0.146, 0.962, 1.64},
    {477, {"muscle stiffness", "partial paresis", "Polydipsia"}, "weakness", 0.142, 0.961, 1.638},
    {520, {"visual blurring", "sudden weight loss", "partial paresis"}, "weakness", 0.138, 0.96, 1.637},
    {682, {"Polyuria", "visual blurring", "partial paresis", "sudden weight loss"}, "Polydipsia", 0.123, 0.955, 2.132},
    {834, {"Polyuria", "visual blurring", "partial paresis", "sudden weight loss"}, "weakness", 0.123, 0.955, 1.629},
    {774, {"Polyuria", "muscle stiffness", "partial paresis", "Polydipsia"}, "weakness", 0.119, 0.954, 1.626},
    {751, {"Polyuria", "muscle stiffness", "visual blurring", "Polydipsia"}, "weakness", 0.117, 0.953, 1.625},
    {285, {"Polyuria", "visual blurring", "sudden weight loss"}, "weakness", 0.154, 0.952, 1.624},
    {626, {"Polyuria", "weakness", "visual blurring", "sudden weight loss"}, "Polydipsia", 0.146, 0.95, 2.12},
    {823, {"Polyuria", "Polyphagia", "visual blurring", "sudden weight loss"}, "weakness", 0.108, 0.949, 1.618},
    {957, {"muscle stiffness", "Polyphagia", "Polydipsia", "partial paresis"}, "weakness", 0.108, 0.949, 1.618},
    {924, {"Itching", "weakness", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.104, 0.947, 2.114},
    {1051, {"Polyuria", "visual blurring", "sudden weight loss", "Polyphagia", "Polydipsia"}, "weakness", 0.104, 0.947, 1.615},
    {1121, {"Polyuria", "delayed healing", "partial paresis", "weakness", "Itching"}, "Polydipsia", 0.102, 0.946, 2.112},
    {320, {"delayed healing", "sudden weight loss", "partial paresis"}, "Polyuria", 0.131, 0.944, 1.904},
    {911, {"sudden weight loss", "weakness", "visual blurring", "partial paresis"}, "Polydipsia", 0.131, 0.944, 2.108},
    {308, {"Polyphagia", "sudden weight loss", "partial paresis"}, "Polyuria", 0.16, 0.943, 1.901},
    {422, {"Polyphagia", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.16, 0.943, 2.105},
    {199, {"Polyuria", "visual blurring", "sudden weight loss"}, "Polydipsia", 0.152, 0.94, 2.099},
    {674, {"Polyuria", "Polyphagia", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.15, 0.94, 2.097},
    {678, {"Polyphagia", "Polydipsia", "sudden weight loss", "partial paresis"}, "Polyuria", 0.15, 0.94, 1.894},
    {436, {"Itching", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.117, 0.938, 2.094},
    {671, {"Polyphagia", "delayed healing", "sudden weight loss", "Polydipsia"}, "Polyuria", 0.112, 0.935, 1.885},
    {832, {"Polyphagia", "weakness", "sudden weight loss", "partial paresis"}, "Polyuria", 0.135, 0.933, 1.885},
    {429, {"visual blurring", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.135, 0.933, 2.083},
    {905, {"Polyphagia", "weakness", "sudden weight loss", "partial paresis"}, "Polydipsia", 0.135, 0.933, 2.083},
    {743, {"Polyuria", "weakness", "visual blurring", "partial paresis"}, "Polydipsia", 0.156, 0.931, 2.078},
    {849, {"weakness", "delayed healing", "sudden weight loss", "partial paresis"}, "Polyuria", 0.104, 0.931, 1.877},
    {1139, {"delayed healing", "Polyphagia", "partial paresis", "Itching", "Polydipsia"}, "Polyuria", 0.104, 0.931, 1.877},
    {438, {"Itching", "muscle stiffness", "sudden weight loss"}, "Polydipsia", 0.102, 0.93, 2.075},
    };
    return values;
}

const std::vector<int>& required_rules() {
    static const std::vector<int> values{861, 912};
    return values;
}

const std::vector<std::string>& chosen_features() {
    static const std::vector<std::string> values{"Polyuria",           "Polydipsia",      "Gender",   "weakness",
                                                 "visual blurring",    "sudden weight loss", "partial paresis",
                                                 "Itching",            "Irritability",    "Age"};
    return values;
}

const std::vector<AccuracyFloor>& accuracy_floors() {
    static const std::vector<AccuracyFloor> values{
        {"rf", 0.95},  {"extra_trees", 0.95}, {"knn", 0.95}, {"gb", 0.95},  {"adaboost", 0.95}, {"lr", 0.90},
        {"svm", 0.90}, {"dt", 0.90},          {"gnb", 0.85}, {"xgb", 0.85}, {"dnet", 0.93},
    };
    return values;
}

std::vector<Check> correlation_checks(const tabular::EncodedDataset& ds) {
    const auto scores = featsel::pearson_scores(ds);
    std::vector<Check> out;
    for (const auto& ref : correlations()) {
        Check c{"correlation", "Pearson r(" + ref.feature + ", class)", fixed(ref.value, 2) + " +/- 0.02", "", false};
        const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), ref.feature);
        if (it == ds.feature_names.end()) {
            c.observed = "column missing";
        } else {
            const double r = scores.scores[static_cast<std::size_t>(it - ds.feature_names.begin())];
            c.observed = fixed(r, 4);
            c.passed = std::abs(r - ref.value) <= kCorrelationTolerance + 1e-12;
        }
        out.push_back(c);
    }
    return out;
}

std::vector<Check> rule_metric_checks(const tabular::EncodedDataset& ds) {
    const auto tx = assoc::to_transactions(ds, assoc::symptom_columns(ds));
    auto item = [&](const std::string& name) -> int {
        const auto it = std::find(tx.item_names.begin(), tx.item_names.end(), name);
        return it == tx.item_names.end() ? -1 : static_cast<int>(it - tx.item_names.begin());
    };
    const double n = static_cast<double>(tx.rows.size());
    std::vector<Check> out;
    for (const auto& ref : rules()) {
        std::string label;
        for (const auto& a : ref.antecedent) label += (label.empty() ? "" : ", ") + a;
        Check c{"rule", "rule #" + std::to_string(ref.number) + " {" + label + "} -> {" + ref.consequent + "}",
                "s=" + fixed(ref.support, 3) + " c=" + fixed(ref.confidence, 3) + " l=" + fixed(ref.lift, 3), "",
                false};
        assoc::Itemset a = 0;
        bool missing = false;
        for (const auto& name : ref.antecedent) {
            const int i = item(name);
            if (i < 0) missing = true;
            else a |= assoc::Itemset{1} << i;
        }
        const int ci = item(ref.consequent);
        if (missing || ci < 0) {
            c.observed = "item missing";
            out.push_back(c);
            continue;
        }
        const assoc::Itemset cons = assoc::Itemset{1} << ci;
        const double sa = static_cast<double>(tx.count(a)) / n;
        const double sc = static_cast<double>(tx.count(cons)) / n;
        const double sac = static_cast<double>(tx.count(a | cons)) / n;
        const double conf = sa > 0.0 ? sac / sa : 0.0;
        const double lift = sc > 0.0 ? conf / sc : 0.0;
        c.observed = "s=" + fixed(sac, 3) + " c=" + fixed(conf, 3) + " l=" + fixed(lift, 3);
        c.passed = std::abs(sac - ref.support) <= kRuleSupportTolerance + 1e-12 &&
                   std::abs(conf - ref.confidence) <= kRuleConfidenceTolerance + 1e-12 &&
                   std::abs(lift - ref.lift) <= kRuleLiftTolerance + 1e-12;
        out.push_back(c);
    }
    return out;
}

Check rule_metric_summary(const std::vector<Check>& rule_checks) {
    std::size_t passed = 0;
    bool required_ok = true;
    for (std::size_t i = 0; i < rule_checks.size(); ++i) {
        passed += rule_checks[i].passed ? 1 : 0;
        const int number = rules()[i].number;
        if (std::find(required_rules().begin(), required_rules().end(), number) != required_rules().end() &&
            !rule_checks[i].passed) {
            required_ok = false;
        }
    }
    Check c{"rule", "reference rules reproduced (support/confidence +/- 0.005, lift +/- 0.02)",
            ">= " + std::to_string(kMinMatchingRules) + " incl. #861 and #912",
            std::to_string(passed) + " of " + std::to_string(rule_checks.size()) +
                (required_ok ? ", required rules match" : ", a required rule differs"),
            false};
    c.passed = required_ok && passed >= kMinMatchingRules;
    return c;
}

Check rule_count_check(std::size_t count) {
    const double lo = static_cast<double>(kRuleCount) * (1.0 - kRuleCountTolerance);
    const double hi = static_cast<double>(kRuleCount) * (1.0 + kRuleCountTolerance);
    const auto v = static_cast<double>(count);
    return {"rule_count", "rules at min support 0.1 / min confidence 0.7",
            std::to_string(kRuleCount) + " +/- 15%", std::to_string(count), v >= lo && v <= hi};
}

Check vote_overlap_check(const std::vector<std::string>& chosen) {
    std::size_t overlap = 0;
    for (const auto& f : chosen_features()) {
        overlap += std::find(chosen.begin(), chosen.end(), f) != chosen.end() ? 1 : 0;
    }
    return {"votes", "overlap of the consensus-chosen features with the reference list",
            ">= " + std::to_string(kMinChosenOverlap) + " of 10",
            std::to_string(overlap) + " of 10 (" + std::to_string(chosen.size()) + " chosen)",
            overlap >= kMinChosenOverlap};
}

std::vector<Check> accuracy_floor_checks(const std::vector<eval::MetricsRow>& rows) {
    std::vector<Check> out;
    for (const auto& floor : accuracy_floors()) {
        const auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.model == floor.model; });
        if (it == rows.end()) continue;
        out.push_back({"accuracy", floor.model + " test accuracy", ">= " + fixed(floor.floor, 2),
                       fixed(it->accuracy, 4), it->accuracy >= floor.floor});
    }
    const auto rf = std::find_if(rows.begin(), rows.end(), [](const auto& r) { return r.model == "rf"; });
    if (rf != rows.end()) {
        out.push_back({"accuracy", "rf cross-validation accuracy", ">= " + fixed(kRfCvFloor, 2),
                       fixed(rf->cv_accuracy, 4), rf->cv_accuracy >= kRfCvFloor});
    }
    return out;
}

}  // namespace earlyrisk::reference
