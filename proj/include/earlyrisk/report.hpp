#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "earlyrisk/eval.hpp"
#include "earlyrisk/reference.hpp"
#include "earlyrisk/tabular.hpp"

namespace earlyrisk::report {

struct NamedCurve {
    std::string model;
    eval::RocCurve curve;
};

/// One polyline per curve, the chance diagonal, FPR/TPR axes and a legend with AUCs.
std::string roc_svg(std::span<const NamedCurve> curves);
void render_roc_svg(std::span<const NamedCurve> curves, const std::filesystem::path& path);

struct ReportData {
    std::string version;
    std::string data_path;
    std::uint64_t seed = 0;
    std::size_t rows = 0;
    std::size_t positives = 0;
    std::vector<std::string> feature_names;
    std::vector<std::pair<std::string, tabular::NormParams>> normalized;
    std::size_t rule_count = 0;
    /// antecedent, consequent, support, confidence, lift as written in rules.csv.
    std::vector<std::vector<std::string>> top_rules;
    tabular::RawTable votes;
    std::vector<std::string> chosen;
    std::vector<eval::MetricsRow> metrics;
    std::vector<std::pair<std::string, eval::ConfusionMatrix>> confusion;
    std::vector<reference::Check> checks;
};

std::string render_markdown(const ReportData& data);

}  // namespace earlyrisk::report
