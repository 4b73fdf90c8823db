#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "earlyrisk/baselines.hpp"
#include "earlyrisk/boosting.hpp"
#include "earlyrisk/dnet.hpp"
#include "earlyrisk/featsel.hpp"
#include "earlyrisk/forests.hpp"

namespace earlyrisk {

inline constexpr int kConfigSchemaVersion = 1;

struct AprioriSettings {
    double min_support = 0.1;
    double min_confidence = 0.7;
    /// Empty means every yes/no symptom column.
    std::vector<std::string> columns;
};

struct ModelSettings {
    baselines::LogisticOptions lr{};
    baselines::SvmOptions svm{};
    std::size_t knn_k = 5;
    double gnb_var_smoothing = 1e-9;
    forests::DecisionTreeOptions dt{};
    forests::ForestOptions rf{};
    forests::ForestOptions extra_trees{};
    boosting::AdaBoostOptions adaboost{};
    boosting::GradientBoostingOptions gb{};
    boosting::XgbOptions xgb{};
    /// input_length is replaced by the number of chosen features at fit time.
    dnet::DNetConfig dnet{};
};

struct RunConfig {
    int schema_version = kConfigSchemaVersion;
    std::filesystem::path data = "data/diabetes_data_upload.csv";
    std::uint64_t seed = 42;
    double split_ratio = 0.8;
    std::size_t cv_folds = 8;
    bool stratified_cv = true;
    std::filesystem::path output_dir = "out";
    AprioriSettings apriori{};
    featsel::SelectionConfig selection{};
    std::vector<std::string> models;
    ModelSettings hyper{};

    /// Every numeric field within its operation's preconditions; models known and unique.
    void validate() const;
};

/// Defaults with all eleven models enabled.
RunConfig default_config();

/// Parses a JSON document. Missing keys keep their defaults; unknown keys and
/// wrongly typed values are errors naming the JSON path.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// The fully resolved configuration as indented JSON (every key present).
std::string config_to_json(const RunConfig& config);

/// Splits "a,b,c" and trims each name.
std::vector<std::string> split_model_list(const std::string& text);

}  // namespace earlyrisk
