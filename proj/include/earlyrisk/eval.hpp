#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "earlyrisk/model.hpp"
#include "earlyrisk/tabular.hpp"

namespace earlyrisk::eval {

struct ConfusionMatrix {
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tp = 0;

    std::size_t total() const noexcept { return tn + fp + fn + tp; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// Predicted positive when score >= threshold.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    /// Set when the matching denominator is zero; the rate is then reported as 0.
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;

    bool degenerate() const noexcept { return precision_degenerate || recall_degenerate || f1_degenerate; }
};

Metrics metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    /// Scores >= threshold are called positive; the first point uses +infinity.
    double threshold = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// One point per distinct score (descending) after the (0, 0) origin; tied scores move
/// tp and fp together. AUC by the trapezoid rule.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Fits a fresh model on the given rows; `seed` is the per-fold sub-seed.
using ModelFactory = std::function<ModelPtr(const Matrix& x, std::span<const int> y, std::uint64_t seed)>;

struct CvResult {
    std::vector<double> fold_accuracies;
    double cv_accuracy = 0.0;
};

/// Fits on all folds but i and scores accuracy on fold i; folds run concurrently with
/// sub-seeds derive_seed(plan.seed, i).
CvResult cross_validate(const ModelFactory& factory, const tabular::EncodedDataset& ds,
                        const tabular::FoldPlan& plan);

/// Test-split results for one model.
struct ModelEvaluation {
    std::string model;
    ConfusionMatrix confusion;
    Metrics metrics;
    double cv_accuracy = 0.0;
    RocCurve roc;
};

ModelEvaluation evaluate(const std::string& model, std::span<const double> scores, std::span<const int> labels,
                         double cv_accuracy);

/// `model,accuracy,cv_accuracy,precision,recall,f1,auc`
void write_metrics_csv(std::span<const ModelEvaluation> rows, const std::filesystem::path& path);
/// `model,tn,fp,fn,tp`
void write_confusion_csv(std::span<const ModelEvaluation> rows, const std::filesystem::path& path);
/// `threshold,fpr,tpr`
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);

struct MetricsRow {
    std::string model;
    double accuracy = 0.0;
    double cv_accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
};

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
std::vector<std::pair<std::string, ConfusionMatrix>> read_confusion_csv(const std::filesystem::path& path);
RocCurve read_roc_csv(const std::filesystem::path& path);

}  // namespace earlyrisk::eval
