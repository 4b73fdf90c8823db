#include "earlyrisk/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "earlyrisk/rng.hpp"

namespace earlyrisk::eval {
namespace {

void require_lengths(std::span<const double> scores, std::span<const int> labels, const char* who) {
    if (scores.size() != labels.size()) {
        throw Error(std::string(who) + ": " + std::to_string(scores.size()) + " scores but " +
                    std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) {
        throw Error(std::string(who) + ": no samples");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

std::string fmt(double v) { return format_fixed(v, 6); }

double parse_cell(const std::string& cell, const std::filesystem::path& path) {
    if (cell == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw Error("'" + path.string() + "': bad number '" + cell + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& cell, const std::filesystem::path& path) {
    std::size_t v = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw Error("'" + path.string() + "': bad count '" + cell + "'");
    }
    return v;
}

double trapezoid(const std::vector<RocPoint>& pts) {
    double area = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2.0;
    }
    return area;
}

}  // namespace

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
    require_lengths(scores, labels, "confusion");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i] == 1) {
            (predicted ? cm.tp : cm.fn) += 1;
        } else {
            (predicted ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) {
        throw Error("metrics: empty confusion matrix");
    }
    Metrics m;
    const auto d = [](std::size_t v) { return static_cast<double>(v); };
    m.accuracy = d(cm.tp + cm.tn) / d(cm.total());
    if (cm.tp + cm.fp == 0) {
        m.precision_degenerate = true;
    } else {
        m.precision = d(cm.tp) / d(cm.tp + cm.fp);
    }
    if (cm.tp + cm.fn == 0) {
        m.recall_degenerate = true;
    } else {
        m.recall = d(cm.tp) / d(cm.tp + cm.fn);
    }
    if (m.precision + m.recall == 0.0) {
        m.f1_degenerate = true;
    } else {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    require_lengths(scores, labels, "roc_auc");
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    const std::size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw Error("roc_auc: labels contain a single class");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                                static_cast<double>(tp) / static_cast<double>(positives), s});
    }
    curve.auc = trapezoid(curve.points);
    return curve;
}

CvResult cross_validate(const ModelFactory& factory, const tabular::EncodedDataset& ds,
                        const tabular::FoldPlan& plan) {
    if (plan.k < 2 || plan.folds.size() != plan.k) {
        throw Error("cross_validate: the fold plan needs k >= 2 folds");
    }
    CvResult result;
    result.fold_accuracies.assign(plan.k, 0.0);
    parallel_for(plan.k, [&](std::size_t i) {
        const auto train_rows = plan.training_indices(i);
        const auto train = ds.subset(train_rows);
        if (!std::count(train.target.begin(), train.target.end(), 1) ||
            !std::count(train.target.begin(), train.target.end(), 0)) {
            throw Error("cross_validate: the training part of fold " + std::to_string(i) +
                        " holds a single class; use stratified folds");
        }
        const auto model = factory(train.features, train.target, derive_seed(plan.seed, i));
        const auto held = ds.subset(plan.folds[i]);
        const auto scores = model->score_all(held.features);
        const auto cm = confusion(scores, held.target);
        result.fold_accuracies[i] = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    });
    result.cv_accuracy =
        std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) / static_cast<double>(plan.k);
    return result;
}

ModelEvaluation evaluate(const std::string& model, std::span<const double> scores, std::span<const int> labels,
                         double cv_accuracy) {
    ModelEvaluation e;
    e.model = model;
    e.confusion = confusion(scores, labels);
    e.metrics = metrics(e.confusion);
    e.cv_accuracy = cv_accuracy;
    e.roc = roc_auc(scores, labels);
    return e;
}

void write_metrics_csv(std::span<const ModelEvaluation> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model,accuracy,cv_accuracy,precision,recall,f1,auc\n";
    for (const auto& r : rows) {
        out << r.model << ',' << fmt(r.metrics.accuracy) << ',' << fmt(r.cv_accuracy) << ',' << fmt(r.metrics.precision)
            << ',' << fmt(r.metrics.recall) << ',' << fmt(r.metrics.f1) << ',' << fmt(r.roc.auc) << '\n';
    }
}

void write_confusion_csv(std::span<const ModelEvaluation> rows, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "model,tn,fp,fn,tp\n";
    for (const auto& r : rows) {
        out << r.model << ',' << r.confusion.tn << ',' << r.confusion.fp << ',' << r.confusion.fn << ','
            << r.confusion.tp << '\n';
    }
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
        out << (std::isinf(p.threshold) ? std::string("inf") : fmt(p.threshold)) << ',' << fmt(p.fpr) << ','
            << fmt(p.tpr) << '\n';
    }
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    const auto table = tabular::load_csv(path);
    std::vector<MetricsRow> rows;
    for (const auto& r : table.rows) {
        MetricsRow m;
        m.model = r[table.column_index("model")];
        m.accuracy = parse_cell(r[table.column_index("accuracy")], path);
        m.cv_accuracy = parse_cell(r[table.column_index("cv_accuracy")], path);
        m.precision = parse_cell(r[table.column_index("precision")], path);
        m.recall = parse_cell(r[table.column_index("recall")], path);
        m.f1 = parse_cell(r[table.column_index("f1")], path);
        m.auc = parse_cell(r[table.column_index("auc")], path);
        rows.push_back(m);
    }
    return rows;
}

std::vector<std::pair<std::string, ConfusionMatrix>> read_confusion_csv(const std::filesystem::path& path) {
    const auto table = tabular::load_csv(path);
    std::vector<std::pair<std::string, ConfusionMatrix>> rows;
    for (const auto& r : table.rows) {
        ConfusionMatrix cm;
        cm.tn = parse_count(r[table.column_index("tn")], path);
        cm.fp = parse_count(r[table.column_index("fp")], path);
        cm.fn = parse_count(r[table.column_index("fn")], path);
        cm.tp = parse_count(r[table.column_index("tp")], path);
        rows.emplace_back(r[table.column_index("model")], cm);
    }
    return rows;
}

RocCurve read_roc_csv(const std::filesystem::path& path) {
    const auto table = tabular::load_csv(path);
    RocCurve curve;
    for (const auto& r : table.rows) {
        curve.points.push_back({parse_cell(r[table.column_index("fpr")], path),
                                parse_cell(r[table.column_index("tpr")], path),
                                parse_cell(r[table.column_index("threshold")], path)});
    }
    if (curve.points.size() < 2) {
        throw Error("'" + path.string() + "' holds fewer than two ROC points");
    }
    curve.auc = trapezoid(curve.points);
    return curve;
}

}  // namespace earlyrisk::eval
