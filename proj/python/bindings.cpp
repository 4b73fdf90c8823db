#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "earlyrisk/assoc.hpp"
#include "earlyrisk/config.hpp"
#include "earlyrisk/dnet.hpp"
#include "earlyrisk/eval.hpp"
#include "earlyrisk/featsel.hpp"
#include "earlyrisk/pipeline.hpp"
#include "earlyrisk/registry.hpp"
#include "earlyrisk/tabular.hpp"

namespace py = pybind11;
using namespace earlyrisk;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) {
            throw Error("ragged rows: row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                        " values, expected " + std::to_string(m.cols()));
        }
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::vector<std::vector<double>> to_rows(const Matrix& m) {
    std::vector<std::vector<double>> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
    return out;
}

py::dict metrics_dict(const eval::Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["precision"] = m.precision;
    d["recall"] = m.recall;
    d["f1"] = m.f1;
    d["degenerate"] = m.degenerate();
    return d;
}

struct PyModel {
    std::shared_ptr<ScoredModel> model;

    std::vector<double> score(const std::vector<std::vector<double>>& rows) const {
        return model->score_all(to_matrix(rows));
    }
    std::vector<int> predict(const std::vector<std::vector<double>>& rows) const {
        std::vector<int> out;
        for (double s : score(rows)) out.push_back(s >= 0.5 ? 1 : 0);
        return out;
    }
};

}  // namespace

PYBIND11_MODULE(_earlyrisk, m) {
    m.doc() = "earlyrisk core bindings";
    py::register_exception<Error>(m, "EarlyriskError", PyExc_RuntimeError);

    m.def("version", &pipeline::toolkit_version);

    py::class_<tabular::EncodedDataset>(m, "Dataset")
        .def_property_readonly("features", [](const tabular::EncodedDataset& d) { return to_rows(d.features); })
        .def_readonly("target", &tabular::EncodedDataset::target)
        .def_readonly("feature_names", &tabular::EncodedDataset::feature_names)
        .def("__len__", &tabular::EncodedDataset::size)
        .def("select_features", &tabular::EncodedDataset::select_features, py::arg("names"));

    m.def(
        "load_dataset",
        [](const std::filesystem::path& path) {
            const auto raw = tabular::load_csv(path);
            return tabular::encode(raw, tabular::EncodingSchema::for_header(raw.header));
        },
        py::arg("path"), "Read a raw CSV and encode every column to [0, 1].");

    m.def(
        "mine_rules",
        [](const tabular::EncodedDataset& ds, double min_support, double min_confidence) {
            const auto tx = assoc::to_transactions(ds, assoc::symptom_columns(ds));
            const auto rules = assoc::generate_rules(assoc::apriori(tx, min_support), tx, min_confidence);
            py::list out;
            for (const auto& r : rules) {
                py::dict d;
                d["antecedent"] = tx.names(r.antecedent);
                d["consequent"] = tx.names(r.consequent);
                d["support"] = r.support;
                d["confidence"] = r.confidence;
                d["lift"] = r.lift;
                out.append(d);
            }
            return out;
        },
        py::arg("dataset"), py::arg("min_support") = 0.1, py::arg("min_confidence") = 0.7);

    m.def(
        "vote_features",
        [](const tabular::EncodedDataset& ds, std::size_t threshold, std::uint64_t seed) {
            featsel::SelectionConfig cfg;
            cfg.vote_threshold = threshold;
            cfg.importance.seed = seed;
            const auto table = featsel::vote(featsel::run_selectors(ds, cfg), threshold);
            py::dict d;
            d["chosen"] = table.chosen;
            d["ranking"] = table.ranking;
            d["counts"] = table.counts;
            d["methods"] = table.methods;
            return d;
        },
        py::arg("dataset"), py::arg("threshold") = 4, py::arg("seed") = 0);

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("name", [](const PyModel& p) { return p.model->name(); })
        .def("score", &PyModel::score, py::arg("rows"))
        .def("predict", &PyModel::predict, py::arg("rows"));

    m.def("model_names", &model_names);
    m.def(
        "fit",
        [](const std::string& name, const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
           std::uint64_t seed) {
            const auto factory = make_factory(name, default_config().hyper);
            const auto x = to_matrix(rows);
            py::gil_scoped_release release;
            return PyModel{std::shared_ptr<ScoredModel>(factory(x, labels, seed))};
        },
        py::arg("name"), py::arg("rows"), py::arg("labels"), py::arg("seed") = 0);

    m.def(
        "metrics",
        [](std::size_t tn, std::size_t fp, std::size_t fn, std::size_t tp) {
            return metrics_dict(eval::metrics(eval::ConfusionMatrix{tn, fp, fn, tp}));
        },
        py::arg("tn"), py::arg("fp"), py::arg("fn"), py::arg("tp"));

    m.def(
        "roc_auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            const auto curve = eval::roc_auc(scores, labels);
            std::vector<std::tuple<double, double, double>> points;
            for (const auto& p : curve.points) points.emplace_back(p.fpr, p.tpr, p.threshold);
            return py::make_tuple(points, curve.auc);
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "lr_at",
        [](std::size_t epoch, double lr0, double decay) {
            dnet::DNetConfig cfg;
            cfg.lr0 = lr0;
            cfg.decay = decay;
            return dnet::lr_at(cfg, epoch);
        },
        py::arg("epoch"), py::arg("lr0") = 0.01, py::arg("decay") = 0.9);

    m.def(
        "run",
        [](const std::string& config_json, std::optional<std::filesystem::path> data,
           std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed,
           std::optional<std::vector<std::string>> models) {
            auto cfg = config_json.empty() ? default_config() : parse_config(config_json);
            if (data) cfg.data = *data;
            if (out) cfg.output_dir = *out;
            if (seed) cfg.seed = *seed;
            if (models) cfg.models = *models;
            pipeline::Manifest manifest;
            {
                py::gil_scoped_release release;
                manifest = pipeline::run_all(cfg);
            }
            py::dict d;
            d["version"] = manifest.version;
            py::dict stages;
            for (const auto& s : manifest.stages) stages[py::str(s.stage)] = s.seconds;
            d["stages"] = stages;
            py::dict sums;
            for (const auto& [name, sum] : manifest.checksums) sums[py::str(name)] = sum;
            d["outputs"] = sums;
            return d;
        },
        py::arg("config_json") = "", py::arg("data") = py::none(), py::arg("out") = py::none(),
        py::arg("seed") = py::none(), py::arg("models") = py::none(),
        "Run every stage and return the manifest (version, stage timings, output checksums).");
}
