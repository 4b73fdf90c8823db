#include "earlyrisk/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "earlyrisk/assoc.hpp"
#include "earlyrisk/dnet.hpp"
#include "earlyrisk/eval.hpp"
#include "earlyrisk/featsel.hpp"
#include "earlyrisk/reference.hpp"
#include "earlyrisk/registry.hpp"
#include "earlyrisk/report.hpp"
#include "earlyrisk/rng.hpp"
#include "earlyrisk/tabular.hpp"

#ifndef EARLYRISK_VERSION
#define EARLYRISK_VERSION "0.0.0"
#endif

namespace earlyrisk::pipeline {
namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kFoldStream = 2;
constexpr std::uint64_t kSelectStream = 3;

constexpr const char* kEncoded = "encoded.csv";
constexpr const char* kRules = "rules.csv";
constexpr const char* kVotes = "votes.csv";
constexpr const char* kSplit = "split.csv";
constexpr const char* kPredictions = "predictions.csv";
constexpr const char* kCheckpoint = "dnet.ckpt";
constexpr const char* kCv = "cv.csv";
constexpr const char* kMetrics = "metrics.csv";
constexpr const char* kConfusion = "confusion.csv";
constexpr const char* kReport = "report.md";
constexpr const char* kRocSvg = "roc.svg";
constexpr const char* kManifest = "manifest.json";

fs::path artifact(const RunConfig& c, const std::string& name) { return c.output_dir / name; }

fs::path roc_name(const std::string& model) { return "roc_" + model + ".csv"; }

/// Path of a prior-stage artifact, or an error telling which subcommand makes it.
fs::path require(const RunConfig& c, const std::string& name, const std::string& producer) {
    const fs::path p = artifact(c, name);
    if (!fs::exists(p)) {
        throw Error("missing '" + p.generic_string() + "'; run `earlyrisk " + producer + "` first");
    }
    return p;
}

void ensure_output_dir(const RunConfig& c) {
    std::error_code ec;
    fs::create_directories(c.output_dir, ec);
    if (ec) {
        throw Error("cannot create output directory '" + c.output_dir.generic_string() + "': " + ec.message());
    }
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + p.generic_string() + "'");
    }
    return out;
}

double parse_real(const std::string& s, const fs::path& where) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error("'" + where.generic_string() + "': bad number '" + s + "'");
    }
    return v;
}

std::size_t parse_index(const std::string& s, const fs::path& where) {
    std::size_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error("'" + where.generic_string() + "': bad integer '" + s + "'");
    }
    return v;
}

tabular::EncodedDataset chosen_dataset(const RunConfig& c) {
    const auto ds = tabular::load_encoded(require(c, kEncoded, "ingest"));
    const auto chosen = featsel::read_chosen_features(require(c, kVotes, "select"));
    return ds.select_features(chosen);
}

/// Enabled models in registry order.
std::vector<std::string> enabled_models(const RunConfig& c) {
    std::vector<std::string> out;
    for (const auto& m : model_names()) {
        if (std::find(c.models.begin(), c.models.end(), m) != c.models.end()) out.push_back(m);
    }
    return out;
}

template <typename Fn>
StageResult timed(const std::string& stage, Fn&& body) {
    const auto start = std::chrono::steady_clock::now();
    StageResult r;
    r.stage = stage;
    r.outputs = body();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::vector<std::vector<std::string>> read_semicolon_rows(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + p.generic_string() + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ';')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

std::string toolkit_version() { return EARLYRISK_VERSION; }

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"ingest", "mine", "select", "train", "cv", "eval", "report"};
    return names;
}

StageResult ingest(const RunConfig& c) {
    return timed("ingest", [&] {
        ensure_output_dir(c);
        if (!fs::exists(c.data)) {
            throw Error("data file '" + c.data.generic_string() + "' does not exist");
        }
        const auto raw = tabular::load_csv(c.data);
        const auto ds = tabular::encode(raw, tabular::EncodingSchema::for_header(raw.header));
        const auto out = artifact(c, kEncoded);
        tabular::save_encoded(ds, out);
        return std::vector<fs::path>{out};
    });
}

StageResult mine(const RunConfig& c) {
    return timed("mine", [&] {
        const auto ds = tabular::load_encoded(require(c, kEncoded, "ingest"));
        const auto columns = c.apriori.columns.empty() ? assoc::symptom_columns(ds) : c.apriori.columns;
        const auto tx = assoc::to_transactions(ds, columns);
        const auto itemsets = assoc::apriori(tx, c.apriori.min_support);
        const auto rules = assoc::generate_rules(itemsets, tx, c.apriori.min_confidence);
        const auto out = artifact(c, kRules);
        assoc::write_rules_csv(rules, tx, out);
        return std::vector<fs::path>{out};
    });
}

StageResult select(const RunConfig& c) {
    return timed("select", [&] {
        const auto ds = tabular::load_encoded(require(c, kEncoded, "ingest"));
        auto sel = c.selection;
        sel.importance.seed = derive_seed(c.seed, kSelectStream);
        const auto reports = featsel::run_selectors(ds, sel);
        const auto table = featsel::vote(reports, sel.vote_threshold);
        const auto out = artifact(c, kVotes);
        featsel::write_votes_csv(table, out);
        return std::vector<fs::path>{out};
    });
}

StageResult train(const RunConfig& c) {
    return timed("train", [&] {
        const auto ds = chosen_dataset(c);
        const auto split = tabular::train_test_split(ds, c.split_ratio, derive_seed(c.seed, kSplitStream));
        const auto train_set = ds.subset(split.train_indices);
        const auto test_set = ds.subset(split.test_indices);
        std::vector<fs::path> outputs;

        const auto split_path = artifact(c, kSplit);
        {
            auto out = open_out(split_path);
            out << "index,part\n";
            for (auto i : split.train_indices) out << i << ",train\n";
            for (auto i : split.test_indices) out << i << ",test\n";
        }
        outputs.push_back(split_path);

        const auto models = enabled_models(c);
        std::vector<ModelPtr> fitted(models.size());
        parallel_for(models.size(), [&](std::size_t i) {
            const auto factory = make_factory(models[i], c.hyper);
            fitted[i] = factory(train_set.features, train_set.target, derive_seed(c.seed, model_stream(models[i])));
        });

        const auto pred_path = artifact(c, kPredictions);
        {
            auto out = open_out(pred_path);
            out << "model,index,label,score\n";
            for (std::size_t m = 0; m < models.size(); ++m) {
                const auto scores = fitted[m]->score_all(test_set.features);
                for (std::size_t i = 0; i < scores.size(); ++i) {
                    out << models[m] << ',' << split.test_indices[i] << ',' << test_set.target[i] << ','
                        << format_roundtrip(scores[i]) << '\n';
                }
            }
        }
        outputs.push_back(pred_path);

        for (std::size_t m = 0; m < models.size(); ++m) {
            if (const auto* net = dynamic_cast<const dnet::DNetModel*>(fitted[m].get())) {
                const auto ckpt = artifact(c, kCheckpoint);
                dnet::save_checkpoint(ckpt, net->config(), net->params());
                outputs.push_back(ckpt);
            }
        }
        return outputs;
    });
}

StageResult cross_validation(const RunConfig& c) {
    return timed("cv", [&] {
        const auto ds = chosen_dataset(c);
        const auto plan = tabular::kfold(ds, c.cv_folds, c.stratified_cv, derive_seed(c.seed, kFoldStream));
        const auto path = artifact(c, kCv);
        auto out = open_out(path);
        out << "model,fold,accuracy\n";
        for (const auto& name : enabled_models(c)) {
            const auto base = make_factory(name, c.hyper);
            const std::uint64_t stream = model_stream(name);
            const eval::ModelFactory factory = [&](const Matrix& x, std::span<const int> y, std::uint64_t seed) {
                return base(x, y, derive_seed(seed, stream));
            };
            const auto result = eval::cross_validate(factory, ds, plan);
            for (std::size_t f = 0; f < result.fold_accuracies.size(); ++f) {
                out << name << ',' << f << ',' << format_roundtrip(result.fold_accuracies[f]) << '\n';
            }
        }
        return std::vector<fs::path>{path};
    });
}

StageResult evaluate(const RunConfig& c) {
    return timed("eval", [&] {
        const auto pred_path = require(c, kPredictions, "train");
        const auto cv_path = require(c, kCv, "cv");
        const auto preds = tabular::load_csv(pred_path);
        const auto cv = tabular::load_csv(cv_path);

        std::vector<std::string> order;
        std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> by_model;
        for (const auto& row : preds.rows) {
            const auto& model = row[preds.column_index("model")];
            if (!by_model.count(model)) order.push_back(model);
            auto& [scores, labels] = by_model[model];
            scores.push_back(parse_real(row[preds.column_index("score")], pred_path));
            labels.push_back(static_cast<int>(parse_index(row[preds.column_index("label")], pred_path)));
        }
        std::map<std::string, std::vector<double>> folds;
        for (const auto& row : cv.rows) {
            folds[row[cv.column_index("model")]].push_back(parse_real(row[cv.column_index("accuracy")], cv_path));
        }

        std::vector<eval::ModelEvaluation> evaluations;
        std::vector<fs::path> outputs;
        for (const auto& model : order) {
            const auto it = folds.find(model);
            if (it == folds.end() || it->second.empty()) {
                throw Error("'" + cv_path.generic_string() + "' has no results for model '" + model +
                            "'; run `earlyrisk cv` first");
            }
            const double cv_acc =
                std::accumulate(it->second.begin(), it->second.end(), 0.0) / static_cast<double>(it->second.size());
            const auto& [scores, labels] = by_model[model];
            evaluations.push_back(eval::evaluate(model, scores, labels, cv_acc));
            const auto roc_path = artifact(c, roc_name(model).string());
            eval::write_roc_csv(evaluations.back().roc, roc_path);
            outputs.push_back(roc_path);
        }
        const auto metrics_path = artifact(c, kMetrics);
        const auto confusion_path = artifact(c, kConfusion);
        eval::write_metrics_csv(evaluations, metrics_path);
        eval::write_confusion_csv(evaluations, confusion_path);
        outputs.insert(outputs.begin(), {metrics_path, confusion_path});
        return outputs;
    });
}

StageResult report(const RunConfig& c) {
    return timed("report", [&] {
        const auto metrics_path = require(c, kMetrics, "eval");
        const auto confusion_path = require(c, kConfusion, "eval");
        const auto rules_path = require(c, kRules, "mine");
        const auto votes_path = require(c, kVotes, "select");
        const auto ds = tabular::load_encoded(require(c, kEncoded, "ingest"));

        report::ReportData d;
        d.version = toolkit_version();
        d.data_path = c.data.generic_string();
        d.seed = c.seed;
        d.rows = ds.size();
        d.positives = ds.positives();
        d.feature_names = ds.feature_names;
        for (const auto& [name, norm] : ds.norm_params) d.normalized.emplace_back(name, norm);
        const auto rules = read_semicolon_rows(rules_path);
        d.rule_count = rules.size();
        d.top_rules.assign(rules.begin(), rules.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(10, rules.size())));
        d.votes = tabular::load_csv(votes_path);
        d.chosen = featsel::read_chosen_features(votes_path);
        d.metrics = eval::read_metrics_csv(metrics_path);
        d.confusion = eval::read_confusion_csv(confusion_path);

        auto add = [&](const std::vector<reference::Check>& checks) {
            d.checks.insert(d.checks.end(), checks.begin(), checks.end());
        };
        add(reference::correlation_checks(ds));
        const auto rule_checks = reference::rule_metric_checks(ds);
        d.checks.push_back(reference::rule_metric_summary(rule_checks));
        for (std::size_t i = 0; i < rule_checks.size(); ++i) {
            const auto& req = reference::required_rules();
            if (std::find(req.begin(), req.end(), reference::rules()[i].number) != req.end()) {
                d.checks.push_back(rule_checks[i]);
            }
        }
        if (c.apriori.min_support == 0.1 && c.apriori.min_confidence == 0.7 && c.apriori.columns.empty()) {
            d.checks.push_back(reference::rule_count_check(d.rule_count));
        }
        d.checks.push_back(reference::vote_overlap_check(d.chosen));
        add(reference::accuracy_floor_checks(d.metrics));

        std::vector<report::NamedCurve> curves;
        for (const auto& m : d.metrics) {
            curves.push_back({m.model, eval::read_roc_csv(require(c, roc_name(m.model).string(), "eval"))});
        }
        const auto svg_path = artifact(c, kRocSvg);
        report::render_roc_svg(curves, svg_path);
        const auto md_path = artifact(c, kReport);
        auto out = open_out(md_path);
        out << report::render_markdown(d);
        return std::vector<fs::path>{md_path, svg_path};
    });
}

StageResult run_stage(const std::string& stage, const RunConfig& c) {
    try {
        if (stage == "ingest") return ingest(c);
        if (stage == "mine") return mine(c);
        if (stage == "select") return select(c);
        if (stage == "train") return train(c);
        if (stage == "cv") return cross_validation(c);
        if (stage == "eval") return evaluate(c);
        if (stage == "report") return report(c);
    } catch (const std::exception& e) {
        throw Error("stage '" + stage + "': " + e.what());
    }
    throw Error("unknown stage '" + stage + "'");
}

Manifest run_all(const RunConfig& c) {
    c.validate();
    ensure_output_dir(c);
    Manifest manifest;
    manifest.version = toolkit_version();
    manifest.config_json = config_to_json(c);
    std::vector<fs::path> written;
    try {
        for (const auto& stage : stage_names()) {
            auto result = run_stage(stage, c);
            written.insert(written.end(), result.outputs.begin(), result.outputs.end());
            manifest.stages.push_back(std::move(result));
        }
        std::set<std::string> names;
        for (const auto& p : written) names.insert(p.filename().generic_string());
        for (const auto& name : names) {
            manifest.checksums.emplace_back(name, "fnv1a64:" + checksum_file(artifact(c, name)));
        }
        nlohmann::ordered_json doc;
        doc["toolkit"] = "earlyrisk";
        doc["version"] = manifest.version;
        doc["config"] = nlohmann::ordered_json::parse(manifest.config_json);
        doc["stages"] = nlohmann::ordered_json::array();
        for (const auto& s : manifest.stages) doc["stages"].push_back({{"name", s.stage}, {"seconds", s.seconds}});
        doc["outputs"] = nlohmann::ordered_json::object();
        for (const auto& [name, sum] : manifest.checksums) doc["outputs"][name] = sum;
        const auto manifest_path = artifact(c, kManifest);
        written.push_back(manifest_path);
        auto out = open_out(manifest_path);
        out << doc.dump(2) << '\n';
        if (!out) {
            throw Error("failed writing '" + manifest_path.generic_string() + "'");
        }
    } catch (...) {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
        throw;
    }
    return manifest;
}

std::string checksum_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.generic_string() + "'");
    }
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace earlyrisk::pipeline
