#include "earlyrisk/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "earlyrisk/registry.hpp"

namespace earlyrisk {
namespace {

using nlohmann::json;

class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) {
            throw Error("config: " + path_ + " must be a JSON object");
        }
    }

    const json* find(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void get(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(key, "a number");
            out = v->get<double>();
        }
    }

    void get(const std::string& key, std::size_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer() || v->get<std::int64_t>() < 0) fail(key, "a nonnegative integer");
            out = v->get<std::size_t>();
        }
    }

    void get(const std::string& key, std::uint64_t& out, int) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
                fail(key, "a nonnegative integer");
            }
            out = v->get<std::uint64_t>();
        }
    }

    void get(const std::string& key, bool& out) {
        if (const json* v = find(key)) {
            if (!v->is_boolean()) fail(key, "true or false");
            out = v->get<bool>();
        }
    }

    void get(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(key, "a string");
            out = v->get<std::string>();
        }
    }

    void get(const std::string& key, std::filesystem::path& out) {
        std::string s = out.string();
        get(key, s);
        out = s;
    }

    void get(const std::string& key, std::vector<std::string>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(key, "an array of strings");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_string()) fail(key, "an array of strings");
                out.push_back(e.get<std::string>());
            }
        }
    }

    /// null means unlimited.
    void get_depth(const std::string& key, std::size_t& out) {
        if (const json* v = find(key)) {
            if (v->is_null()) {
                out = forests::kUnlimited;
                return;
            }
            if (!v->is_number_integer() || v->get<std::int64_t>() < 0) fail(key, "a nonnegative integer or null");
            out = v->get<std::size_t>();
        }
    }

    template <typename Fn>
    void child(const std::string& key, Fn&& fn) {
        if (const json* v = find(key)) {
            ObjectReader sub(*v, path_ + "." + key);
            fn(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) {
                throw Error("config: unknown key '" + path_ + "." + key + "'");
            }
        }
    }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& expected) const {
        throw Error("config: '" + path_ + "." + key + "' must be " + expected);
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

json depth_json(std::size_t d) { return d == forests::kUnlimited ? json(nullptr) : json(d); }

std::string penalty_name(baselines::Penalty p) {
    switch (p) {
        case baselines::Penalty::none: return "none";
        case baselines::Penalty::l1: return "l1";
        case baselines::Penalty::l2: return "l2";
    }
    return "l2";
}

void read_forest(ObjectReader& r, forests::ForestOptions& o) {
    r.get("n_trees", o.n_trees);
    r.get_depth("max_depth", o.max_depth);
    r.get("min_samples_split", o.min_samples_split);
    r.get("feature_subsample", o.feature_subsample);
}

json forest_json(const forests::ForestOptions& o) {
    return {{"n_trees", o.n_trees},
            {"max_depth", depth_json(o.max_depth)},
            {"min_samples_split", o.min_samples_split},
            {"feature_subsample", o.feature_subsample}};
}

void read_gain_tree(ObjectReader& r, boosting::GainTreeOptions& o) {
    r.get("lambda", o.lambda);
    r.get("gamma", o.gamma);
    r.get("alpha", o.alpha);
    r.get("min_child_weight", o.min_child_weight);
    r.get_depth("max_depth", o.max_depth);
}

json gain_tree_json(const boosting::GainTreeOptions& o) {
    return {{"lambda", o.lambda},
            {"gamma", o.gamma},
            {"alpha", o.alpha},
            {"min_child_weight", o.min_child_weight},
            {"max_depth", depth_json(o.max_depth)}};
}

}  // namespace

void RunConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error("config: " + msg); };
    if (schema_version != kConfigSchemaVersion) {
        fail("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
             std::to_string(kConfigSchemaVersion) + ")");
    }
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) fail("split_ratio must lie in (0, 1)");
    if (cv_folds < 2) fail("cv_folds must be at least 2");
    if (!(apriori.min_support > 0.0 && apriori.min_support <= 1.0)) fail("apriori.min_support must lie in (0, 1]");
    if (!(apriori.min_confidence >= 0.0 && apriori.min_confidence <= 1.0)) {
        fail("apriori.min_confidence must lie in [0, 1]");
    }
    if (selection.chi2_top_k < 1) fail("selection.chi2_top_k must be at least 1");
    if (!(selection.l1_strength > 0.0)) fail("selection.l1_strength must be positive");
    if (selection.importance.n_trees < 1) fail("selection.importance_trees must be at least 1");
    if (selection.importance.gbdt.tree.max_leaves < 2) fail("selection.gbdt.max_leaves must be at least 2");
    if (selection.vote_threshold < 1) fail("selection.vote_threshold must be at least 1");
    if (models.empty()) fail("models must name at least one model");
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (!is_known_model(m)) {
            std::string known;
            for (const auto& k : model_names()) known += (known.empty() ? "" : ", ") + k;
            fail("unknown model '" + m + "' (known: " + known + ")");
        }
        if (!seen.insert(m).second) fail("model '" + m + "' listed twice");
    }
    if (hyper.knn_k < 1) fail("hyperparameters.knn.k must be at least 1");
    if (!(hyper.gnb_var_smoothing >= 0.0)) fail("hyperparameters.gnb.var_smoothing must be nonnegative");
    if (hyper.rf.n_trees < 1 || hyper.extra_trees.n_trees < 1) fail("forest n_trees must be at least 1");
    if (hyper.adaboost.n_rounds < 1) fail("hyperparameters.adaboost.n_rounds must be at least 1");
    if (hyper.gb.n_stages < 1 || !(hyper.gb.learning_rate > 0.0)) fail("hyperparameters.gb needs n_stages >= 1 and learning_rate > 0");
    if (hyper.xgb.n_rounds < 1 || !(hyper.xgb.learning_rate > 0.0)) fail("hyperparameters.xgb needs n_rounds >= 1 and learning_rate > 0");
    if (!(hyper.svm.strength > 0.0) || hyper.svm.epochs < 1) fail("hyperparameters.svm needs strength > 0 and epochs >= 1");
    if (!(hyper.lr.strength >= 0.0) || hyper.lr.max_iter < 1) fail("hyperparameters.lr needs strength >= 0 and max_iter >= 1");
    dnet::DNetConfig probe = hyper.dnet;
    probe.input_length = probe.kernel + std::max<std::size_t>(probe.pool, 1) - 1;
    probe.validate();
}

RunConfig default_config() {
    RunConfig c;
    c.models = model_names();
    return c;
}

RunConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig c = default_config();
    ObjectReader root(doc, "$");
    if (root.find("schema_version") == nullptr) {
        throw Error("config: missing 'schema_version' (expected " + std::to_string(kConfigSchemaVersion) + ")");
    }
    {
        std::size_t version = 0;
        root.get("schema_version", version);
        c.schema_version = static_cast<int>(version);
    }
    root.get("data", c.data);
    root.get("seed", c.seed, 0);
    root.get("split_ratio", c.split_ratio);
    root.get("cv_folds", c.cv_folds);
    root.get("stratified_cv", c.stratified_cv);
    root.get("output_dir", c.output_dir);
    root.child("apriori", [&](ObjectReader& r) {
        r.get("min_support", c.apriori.min_support);
        r.get("min_confidence", c.apriori.min_confidence);
        r.get("columns", c.apriori.columns);
    });
    root.child("selection", [&](ObjectReader& r) {
        auto& s = c.selection;
        r.get("pearson_threshold", s.pearson_threshold);
        r.get("chi2_top_k", s.chi2_top_k);
        r.get("rfe_n_select", s.rfe_n_select);
        r.get("l1_strength", s.l1_strength);
        r.get("importance_trees", s.importance.n_trees);
        r.get("vote_threshold", s.vote_threshold);
        r.child("gbdt", [&](ObjectReader& g) {
            g.get("n_rounds", s.importance.gbdt.n_rounds);
            g.get("learning_rate", s.importance.gbdt.learning_rate);
            g.get("max_leaves", s.importance.gbdt.tree.max_leaves);
            read_gain_tree(g, s.importance.gbdt.tree);
        });
    });
    root.get("models", c.models);
    root.child("hyperparameters", [&](ObjectReader& h) {
        auto& m = c.hyper;
        h.child("lr", [&](ObjectReader& r) {
            std::string penalty = penalty_name(m.lr.penalty);
            r.get("penalty", penalty);
            if (penalty == "none") m.lr.penalty = baselines::Penalty::none;
            else if (penalty == "l1") m.lr.penalty = baselines::Penalty::l1;
            else if (penalty == "l2") m.lr.penalty = baselines::Penalty::l2;
            else throw Error("config: '$.hyperparameters.lr.penalty' must be one of none, l1, l2");
            r.get("strength", m.lr.strength);
            r.get("learning_rate", m.lr.lr);
            r.get("max_iter", m.lr.max_iter);
            r.get("tol", m.lr.tol);
            r.get("accelerated", m.lr.accelerated);
        });
        h.child("svm", [&](ObjectReader& r) {
            r.get("strength", m.svm.strength);
            r.get("epochs", m.svm.epochs);
        });
        h.child("knn", [&](ObjectReader& r) { r.get("k", m.knn_k); });
        h.child("gnb", [&](ObjectReader& r) { r.get("var_smoothing", m.gnb_var_smoothing); });
        h.child("dt", [&](ObjectReader& r) {
            r.get_depth("max_depth", m.dt.max_depth);
            r.get("min_samples_split", m.dt.min_samples_split);
        });
        h.child("rf", [&](ObjectReader& r) { read_forest(r, m.rf); });
        h.child("extra_trees", [&](ObjectReader& r) { read_forest(r, m.extra_trees); });
        h.child("adaboost", [&](ObjectReader& r) { r.get("n_rounds", m.adaboost.n_rounds); });
        h.child("gb", [&](ObjectReader& r) {
            r.get("n_stages", m.gb.n_stages);
            r.get("learning_rate", m.gb.learning_rate);
            r.get_depth("max_depth", m.gb.max_depth);
            r.get("min_samples_split", m.gb.min_samples_split);
            r.get("leaf_clamp", m.gb.leaf_clamp);
        });
        h.child("xgb", [&](ObjectReader& r) {
            r.get("n_rounds", m.xgb.n_rounds);
            r.get("learning_rate", m.xgb.learning_rate);
            read_gain_tree(r, m.xgb.tree);
        });
        h.child("dnet", [&](ObjectReader& r) {
            auto& d = m.dnet;
            r.get("conv_filters", d.conv_filters);
            r.get("kernel", d.kernel);
            r.get("pool", d.pool);
            r.get("dropout_rate", d.dropout_rate);
            r.get("residual_units", d.residual_units);
            r.get("lstm_units", d.lstm_units);
            r.get("dense_units", d.dense_units);
            r.get("lr0", d.lr0);
            r.get("decay", d.decay);
            r.get("epochs", d.epochs);
            r.get("batch_size", d.batch_size);
            r.get("bn_epsilon", d.bn_epsilon);
            r.get("bn_momentum", d.bn_momentum);
        });
    });
    root.finish();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("config: cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
    const auto& m = c.hyper;
    const auto& s = c.selection;
    json gbdt = gain_tree_json(s.importance.gbdt.tree);
    gbdt["n_rounds"] = s.importance.gbdt.n_rounds;
    gbdt["learning_rate"] = s.importance.gbdt.learning_rate;
    gbdt["max_leaves"] = s.importance.gbdt.tree.max_leaves;
    json xgb = gain_tree_json(m.xgb.tree);
    xgb["n_rounds"] = m.xgb.n_rounds;
    xgb["learning_rate"] = m.xgb.learning_rate;
    json doc = {
        {"schema_version", c.schema_version},
        {"data", c.data.generic_string()},
        {"seed", c.seed},
        {"split_ratio", c.split_ratio},
        {"cv_folds", c.cv_folds},
        {"stratified_cv", c.stratified_cv},
        {"output_dir", c.output_dir.generic_string()},
        {"apriori",
         {{"min_support", c.apriori.min_support},
          {"min_confidence", c.apriori.min_confidence},
          {"columns", c.apriori.columns}}},
        {"selection",
         {{"pearson_threshold", s.pearson_threshold},
          {"chi2_top_k", s.chi2_top_k},
          {"rfe_n_select", s.rfe_n_select},
          {"l1_strength", s.l1_strength},
          {"importance_trees", s.importance.n_trees},
          {"vote_threshold", s.vote_threshold},
          {"gbdt", gbdt}}},
        {"models", c.models},
        {"hyperparameters",
         {{"lr",
           {{"penalty", penalty_name(m.lr.penalty)},
            {"strength", m.lr.strength},
            {"learning_rate", m.lr.lr},
            {"max_iter", m.lr.max_iter},
            {"tol", m.lr.tol},
            {"accelerated", m.lr.accelerated}}},
          {"svm", {{"strength", m.svm.strength}, {"epochs", m.svm.epochs}}},
          {"knn", {{"k", m.knn_k}}},
          {"gnb", {{"var_smoothing", m.gnb_var_smoothing}}},
          {"dt", {{"max_depth", depth_json(m.dt.max_depth)}, {"min_samples_split", m.dt.min_samples_split}}},
          {"rf", forest_json(m.rf)},
          {"extra_trees", forest_json(m.extra_trees)},
          {"adaboost", {{"n_rounds", m.adaboost.n_rounds}}},
          {"gb",
           {{"n_stages", m.gb.n_stages},
            {"learning_rate", m.gb.learning_rate},
            {"max_depth", depth_json(m.gb.max_depth)},
            {"min_samples_split", m.gb.min_samples_split},
            {"leaf_clamp", m.gb.leaf_clamp}}},
          {"xgb", xgb},
          {"dnet",
           {{"conv_filters", m.dnet.conv_filters},
            {"kernel", m.dnet.kernel},
            {"pool", m.dnet.pool},
            {"dropout_rate", m.dnet.dropout_rate},
            {"residual_units", m.dnet.residual_units},
            {"lstm_units", m.dnet.lstm_units},
            {"dense_units", m.dnet.dense_units},
            {"lr0", m.dnet.lr0},
            {"decay", m.dnet.decay},
            {"epochs", m.dnet.epochs},
            {"batch_size", m.dnet.batch_size},
            {"bn_epsilon", m.dnet.bn_epsilon},
            {"bn_momentum", m.dnet.bn_momentum}}}}},
    };
    return doc.dump(2) + "\n";
}

std::vector<std::string> split_model_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
    }
    return out;
}

}  // namespace earlyrisk
