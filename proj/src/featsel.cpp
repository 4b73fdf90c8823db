#include "earlyrisk/featsel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "earlyrisk/forests.hpp"

namespace earlyrisk::featsel {
namespace {

SelectorReport make_report(const tabular::EncodedDataset& ds, std::string method) {
    SelectorReport r;
    r.method = std::move(method);
    r.feature_names = ds.feature_names;
    r.scores.assign(ds.feature_count(), 0.0);
    r.selected.assign(ds.feature_count(), false);
    return r;
}

void note_empty(SelectorReport& r) {
    if (r.selected_count() == 0) {
        r.notes.push_back(r.method + ": selector kept no features");
    }
}

}  // namespace

std::size_t SelectorReport::selected_count() const {
    return static_cast<std::size_t>(std::count(selected.begin(), selected.end(), true));
}

ScoreResult pearson_scores(const tabular::EncodedDataset& ds) {
    ds.require_two_classes("pearson_scores");
    const std::size_t n = ds.size();
    const std::size_t p = ds.feature_count();
    const double nn = static_cast<double>(n);
    double my = 0.0;
    for (int v : ds.target) my += v;
    my /= nn;
    double vy = 0.0;
    for (int v : ds.target) vy += (v - my) * (v - my);
    vy /= nn;

    ScoreResult out{std::vector<double>(p, 0.0), std::vector<bool>(p, false)};
    for (std::size_t j = 0; j < p; ++j) {
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i) mx += ds.features(i, j);
        mx /= nn;
        double vx = 0.0;
        double cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = ds.features(i, j) - mx;
            vx += dx * dx;
            cov += dx * (ds.target[i] - my);
        }
        vx /= nn;
        cov /= nn;
        if (vx <= 0.0) {
            out.degenerate[j] = true;
            continue;
        }
        out.scores[j] = std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
    }
    return out;
}

ScoreResult chi2_scores(const tabular::EncodedDataset& ds) {
    const std::size_t n = ds.size();
    const std::size_t p = ds.feature_count();
    if (n == 0) {
        throw Error("chi2_scores: empty dataset");
    }
    std::array<double, 2> class_count{0.0, 0.0};
    for (int v : ds.target) class_count[v] += 1.0;

    ScoreResult out{std::vector<double>(p, 0.0), std::vector<bool>(p, false)};
    for (std::size_t j = 0; j < p; ++j) {
        std::array<double, 2> observed{0.0, 0.0};
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = ds.features(i, j);
            if (v < 0.0) {
                throw Error("chi2_scores: feature '" + ds.feature_names[j] + "' has a negative value at row " +
                            std::to_string(i + 1));
            }
            observed[ds.target[i]] += v;
            total += v;
        }
        double chi2 = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double expected = total * class_count[c] / static_cast<double>(n);
            if (expected == 0.0) {
                out.degenerate[j] = true;
                continue;
            }
            const double d = observed[c] - expected;
            chi2 += d * d / expected;
        }
        out.scores[j] = chi2;
    }
    return out;
}

SelectorReport pearson_select(const tabular::EncodedDataset& ds, double threshold) {
    auto r = make_report(ds, "pearson");
    const auto res = pearson_scores(ds);
    r.scores = res.scores;
    for (std::size_t j = 0; j < r.scores.size(); ++j) {
        r.selected[j] = std::abs(r.scores[j]) >= threshold;
        if (res.degenerate[j]) r.notes.push_back("pearson: '" + r.feature_names[j] + "' has zero variance, r = 0");
    }
    note_empty(r);
    return r;
}

SelectorReport chi2_select(const tabular::EncodedDataset& ds, std::size_t top_k) {
    auto r = make_report(ds, "chi2");
    const auto res = chi2_scores(ds);
    r.scores = res.scores;
    std::vector<std::size_t> order(r.scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return r.scores[a] > r.scores[b]; });
    for (std::size_t i = 0; i < std::min(top_k, order.size()); ++i) r.selected[order[i]] = true;
    for (std::size_t j = 0; j < r.scores.size(); ++j) {
        if (res.degenerate[j]) r.notes.push_back("chi2: '" + r.feature_names[j] + "' has an empty expected cell");
    }
    note_empty(r);
    return r;
}

baselines::LogisticOptions selector_logistic_defaults() {
    baselines::LogisticOptions o;
    o.penalty = baselines::Penalty::l2;
    o.strength = 1e-3;
    o.lr = 0.0;
    o.max_iter = 20000;
    o.tol = 1e-6;
    o.accelerated = true;
    return o;
}

SelectorReport rfe(const tabular::EncodedDataset& ds, std::size_t n_select, baselines::LogisticOptions options) {
    const std::size_t p = ds.feature_count();
    if (n_select < 1 || n_select > p) {
        throw Error("rfe: n_select must satisfy 1 <= n_select <= p");
    }
    options.penalty = baselines::Penalty::l2;
    auto report = make_report(ds, "rfe");
    std::vector<std::size_t> alive(p);
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::size_t> eliminated;  // in elimination order
    while (true) {
        const auto model = baselines::fit_logistic(ds.features.select_cols(alive), ds.target, options);
        ++report.fits;
        if (alive.size() == n_select) break;
        const auto& w = model.weights().w;
        std::size_t drop = 0;
        for (std::size_t i = 1; i < alive.size(); ++i) {
            // `<=` lets the later (higher-index) feature win ties.
            if (std::abs(w[i]) <= std::abs(w[drop])) drop = i;
        }
        eliminated.push_back(alive[drop]);
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    for (auto j : alive) {
        report.selected[j] = true;
        report.scores[j] = 1.0;
    }
    for (std::size_t e = 0; e < eliminated.size(); ++e) {
        const auto rank = eliminated.size() - e + 1;
        report.scores[eliminated[e]] = 1.0 / static_cast<double>(rank);
    }
    return report;
}

SelectorReport l1_logistic_select(const tabular::EncodedDataset& ds, double strength,
                                  baselines::LogisticOptions options) {
    if (!(strength > 0.0)) {
        throw Error("l1_logistic_select: strength must be positive");
    }
    options.penalty = baselines::Penalty::l1;
    options.strength = strength;
    const auto model = baselines::fit_logistic(ds.features, ds.target, options);
    if (!model.info().converged) {
        throw Error("l1_logistic_select: no convergence after " + std::to_string(options.max_iter) +
                    " iterations; proximal-gradient norm reached " + format_roundtrip(model.info().gradient_norm) +
                    " (tolerance " + format_roundtrip(options.tol) + ")");
    }
    auto r = make_report(ds, "l1");
    const auto& w = model.weights().w;
    for (std::size_t j = 0; j < w.size(); ++j) {
        r.scores[j] = std::abs(w[j]);
        r.selected[j] = std::abs(w[j]) > 1e-8;
    }
    note_empty(r);
    return r;
}

SelectorReport impurity_importance_select(const tabular::EncodedDataset& ds, ForestKind kind,
                                          const ImportanceOptions& options) {
    std::vector<double> importance;
    std::string method;
    if (kind == ForestKind::random_forest) {
        method = "rf";
        forests::ForestOptions fo;
        fo.n_trees = options.n_trees;
        fo.seed = options.seed;
        importance = forests::fit_random_forest(ds.features, ds.target, fo).impurity_importance();
    } else {
        method = "gbdt";
        auto go = options.gbdt;
        go.seed = options.seed;
        const auto model = boosting::fit_leafwise_gbdt(ds.features, ds.target, go);
        importance = model.feature_gain();
        const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
        if (total > 0.0) {
            for (auto& v : importance) v /= total;
        }
    }
    auto r = make_report(ds, method);
    r.scores = importance;
    const double mean = 1.0 / static_cast<double>(importance.size());
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    for (std::size_t j = 0; j < importance.size(); ++j) {
        r.selected[j] = total > 0.0 && importance[j] >= mean - 1e-12;
    }
    if (total == 0.0) {
        r.notes.push_back(method + ": the ensemble made no splits; all importances are zero");
    }
    note_empty(r);
    return r;
}

VoteTable vote(const std::vector<SelectorReport>& reports, std::size_t threshold) {
    if (reports.empty()) {
        throw Error("vote: no selector reports");
    }
    VoteTable t;
    t.feature_names = reports.front().feature_names;
    t.threshold = threshold;
    const std::size_t p = t.feature_names.size();
    t.counts.assign(p, 0);
    t.abs_pearson.assign(p, 0.0);
    for (const auto& r : reports) {
        if (r.feature_names != t.feature_names || r.selected.size() != p) {
            throw Error("vote: report '" + r.method + "' covers a different feature list");
        }
        t.methods.push_back(r.method);
        t.votes.push_back(r.selected);
        for (std::size_t j = 0; j < p; ++j) t.counts[j] += r.selected[j] ? 1 : 0;
        if (r.method == "pearson") {
            for (std::size_t j = 0; j < p; ++j) t.abs_pearson[j] = std::abs(r.scores[j]);
        }
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (t.counts[a] != t.counts[b]) return t.counts[a] > t.counts[b];
        if (t.abs_pearson[a] != t.abs_pearson[b]) return t.abs_pearson[a] > t.abs_pearson[b];
        return t.feature_names[a] < t.feature_names[b];
    });
    for (auto j : order) {
        t.ranking.push_back(t.feature_names[j]);
        if (t.counts[j] >= threshold) t.chosen.push_back(t.feature_names[j]);
    }
    if (t.chosen.empty()) {
        const auto best = *std::max_element(t.counts.begin(), t.counts.end());
        throw Error("vote: no feature reaches " + std::to_string(threshold) + " of " + std::to_string(reports.size()) +
                    " votes (highest count is " + std::to_string(best) + "); lower the vote threshold");
    }
    return t;
}

std::vector<SelectorReport> run_selectors(const tabular::EncodedDataset& ds, const SelectionConfig& config) {
    const std::size_t n_select = config.rfe_n_select == 0 ? ds.feature_count() : config.rfe_n_select;
    std::vector<SelectorReport> out(6);
    parallel_for(6, [&](std::size_t i) {
        switch (i) {
            case 0: out[i] = pearson_select(ds, config.pearson_threshold); break;
            case 1: out[i] = chi2_select(ds, config.chi2_top_k); break;
            case 2: out[i] = rfe(ds, n_select); break;
            case 3: out[i] = l1_logistic_select(ds, config.l1_strength); break;
            case 4: out[i] = impurity_importance_select(ds, ForestKind::random_forest, config.importance); break;
            default: out[i] = impurity_importance_select(ds, ForestKind::leafwise_gbdt, config.importance); break;
        }
    });
    return out;
}

void write_votes_csv(const VoteTable& table, const std::filesystem::path& path) {
    static const std::vector<std::string> kColumns{"pearson", "chi2", "rfe", "l1", "rf", "gbdt"};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << "feature";
    for (const auto& c : kColumns) out << ',' << c;
    out << ",total,chosen\n";
    for (const auto& name : table.ranking) {
        const auto j = static_cast<std::size_t>(
            std::find(table.feature_names.begin(), table.feature_names.end(), name) - table.feature_names.begin());
        out << name;
        for (const auto& c : kColumns) {
            const auto m = std::find(table.methods.begin(), table.methods.end(), c);
            const bool v = m != table.methods.end() && table.votes[static_cast<std::size_t>(m - table.methods.begin())][j];
            out << ',' << (v ? "True" : "False");
        }
        out << ',' << table.counts[j] << ',' << (table.counts[j] >= table.threshold ? "True" : "False") << '\n';
    }
}

std::vector<std::string> read_chosen_features(const std::filesystem::path& path) {
    const auto table = tabular::load_csv(path);
    const auto chosen_col = table.column_index("chosen");
    const auto name_col = table.column_index("feature");
    std::vector<std::string> out;
    for (const auto& row : table.rows) {
        if (row[chosen_col] == "True") out.push_back(row[name_col]);
    }
    if (out.empty()) {
        throw Error("'" + path.string() + "' marks no chosen features");
    }
    return out;
}

}  // namespace earlyrisk::featsel
