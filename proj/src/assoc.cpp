#include "earlyrisk/assoc.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <unordered_map>

namespace earlyrisk::assoc {
namespace {

int popcount(Itemset s) { return std::popcount(s); }

}  // namespace

std::size_t TransactionSet::count(Itemset items) const {
    std::size_t c = 0;
    for (auto row : rows) {
        c += (row & items) == items ? 1 : 0;
    }
    return c;
}

std::vector<std::string> TransactionSet::names(Itemset items) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < item_names.size(); ++i) {
        if (items >> i & 1U) {
            out.push_back(item_names[i]);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> symptom_columns(const tabular::EncodedDataset& ds) {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < ds.feature_count(); ++j) {
        if (ds.kinds[j] == tabular::ColumnKind::yes_no) {
            out.push_back(ds.feature_names[j]);
        }
    }
    return out;
}

TransactionSet to_transactions(const tabular::EncodedDataset& ds, const std::vector<std::string>& columns) {
    if (columns.empty()) {
        throw Error("to_transactions: no columns given");
    }
    if (columns.size() > kMaxItems) {
        throw Error("to_transactions: at most 64 items are supported");
    }
    std::vector<std::size_t> cols;
    for (const auto& name : columns) {
        const auto j = ds.feature_index(name);
        for (std::size_t r = 0; r < ds.size(); ++r) {
            const double v = ds.features(r, j);
            if (v != 0.0 && v != 1.0) {
                throw Error("to_transactions: column '" + name + "' is not binary (row " + std::to_string(r + 1) +
                            " = " + format_roundtrip(v) + ")");
            }
        }
        cols.push_back(j);
    }
    TransactionSet tx;
    tx.item_names = columns;
    tx.rows.resize(ds.size(), 0);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (ds.features(r, cols[i]) == 1.0) {
                tx.rows[r] |= Itemset{1} << i;
            }
        }
    }
    return tx;
}

std::vector<FrequentItemset> apriori(const TransactionSet& tx, double min_support) {
    if (!(min_support > 0.0 && min_support <= 1.0)) {
        throw Error("apriori: min_support must lie in (0, 1]");
    }
    if (tx.rows.empty() || tx.item_names.empty()) {
        throw Error("apriori: empty transaction set");
    }
    const double n = static_cast<double>(tx.size());
    auto frequent = [&](std::size_t count) { return static_cast<double>(count) / n >= min_support; };

    std::vector<FrequentItemset> out;
    std::vector<Itemset> level;
    for (std::size_t i = 0; i < tx.item_count(); ++i) {
        const Itemset s = Itemset{1} << i;
        const auto c = tx.count(s);
        if (frequent(c)) {
            level.push_back(s);
            out.push_back({s, c, static_cast<double>(c) / n});
        }
    }

    // Candidates of size k+1 join two frequent k-itemsets sharing their k-1 lowest
    // items; a candidate survives pruning only if all its k-subsets are frequent.
    while (level.size() > 1) {
        std::sort(level.begin(), level.end(), [](Itemset a, Itemset b) {
            // Order by item indices ascending, i.e. bit-reversed lexicographic order.
            while (a && b) {
                const int ia = std::countr_zero(a);
                const int ib = std::countr_zero(b);
                if (ia != ib) return ia < ib;
                a &= a - 1;
                b &= b - 1;
            }
            return b != 0;
        });
        std::unordered_map<Itemset, bool> known;
        known.reserve(level.size() * 2);
        for (auto s : level) {
            known.emplace(s, true);
        }
        auto highest = [](Itemset s) { return Itemset{1} << (63 - std::countl_zero(s)); };
        std::vector<Itemset> next;
        for (std::size_t a = 0; a < level.size(); ++a) {
            const Itemset prefix_a = level[a] & ~highest(level[a]);
            for (std::size_t b = a + 1; b < level.size(); ++b) {
                const Itemset prefix_b = level[b] & ~highest(level[b]);
                if (prefix_a != prefix_b) {
                    break;
                }
                const Itemset candidate = level[a] | level[b];
                bool closed = true;
                for (Itemset rest = candidate; rest && closed; rest &= rest - 1) {
                    const Itemset drop = rest & (~rest + 1);
                    closed = known.count(candidate & ~drop) > 0;
                }
                if (!closed) {
                    continue;
                }
                const auto c = tx.count(candidate);
                if (frequent(c)) {
                    next.push_back(candidate);
                    out.push_back({candidate, c, static_cast<double>(c) / n});
                }
            }
        }
        level = std::move(next);
    }

    std::sort(out.begin(), out.end(), [&](const FrequentItemset& x, const FrequentItemset& y) {
        const int sx = popcount(x.items);
        const int sy = popcount(y.items);
        if (sx != sy) return sx < sy;
        if (x.count != y.count) return x.count > y.count;
        return tx.names(x.items) < tx.names(y.items);
    });
    return out;
}

std::vector<AssociationRule> generate_rules(const std::vector<FrequentItemset>& itemsets, const TransactionSet& tx,
                                            double min_confidence) {
    if (!(min_confidence >= 0.0 && min_confidence <= 1.0)) {
        throw Error("generate_rules: min_confidence must lie in [0, 1]");
    }
    std::unordered_map<Itemset, std::size_t> counts;
    counts.reserve(itemsets.size() * 2);
    for (const auto& f : itemsets) {
        counts.emplace(f.items, f.count);
    }
    auto count_of = [&](Itemset s) {
        const auto it = counts.find(s);
        return it != counts.end() ? it->second : tx.count(s);
    };
    const double n = static_cast<double>(tx.size());

    std::vector<AssociationRule> rules;
    for (const auto& f : itemsets) {
        if (popcount(f.items) < 2) {
            continue;
        }
        // Every nonempty proper subset of f.items as the antecedent.
        for (Itemset a = (f.items - 1) & f.items; a != 0; a = (a - 1) & f.items) {
            const Itemset c = f.items & ~a;
            const double conf = static_cast<double>(f.count) / static_cast<double>(count_of(a));
            if (conf < min_confidence) {
                continue;
            }
            AssociationRule rule;
            rule.antecedent = a;
            rule.consequent = c;
            rule.support = static_cast<double>(f.count) / n;
            rule.confidence = conf;
            rule.lift = conf / (static_cast<double>(count_of(c)) / n);
            rules.push_back(rule);
        }
    }
    std::sort(rules.begin(), rules.end(), [&](const AssociationRule& x, const AssociationRule& y) {
        if (x.confidence != y.confidence) return x.confidence > y.confidence;
        if (x.support != y.support) return x.support > y.support;
        const auto xa = tx.names(x.antecedent);
        const auto ya = tx.names(y.antecedent);
        if (xa != ya) return xa < ya;
        return tx.names(x.consequent) < tx.names(y.consequent);
    });
    return rules;
}

std::size_t rule_count(const TransactionSet& tx, double min_support, double min_confidence) {
    return generate_rules(apriori(tx, min_support), tx, min_confidence).size();
}

std::string join_items(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += '|';
        out += names[i];
    }
    return out;
}

void write_rules_csv(const std::vector<AssociationRule>& rules, const TransactionSet& tx,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    out << "antecedent;consequent;support;confidence;lift\n";
    for (const auto& r : rules) {
        out << join_items(tx.names(r.antecedent)) << ';' << join_items(tx.names(r.consequent)) << ';'
            << format_fixed(r.support, 3) << ';' << format_fixed(r.confidence, 3) << ';' << format_fixed(r.lift, 3)
            << '\n';
    }
}

}  // namespace earlyrisk::assoc
