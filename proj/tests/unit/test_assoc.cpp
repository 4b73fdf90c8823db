#include <algorithm>
#include <bit>
#include <map>

#include <doctest.h>

#include "earlyrisk/assoc.hpp"
#include "fixtures.hpp"

using namespace earlyrisk;
using namespace earlyrisk::assoc;

namespace {

/// Items A=bit0, B=bit1, C=bit2 over rows {AB, AB, AC, B, {}}.
TransactionSet toy() {
    return TransactionSet{{"A", "B", "C"}, {0b011, 0b011, 0b101, 0b010, 0b000}};
}

TransactionSet random_tx(Rng& rng, std::size_t m, std::size_t n) {
    TransactionSet tx;
    for (std::size_t i = 0; i < m; ++i) tx.item_names.push_back(std::string(1, static_cast<char>('a' + i)));
    const double density = 0.2 + 0.6 * rng.uniform();
    for (std::size_t r = 0; r < n; ++r) {
        Itemset row = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (rng.uniform() < density) row |= Itemset{1} << i;
        }
        tx.rows.push_back(row);
    }
    return tx;
}

/// Every nonempty subset of the m items, counted by scanning the rows.
std::map<Itemset, std::size_t> powerset_counts(const TransactionSet& tx) {
    std::map<Itemset, std::size_t> out;
    const Itemset all = (Itemset{1} << tx.item_names.size()) - 1;
    for (Itemset s = 1; s <= all; ++s) {
        std::size_t c = 0;
        for (auto row : tx.rows) c += (row & s) == s ? 1 : 0;
        out[s] = c;
    }
    return out;
}

}  // namespace

TEST_SUITE("assoc") {

TEST_CASE("apriori on the five-row toy set") {
    const auto tx = toy();
    const auto frequent = apriori(tx, 0.4);
    REQUIRE(frequent.size() == 3);
    CHECK(frequent[0].items == 0b001);
    CHECK(frequent[0].support == doctest::Approx(0.6));
    CHECK(frequent[1].items == 0b010);
    CHECK(frequent[1].support == doctest::Approx(0.6));
    CHECK(frequent[2].items == 0b011);
    CHECK(frequent[2].support == doctest::Approx(0.4));
    CHECK(frequent[2].count == 2);
}

TEST_CASE("min_support = 1 keeps only items present in every row") {
    const TransactionSet tx{{"A", "B", "C"}, {0b111, 0b011, 0b110}};
    const auto frequent = apriori(tx, 1.0);
    REQUIRE(frequent.size() == 1);
    CHECK(frequent[0].items == 0b010);
    CHECK_THROWS_AS(apriori(tx, 0.0), Error);
}

TEST_CASE("rule counts on the toy set") {
    const auto tx = toy();
    CHECK(rule_count(tx, 0.4, 0.9) == 0);
    const auto rules = generate_rules(apriori(tx, 0.4), tx, 0.0);
    REQUIRE(rules.size() == 2);
    for (const auto& r : rules) {
        CHECK(r.confidence == doctest::Approx(2.0 / 3.0));
        CHECK(r.support == doctest::Approx(0.4));
        CHECK(r.lift == doctest::Approx((2.0 / 3.0) / 0.6));
    }
}

TEST_CASE("a consequent present in every row has lift equal to confidence") {
    const TransactionSet tx{{"A", "B"}, {0b11, 0b10, 0b11, 0b10}};
    const auto rules = generate_rules(apriori(tx, 0.1), tx, 0.0);
    bool seen = false;
    for (const auto& r : rules) {
        if (r.consequent == 0b10) {
            CHECK(r.lift == doctest::Approx(r.confidence).epsilon(1e-12));
            seen = true;
        }
    }
    CHECK(seen);
}

TEST_CASE("to_transactions") {
    const auto ds = [] {
        const auto raw = tabular::parse_csv(
            "Age,Gender,Polyuria,weakness,class\n30,Male,No,No,Negative\n40,Female,Yes,No,Positive\n"
            "50,Male,Yes,Yes,Positive\n");
        return tabular::encode(raw, tabular::EncodingSchema::for_header(raw.header));
    }();
    SUBCASE("default columns are the Yes/No symptoms only") {
        CHECK(symptom_columns(ds) == std::vector<std::string>{"Polyuria", "weakness"});
    }
    SUBCASE("all-No row is empty; items follow presence") {
        const auto tx = to_transactions(ds, symptom_columns(ds));
        CHECK(tx.rows == std::vector<Itemset>{0b00, 0b01, 0b11});
    }
    SUBCASE("single column, single Yes row") {
        const std::vector<std::size_t> rows{1};
        const auto tx = to_transactions(ds.subset(rows), {"Polyuria"});
        CHECK(tx.size() == 1);
        CHECK(tx.rows[0] == 0b1);
    }
    SUBCASE("a non-binary column is rejected") {
        CHECK(fixtures::error_of([&] { to_transactions(ds, {"Age"}); }).find("not binary") != std::string::npos);
    }
    SUBCASE("the UCI-shaped header gives 14 items") {
        const auto raw = tabular::parse_csv(fixtures::synthetic_uci_csv(40, 2));
        const auto full = tabular::encode(raw, tabular::EncodingSchema::for_header(raw.header));
        const auto cols = symptom_columns(full);
        CHECK(cols.size() == 14);
        CHECK(std::find(cols.begin(), cols.end(), "Gender") == cols.end());
        CHECK(std::find(cols.begin(), cols.end(), "Age") == cols.end());
    }
}

TEST_CASE("oracle: apriori equals powerset enumeration") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 1 + rng.below(6);
        const std::size_t n = 1 + rng.below(32);
        const auto tx = random_tx(rng, m, n);
        const double min_support = (1.0 + static_cast<double>(rng.below(n))) / static_cast<double>(n);
        std::map<Itemset, std::size_t> expected;
        for (const auto& [s, c] : powerset_counts(tx)) {
            if (static_cast<double>(c) / static_cast<double>(n) >= min_support) expected[s] = c;
        }
        std::map<Itemset, std::size_t> got;
        for (const auto& f : apriori(tx, min_support)) {
            REQUIRE(got.count(f.items) == 0);
            got[f.items] = f.count;
            REQUIRE(f.support == static_cast<double>(f.count) / static_cast<double>(n));
        }
        REQUIRE(got == expected);
    }
}

TEST_CASE("property: rules agree with brute-force metrics") {
    Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto tx = random_tx(rng, 2 + rng.below(5), 5 + rng.below(28));
        const double n = static_cast<double>(tx.size());
        const double min_conf = rng.uniform();
        const auto counts = powerset_counts(tx);
        const auto frequent = apriori(tx, 0.15);
        const auto rules = generate_rules(frequent, tx, min_conf);
        std::size_t expected = 0;
        for (const auto& f : frequent) {
            if (std::popcount(f.items) < 2) continue;
            for (Itemset a = (f.items - 1) & f.items; a; a = (a - 1) & f.items) {
                if (static_cast<double>(f.count) / static_cast<double>(counts.at(a)) >= min_conf) ++expected;
            }
        }
        REQUIRE(rules.size() == expected);
        for (const auto& r : rules) {
            REQUIRE((r.antecedent & r.consequent) == 0);
            REQUIRE(r.antecedent != 0);
            REQUIRE(r.consequent != 0);
            const double s_ac = counts.at(r.antecedent | r.consequent) / n;
            const double s_a = counts.at(r.antecedent) / n;
            const double s_c = counts.at(r.consequent) / n;
            CHECK(r.support == doctest::Approx(s_ac).epsilon(1e-12));
            CHECK(r.confidence == doctest::Approx(s_ac / s_a).epsilon(1e-12));
            CHECK(r.lift == doctest::Approx(s_ac / (s_a * s_c)).epsilon(1e-12));
            CHECK(r.confidence >= min_conf);
            CHECK((r.lift > 1.0) == (r.confidence > s_c + 1e-15));
        }
        for (std::size_t i = 1; i < rules.size(); ++i) {
            REQUIRE(rules[i - 1].confidence >= rules[i].confidence);
        }
        for (const auto& r : rules) {
            for (const auto& q : rules) {
                if (q.antecedent == r.consequent && q.consequent == r.antecedent) {
                    CHECK(q.lift == doctest::Approx(r.lift).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("property: downward closure and anti-monotonicity") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto tx = random_tx(rng, 3 + rng.below(6), 10 + rng.below(40));
        const auto frequent = apriori(tx, 0.1 + 0.3 * rng.uniform());
        std::map<Itemset, double> support;
        for (const auto& f : frequent) support[f.items] = f.support;
        for (const auto& f : frequent) {
            for (Itemset sub = (f.items - 1) & f.items; sub; sub = (sub - 1) & f.items) {
                REQUIRE(support.count(sub) == 1);
                CHECK(support.at(sub) >= f.support);
            }
        }
        for (std::size_t i = 1; i < frequent.size(); ++i) {
            const auto a = std::popcount(frequent[i - 1].items);
            const auto b = std::popcount(frequent[i].items);
            REQUIRE(a <= b);
            if (a == b) REQUIRE(frequent[i - 1].support >= frequent[i].support);
        }
    }
}

TEST_CASE("rules.csv format") {
    fixtures::TempDir dir("rules");
    const auto tx = toy();
    write_rules_csv(generate_rules(apriori(tx, 0.4), tx, 0.0), tx, dir / "rules.csv");
    CHECK(fixtures::read_text(dir / "rules.csv") ==
          "antecedent;consequent;support;confidence;lift\n"
          "A;B;0.400;0.667;1.111\n"
          "B;A;0.400;0.667;1.111\n");
    CHECK(join_items({"a", "b c"}) == "a|b c");
}

}  // TEST_SUITE
