#include <algorithm>
#include <numeric>
#include <set>

#include <doctest.h>

#include "earlyrisk/tabular.hpp"
#include "fixtures.hpp"

using namespace earlyrisk;
using namespace earlyrisk::tabular;

namespace {

EncodedDataset encode_text(const std::string& text) {
    const auto raw = parse_csv(text);
    return encode(raw, EncodingSchema::for_header(raw.header));
}

void check_partition(const std::vector<std::vector<std::size_t>>& parts, std::size_t n) {
    std::vector<std::size_t> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    CHECK(all == expected);
}

}  // namespace

TEST_SUITE("tabular") {

TEST_CASE("load_csv reads the UCI-shaped file with 17 columns") {
    fixtures::TempDir dir("tabular");
    fixtures::write_text(dir / "d.csv", fixtures::synthetic_uci_csv(520, 1));
    const auto raw = load_csv(dir / "d.csv");
    CHECK(raw.rows.size() == 520);
    CHECK(raw.header.size() == 17);
    CHECK(raw.header == fixtures::uci_header());
}

TEST_CASE("load_csv edge cases") {
    SUBCASE("header only gives an empty valid table") {
        const auto t = parse_csv("Age,class\n");
        CHECK(t.header.size() == 2);
        CHECK(t.rows.empty());
    }
    SUBCASE("cells are trimmed and row order kept") {
        const auto t = parse_csv("a , b\n 1,2 \n3 ,  4\n");
        CHECK(t.header == std::vector<std::string>{"a", "b"});
        CHECK(t.rows[0] == std::vector<std::string>{"1", "2"});
        CHECK(t.rows[1] == std::vector<std::string>{"3", "4"});
    }
    SUBCASE("a short row names its row number") {
        std::string text;
        for (std::size_t i = 0; i < 17; ++i) text += (i ? ",c" : "c") + std::to_string(i);
        text += "\n";
        for (std::size_t i = 0; i < 17; ++i) text += i ? ",1" : "1";
        text += "\n";
        for (std::size_t i = 0; i < 16; ++i) text += i ? ",1" : "1";
        text += "\n";
        const auto msg = fixtures::error_of([&] { parse_csv(text); });
        CHECK(msg.find("ragged row 2") != std::string::npos);
        CHECK(msg.find("16 cells") != std::string::npos);
    }
    SUBCASE("empty and missing files") {
        CHECK(fixtures::error_of([] { parse_csv(""); }).find("empty") != std::string::npos);
        CHECK(fixtures::error_of([] { load_csv("/nonexistent/earlyrisk.csv"); }).find("cannot open") !=
              std::string::npos);
    }
}

TEST_CASE("encode maps tokens and min-max scales Age") {
    const auto ds = encode_text(
        "Age,Gender,Polyuria,class\n"
        "20,Male,Yes,Positive\n"
        "40,Female,no,negative\n"
        "60, male ,YES,Positive\n");
    REQUIRE(ds.feature_names == std::vector<std::string>{"Age", "Gender", "Polyuria"});
    CHECK(ds.features(0, 2) == 1.0);
    CHECK(ds.features(1, 2) == 0.0);
    CHECK(ds.target == std::vector<int>{1, 0, 1});
    CHECK(ds.features(0, 1) == 1.0);
    CHECK(ds.features(1, 1) == 0.0);
    CHECK(ds.features(0, 0) == 0.0);
    CHECK(ds.features(1, 0) == 0.5);
    CHECK(ds.features(2, 0) == 1.0);
    CHECK(ds.norm_params.at("Age").min == 20.0);
    CHECK(ds.norm_params.at("Age").max == 60.0);
    CHECK(ds.kinds[0] == ColumnKind::continuous);
    CHECK(ds.kinds[1] == ColumnKind::gender);
}

TEST_CASE("encode errors") {
    const auto bad = fixtures::error_of(
        [] { encode_text("Age,Polyuria,class\n20,Yes,Positive\n30,Maybe,Negative\n"); });
    CHECK(bad.find("'Maybe'") != std::string::npos);
    CHECK(bad.find("'Polyuria'") != std::string::npos);
    CHECK(bad.find("row 2") != std::string::npos);
    CHECK(fixtures::error_of([] { encode_text("Age,Polyuria,class\n30,Yes,Positive\n30,No,Negative\n"); })
              .find("constant") != std::string::npos);
    CHECK(fixtures::error_of([] { encode_text("Age,Polyuria\n30,Yes\n"); }).find("class") != std::string::npos);
    CHECK_FALSE(fixtures::error_of([] { encode_text("Age,Gender,class\n30,Other,Positive\n40,Male,Negative\n"); })
                    .empty());
}

TEST_CASE("schema groups are disjoint and cover the header") {
    const auto s = EncodingSchema::for_header(fixtures::uci_header());
    CHECK(s.continuous == std::set<std::string>{"Age"});
    CHECK(s.gender_column == "Gender");
    CHECK(s.target_column == "class");
    CHECK(s.binary_yes_no.size() == 14);
    CHECK(s.binary_yes_no.count("Age") == 0);
    CHECK(s.binary_yes_no.count("Gender") == 0);
}

TEST_CASE("property: binary cells decode back to their tokens") {
    const auto text = fixtures::synthetic_uci_csv(200, 7);
    const auto raw = parse_csv(text);
    const auto ds = encode(raw, EncodingSchema::for_header(raw.header));
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        for (std::size_t j = 0; j < ds.feature_count(); ++j) {
            if (ds.kinds[j] != ColumnKind::yes_no) continue;
            const auto col = raw.column_index(ds.feature_names[j]);
            REQUIRE(decode_yes_no(ds.features(r, j)) == raw.rows[r][col]);
        }
    }
    CHECK_THROWS_AS(decode_yes_no(0.5), Error);
}

TEST_CASE("property: continuous columns span exactly [0, 1]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto ds = encode_text(fixtures::synthetic_uci_csv(50, seed));
        const auto age = ds.features.column(ds.feature_index("Age"));
        CHECK(*std::min_element(age.begin(), age.end()) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(*std::max_element(age.begin(), age.end()) == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : ds.features.values()) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

TEST_CASE("property: encoding commutes with row permutation") {
    const auto raw = parse_csv(fixtures::synthetic_uci_csv(80, 3));
    const auto schema = EncodingSchema::for_header(raw.header);
    const auto ds = encode(raw, schema);
    Rng rng(11);
    const auto perm = permutation(raw.rows.size(), rng);
    RawTable shuffled = raw;
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.rows[i] = raw.rows[perm[i]];
    const auto ds2 = encode(shuffled, schema);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        for (std::size_t j = 0; j < ds.feature_count(); ++j) REQUIRE(ds2.features(i, j) == ds.features(perm[i], j));
        REQUIRE(ds2.target[i] == ds.target[perm[i]]);
    }
}

TEST_CASE("encoded datasets round-trip through disk exactly") {
    fixtures::TempDir dir("encoded");
    const auto ds = encode_text(fixtures::synthetic_uci_csv(60, 5));
    save_encoded(ds, dir / "e.csv");
    const auto back = load_encoded(dir / "e.csv");
    CHECK(back.features == ds.features);
    CHECK(back.target == ds.target);
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.kinds == ds.kinds);
    CHECK(back.norm_params.at("Age").min == ds.norm_params.at("Age").min);
    CHECK(back.norm_params.at("Age").max == ds.norm_params.at("Age").max);
}

TEST_CASE("select_features and subset") {
    const auto ds = encode_text(fixtures::synthetic_uci_csv(30, 2));
    const auto sel = ds.select_features({"Polyuria", "Age"});
    CHECK(sel.feature_names == std::vector<std::string>{"Polyuria", "Age"});
    CHECK(sel.features(4, 1) == ds.features(4, ds.feature_index("Age")));
    const std::vector<std::size_t> rows{3, 0};
    const auto sub = ds.subset(rows);
    CHECK(sub.size() == 2);
    CHECK(sub.target[0] == ds.target[3]);
    CHECK_THROWS_AS(ds.select_features({"nope"}), Error);
}

TEST_CASE("train_test_split") {
    SUBCASE("520 rows at 0.8 give 416 / 104") {
        const auto plan = train_test_split(520, 0.8, 42);
        CHECK(plan.train_indices.size() == 416);
        CHECK(plan.test_indices.size() == 104);
        check_partition({plan.train_indices, plan.test_indices}, 520);
    }
    SUBCASE("deterministic under a seed") {
        const auto a = train_test_split(10, 0.5, 9);
        const auto b = train_test_split(10, 0.5, 9);
        CHECK(a.train_indices == b.train_indices);
        CHECK(a.test_indices == b.test_indices);
    }
    SUBCASE("different seeds give different plans") {
        std::size_t differ = 0;
        for (std::uint64_t s = 0; s < 100; ++s) {
            const auto a = train_test_split(10, 0.5, 2 * s + 1);
            const auto b = train_test_split(10, 0.5, 2 * s + 2);
            differ += a.train_indices != b.train_indices ? 1 : 0;
        }
        CHECK(differ >= 95);
    }
    SUBCASE("ratio must be inside (0, 1)") {
        CHECK_THROWS_AS(train_test_split(10, 0.0, 1), Error);
        CHECK_THROWS_AS(train_test_split(10, 1.0, 1), Error);
    }
}

TEST_CASE("kfold examples") {
    SUBCASE("520 rows, k = 8: every fold has 65") {
        std::vector<int> labels(520, 0);
        for (std::size_t i = 0; i < 320; ++i) labels[i] = 1;
        for (bool strat : {false, true}) {
            const auto plan = kfold(labels, 8, strat, 1);
            for (const auto& f : plan.folds) CHECK(f.size() == 65);
        }
    }
    SUBCASE("9 rows, k = 8: one fold of 2") {
        std::vector<int> labels{1, 0, 1, 0, 1, 0, 1, 0, 1};
        const auto plan = kfold(labels, 8, false, 4);
        std::multiset<std::size_t> sizes;
        for (const auto& f : plan.folds) sizes.insert(f.size());
        CHECK(sizes == std::multiset<std::size_t>{2, 1, 1, 1, 1, 1, 1, 1});
    }
    SUBCASE("20 rows with 8 positives, k = 4 stratified: 2 positives per fold") {
        std::vector<int> labels(20, 0);
        for (std::size_t i : {0, 3, 5, 6, 11, 12, 17, 19}) labels[i] = 1;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto plan = kfold(labels, 4, true, seed);
            for (const auto& f : plan.folds) {
                std::size_t pos = 0;
                for (auto i : f) pos += labels[i];
                CHECK(pos == 2);
            }
        }
    }
    SUBCASE("k outside [2, n]") {
        std::vector<int> labels{0, 1, 0};
        CHECK_THROWS_AS(kfold(labels, 1, false, 0), Error);
        CHECK_THROWS_AS(kfold(labels, 4, false, 0), Error);
    }
}

TEST_CASE("property: splits and folds partition the rows") {
    Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        const std::size_t k = 2 + rng.below(n - 1);
        const bool strat = rng.uniform() < 0.5;
        std::vector<int> labels(n);
        for (auto& l : labels) l = rng.uniform() < 0.4 ? 1 : 0;
        const auto seed = rng.next_u64();
        const auto plan = kfold(labels, k, strat, seed);
        REQUIRE(plan.folds.size() == k);
        check_partition(plan.folds, n);
        std::size_t lo = n, hi = 0, plo = n, phi = 0;
        for (const auto& f : plan.folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            std::size_t pos = 0;
            for (auto i : f) pos += labels[i];
            plo = std::min(plo, pos);
            phi = std::max(phi, pos);
        }
        CHECK(hi - lo <= 1);
        if (strat) CHECK(phi - plo <= 1);
        for (std::size_t f = 0; f < k; ++f) {
            auto rest = plan.training_indices(f);
            CHECK(rest.size() + plan.folds[f].size() == n);
        }
        CHECK(kfold(labels, k, strat, seed).folds == plan.folds);

        const double ratio = 0.05 + 0.9 * rng.uniform();
        const auto split = train_test_split(n, ratio, seed);
        CHECK(split.train_indices.size() == static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n))));
        check_partition({split.train_indices, split.test_indices}, n);
    }
}

}  // TEST_SUITE
