#include <cmath>
#include <set>

#include <doctest.h>

#include "earlyrisk/boosting.hpp"
#include "fixtures.hpp"

using namespace earlyrisk;
using namespace earlyrisk::boosting;

namespace {

struct Data {
    Matrix x;
    std::vector<int> y;
};

Data noisy_data(std::size_t n, std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    Data d{Matrix(n, p), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) d.x(i, j) = static_cast<double>(rng.below(6)) / 5.0;
        const double z = d.x(i, 0) - (p > 1 ? 0.8 * d.x(i, 1) : 0.0) + 0.4 * rng.normal();
        d.y[i] = z > 0.1 ? 1 : 0;
    }
    d.y[0] = 1 - d.y[1];
    return d;
}

double brute_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
           gamma;
}

}  // namespace

TEST_SUITE("boosting") {

TEST_CASE("oracle: three AdaBoost rounds traced by hand") {
    // x = 1..6, y = + + - - + +. Weighted-Gini stumps, ties to the lower threshold.
    const auto x = fixtures::matrix({{1}, {2}, {3}, {4}, {5}, {6}});
    const std::vector<int> y{1, 1, 0, 0, 1, 1};
    AdaBoostOptions o;
    o.n_rounds = 3;
    const auto m = fit_adaboost(x, y, o);
    const auto& r = m.rounds();
    REQUIRE(r.size() == 3);

    CHECK(r[0].stump.threshold == 2.5);
    CHECK(r[0].stump.left == 1);
    CHECK(r[0].stump.right == 1);
    CHECK(r[0].error == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r[0].alpha == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-12));

    const std::vector<double> w1{1.0 / 8, 1.0 / 8, 1.0 / 4, 1.0 / 4, 1.0 / 8, 1.0 / 8};
    for (std::size_t i = 0; i < 6; ++i) CHECK(r[1].weights[i] == doctest::Approx(w1[i]).epsilon(1e-12));
    CHECK(r[1].stump.threshold == 2.5);
    CHECK(r[1].stump.left == 1);
    CHECK(r[1].stump.right == -1);
    CHECK(r[1].error == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r[1].alpha == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));

    const std::vector<double> w2{1.0 / 12, 1.0 / 12, 1.0 / 6, 1.0 / 6, 1.0 / 4, 1.0 / 4};
    for (std::size_t i = 0; i < 6; ++i) CHECK(r[2].weights[i] == doctest::Approx(w2[i]).epsilon(1e-12));
    CHECK(r[2].stump.threshold == 4.5);
    CHECK(r[2].stump.left == -1);
    CHECK(r[2].stump.right == 1);
    CHECK(r[2].error == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(r[2].alpha == doctest::Approx(0.5 * std::log(5.0)).epsilon(1e-12));

    CHECK(m.margin(x.row(0)) == doctest::Approx(0.5 * std::log(1.2)).epsilon(1e-12));
    CHECK(m.margin(x.row(2)) == doctest::Approx(0.5 * std::log(2.0 / 15.0)).epsilon(1e-12));
    for (std::size_t i = 0; i < 6; ++i) CHECK(m.predict(x.row(i)) == y[i]);
}

TEST_CASE("AdaBoost on separable data stops after one round") {
    const auto x = fixtures::matrix({{0}, {1}, {2}, {3}});
    const auto m = fit_adaboost(x, std::vector<int>{0, 0, 1, 1});
    REQUIRE(m.rounds().size() == 1);
    CHECK(m.rounds()[0].error == 0.0);
    CHECK(m.rounds()[0].alpha == doctest::Approx(0.5 * std::log((1 - 1e-10) / 1e-10)));
}

TEST_CASE("AdaBoost rejects data no stump can learn") {
    const auto x = fixtures::matrix({{1}, {1}, {1}, {1}});
    CHECK(fixtures::error_of([&] { fit_adaboost(x, std::vector<int>{0, 1, 0, 1}); }).find(">= 0.5") != std::string::npos);
}

TEST_CASE("property: AdaBoost weights stay normalized and errors below one half") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const auto d = noisy_data(60, 3, seed);
        AdaBoostOptions o;
        o.n_rounds = 20;
        const auto m = fit_adaboost(d.x, d.y, o);
        for (const auto& round : m.rounds()) {
            double total = 0;
            double err = 0;
            for (std::size_t i = 0; i < round.weights.size(); ++i) {
                total += round.weights[i];
                CHECK(round.weights[i] > 0.0);
                if (round.stump.predict(d.x.row(i)) != (d.y[i] == 1 ? 1 : -1)) err += round.weights[i];
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(round.error == doctest::Approx(err).epsilon(1e-12));
            CHECK(round.error < 0.5);
            CHECK(round.alpha > 0.0);
        }
        double total = 0;
        for (double w : m.final_weights()) total += w;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gradient boosting") {
    SUBCASE("zero stages predict the base rate") {
        const auto d = noisy_data(40, 2, 3);
        GradientBoostingOptions o;
        o.n_stages = 0;
        const auto m = fit_gradient_boosting(d.x, d.y, o);
        double rate = 0;
        for (int v : d.y) rate += v;
        rate /= static_cast<double>(d.y.size());
        for (std::size_t i = 0; i < d.x.rows(); ++i) CHECK(m.score(d.x.row(i)) == doctest::Approx(rate).epsilon(1e-12));
    }
    SUBCASE("a single informative feature is fit quickly") {
        Matrix x(10, 1);
        std::vector<int> y(10);
        for (std::size_t i = 0; i < 10; ++i) {
            x(i, 0) = static_cast<double>(i);
            y[i] = i >= 5 ? 1 : 0;
        }
        GradientBoostingOptions o;
        o.n_stages = 10;
        o.learning_rate = 0.5;
        const auto m = fit_gradient_boosting(x, y, o);
        CHECK(m.train_loss().size() == 11);
        CHECK(m.train_loss().back() < 0.05);
    }
    SUBCASE("first-stage leaves are Newton steps") {
        const auto x = fixtures::matrix({{0}, {0}, {1}, {1}});
        GradientBoostingOptions o;
        o.n_stages = 1;
        o.learning_rate = 1.0;
        const auto m = fit_gradient_boosting(x, std::vector<int>{0, 0, 1, 1}, o);
        // p = 0.5 everywhere: leaf = sum(r) / sum(p (1 - p)) = (2 * 0.5) / (2 * 0.25) = 2.
        CHECK(m.raw_score(x.row(0)) == doctest::Approx(-2.0));
        CHECK(m.raw_score(x.row(3)) == doctest::Approx(2.0));
    }
}

TEST_CASE("property: gradient boosting training loss never rises for small learning rates") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto d = noisy_data(80, 3, seed);
        for (double eta : {0.05, 0.1}) {
            GradientBoostingOptions o;
            o.n_stages = 40;
            o.learning_rate = eta;
            const auto loss = fit_gradient_boosting(d.x, d.y, o).train_loss();
            for (std::size_t i = 1; i < loss.size(); ++i) CHECK(loss[i] <= loss[i - 1] + 1e-12);
        }
    }
}

TEST_CASE("second-order trees") {
    const auto x = fixtures::matrix({{0, 1}, {1, 0}, {2, 1}, {3, 0}});
    const std::vector<double> g{0.5, -0.5, 0.3, 0.1};
    const std::vector<double> h{0.25, 0.25, 0.2, 0.1};
    SUBCASE("leaf weight is -G / (H + lambda)") {
        GainTreeOptions o;
        o.gamma = 1e6;
        o.min_child_weight = 0;
        const auto t = fit_gain_tree(x, g, h, o, Growth::level_wise);
        REQUIRE(t.nodes.size() == 1);
        CHECK(t.nodes[0].value == doctest::Approx(-0.4 / (0.8 + 1.0)).epsilon(1e-12));
        CHECK(leaf_weight(0.4, 0.8, o) == doctest::Approx(-0.4 / 1.8));
    }
    SUBCASE("huge lambda shrinks every leaf towards zero") {
        GainTreeOptions o;
        o.lambda = 1e12;
        o.min_child_weight = 0;
        const auto t = fit_gain_tree(x, g, h, o, Growth::level_wise);
        for (const auto& n : t.nodes) CHECK(std::abs(n.value) < 1e-11);
    }
    SUBCASE("alpha soft-thresholds the gradient sum") {
        GainTreeOptions o;
        o.alpha = 0.5;
        CHECK(leaf_weight(0.4, 0.8, o) == 0.0);
        CHECK(leaf_weight(-0.9, 0.8, o) == doctest::Approx(0.4 / 1.8));
    }
}

TEST_CASE("oracle: second-order root split has the largest gain over all candidates") {
    const auto x = fixtures::matrix({{0, 1}, {1, 0}, {2, 1}, {3, 0}});
    const std::vector<double> g{0.5, -0.5, 0.3, 0.1};
    const std::vector<double> h{0.25, 0.25, 0.2, 0.1};

    Rng rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 6 + rng.below(10);
        Matrix xs(n, 3);
        std::vector<double> gs(n), hs(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < 3; ++j) xs(i, j) = static_cast<double>(rng.below(5));
            gs[i] = rng.uniform(-1, 1);
            hs[i] = rng.uniform(0.05, 0.25);
        }
        GainTreeOptions o;
        o.max_depth = 1;
        o.min_child_weight = 0.1;
        double best = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            std::set<double> vals;
            for (std::size_t i = 0; i < n; ++i) vals.insert(xs(i, j));
            for (auto it = vals.begin(); std::next(it) != vals.end(); ++it) {
                const double t = 0.5 * (*it + *std::next(it));
                double gl = 0, hl = 0, gr = 0, hr = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    (xs(i, j) <= t ? gl : gr) += gs[i];
                    (xs(i, j) <= t ? hl : hr) += hs[i];
                }
                if (hl < 0.1 || hr < 0.1) continue;
                best = std::max(best, brute_gain(gl, hl, gr, hr, 1.0, 0.0));
            }
        }
        const auto t = fit_gain_tree(xs, gs, hs, o, Growth::level_wise);
        if (best <= 0.0) {
            CHECK(t.nodes.size() == 1);
        } else {
            REQUIRE(t.nodes.size() == 3);
            CHECK(t.nodes[0].gain == doctest::Approx(best).epsilon(1e-9));
        }
    }
}

TEST_CASE("leaf-wise growth") {
    Rng rng(12);
    SUBCASE("two leaves split the root exactly as level-wise depth one") {
        for (int trial = 0; trial < 10; ++trial) {
            const auto d = noisy_data(30, 3, rng.next_u64());
            std::vector<double> g(30), h(30, 0.25);
            for (std::size_t i = 0; i < 30; ++i) g[i] = 0.5 - d.y[i];
            GainTreeOptions lw;
            lw.max_depth = kUnlimited;
            lw.max_leaves = 2;
            GainTreeOptions lv;
            lv.max_depth = 1;
            const auto a = fit_gain_tree(d.x, g, h, lw, Growth::leaf_wise);
            const auto b = fit_gain_tree(d.x, g, h, lv, Growth::level_wise);
            CHECK(a.nodes == b.nodes);
        }
    }
    SUBCASE("unbounded leaf-wise and level-wise trees give the same partition") {
        for (int trial = 0; trial < 10; ++trial) {
            Matrix x(8, 3);
            std::vector<double> g(8), h(8);
            for (std::size_t i = 0; i < 8; ++i) {
                for (std::size_t j = 0; j < 3; ++j) x(i, j) = static_cast<double>(rng.below(4));
                g[i] = rng.uniform(-1, 1);
                h[i] = rng.uniform(0.1, 0.25);
            }
            GainTreeOptions o;
            o.max_depth = kUnlimited;
            o.min_child_weight = 0;
            o.lambda = 0.1;
            const auto a = fit_gain_tree(x, g, h, o, Growth::leaf_wise);
            const auto b = fit_gain_tree(x, g, h, o, Growth::level_wise);
            CHECK(a.leaf_count() == b.leaf_count());
            for (std::size_t i = 0; i < 8; ++i) CHECK(a.predict(x.row(i)) == b.predict(x.row(i)));
        }
    }
    SUBCASE("defaults and limits") {
        const LeafwiseOptions o;
        CHECK(o.tree.max_leaves == 31);
        CHECK(o.tree.max_depth == kUnlimited);
        CHECK(o.learning_rate == 0.1);
        const auto d = noisy_data(100, 4, 2);
        LeafwiseOptions small;
        small.n_rounds = 5;
        small.tree.max_leaves = 4;
        const auto m = fit_leafwise_gbdt(d.x, d.y, small);
        for (const auto& t : m.stages()) CHECK(t.leaf_count() <= 4);
        small.tree.max_leaves = 1;
        CHECK_THROWS_AS(fit_leafwise_gbdt(d.x, d.y, small), Error);
    }
}

TEST_CASE("xgb-style model") {
    const auto d = noisy_data(120, 3, 9);
    XgbOptions o;
    o.n_rounds = 30;
    const auto m = fit_xgb_style(d.x, d.y, o);
    CHECK(m.name() == "xgb");
    CHECK(m.stages().size() == 30);
    for (const auto& t : m.stages()) CHECK(t.depth() <= 3);
    CHECK(m.train_loss().back() < m.train_loss().front());
    for (std::size_t i = 0; i < d.x.rows(); ++i) {
        const double s = m.score(d.x.row(i));
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    o.tree.lambda = -1;
    CHECK_THROWS_AS(fit_xgb_style(d.x, d.y, o), Error);
}

}  // TEST_SUITE
