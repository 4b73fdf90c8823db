#include <cstdlib>
#include <filesystem>
#include <regex>
#include <sstream>

#include <doctest.h>

#include "earlyrisk/config.hpp"
#include "earlyrisk/pipeline.hpp"
#include "earlyrisk/report.hpp"
#include "fixtures.hpp"

using namespace earlyrisk;
namespace fs = std::filesystem;

namespace {

RunConfig quick_config(const fixtures::TempDir& dir, const std::string& out) {
    if (!fs::exists(dir / "data.csv")) fixtures::write_text(dir / "data.csv", fixtures::synthetic_uci_csv(160, 3));
    auto c = default_config();
    c.data = dir / "data.csv";
    c.output_dir = dir / out;
    c.models = {"lr", "gnb", "dt"};
    c.cv_folds = 4;
    c.selection.importance.n_trees = 50;
    return c;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

eval::RocCurve curve_of(std::vector<std::pair<double, double>> pts, double auc) {
    eval::RocCurve c;
    for (auto [f, t] : pts) c.points.push_back({f, t, 0.5});
    c.auc = auc;
    return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("stages run in isolation and reproduce their outputs") {
    fixtures::TempDir dir("stages");
    const auto c = quick_config(dir, "out");
    for (const auto& stage : pipeline::stage_names()) {
        INFO(stage);
        const auto first = pipeline::run_stage(stage, c);
        CHECK(first.stage == stage);
        REQUIRE_FALSE(first.outputs.empty());
        std::vector<std::string> before;
        for (const auto& p : first.outputs) {
            REQUIRE(fs::exists(p));
            before.push_back(fixtures::read_text(p));
        }
        const auto second = pipeline::run_stage(stage, c);
        REQUIRE(second.outputs == first.outputs);
        for (std::size_t i = 0; i < before.size(); ++i) CHECK(fixtures::read_text(second.outputs[i]) == before[i]);
    }

    SUBCASE("report tables carry the CSV values") {
        const auto report = fixtures::read_text(c.output_dir / "report.md");
        const auto metrics = lines_of(fixtures::read_text(c.output_dir / "metrics.csv"));
        REQUIRE(metrics.size() == 4);
        for (std::size_t i = 1; i < metrics.size(); ++i) {
            std::string row = "| ";
            std::istringstream cells(metrics[i]);
            bool first = true;
            for (std::string cell; std::getline(cells, cell, ',');) {
                row += (first ? "" : " | ") + cell;
                first = false;
            }
            row += " |";
            CHECK(report.find(row) != std::string::npos);
        }
        const auto confusion = lines_of(fixtures::read_text(c.output_dir / "confusion.csv"));
        for (std::size_t i = 1; i < confusion.size(); ++i) {
            auto cells = confusion[i];
            std::string row = "| " + std::regex_replace(cells, std::regex(","), " | ") + " |";
            CHECK(report.find(row) != std::string::npos);
        }
    }
    SUBCASE("the SVG has one polyline per model") {
        const auto svg = fixtures::read_text(c.output_dir / "roc.svg");
        CHECK(count_of(svg, "<polyline") == 3);
        CHECK(count_of(svg, "class=\"diagonal\"") == 1);
    }
}

TEST_CASE("missing artifacts name the producing subcommand") {
    fixtures::TempDir dir("missing");
    const auto c = quick_config(dir, "empty");
    CHECK(fixtures::error_of([&] { pipeline::run_stage("mine", c); }).find("run `earlyrisk ingest` first") !=
          std::string::npos);
    const auto msg = fixtures::error_of([&] { pipeline::run_stage("report", c); });
    CHECK(msg.find("metrics.csv") != std::string::npos);
    CHECK(msg.find("earlyrisk eval") != std::string::npos);
    CHECK(fixtures::error_of([&] { pipeline::run_stage("eval", c); }).find("earlyrisk train") != std::string::npos);
    CHECK_THROWS_AS(pipeline::run_stage("deploy", c), Error);
}

TEST_CASE("full runs are reproducible") {
    fixtures::TempDir dir("rerun");
    const auto a = pipeline::run_all(quick_config(dir, "a"));
    const auto b = pipeline::run_all(quick_config(dir, "b"));
    CHECK(a.stages.size() == 7);
    REQUIRE_FALSE(a.checksums.empty());
    CHECK(a.checksums == b.checksums);
    CHECK(fs::exists(dir / "a" / "manifest.json"));
    const auto manifest = fixtures::read_text(dir / "a" / "manifest.json");
    CHECK(manifest.find("\"toolkit\"") != std::string::npos);
    CHECK(manifest.find("fnv1a64:") != std::string::npos);
    for (const auto& [name, sum] : a.checksums) {
        CHECK(sum == "fnv1a64:" + pipeline::checksum_file(dir / "a" / name));
    }
}

TEST_CASE("a single model gives a single metrics row") {
    fixtures::TempDir dir("single");
    auto c = quick_config(dir, "out");
    c.models = {"lr"};
    pipeline::run_all(c);
    const auto rows = lines_of(fixtures::read_text(c.output_dir / "metrics.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].rfind("lr,", 0) == 0);
    CHECK(fs::exists(c.output_dir / "roc_lr.csv"));
    CHECK_FALSE(fs::exists(c.output_dir / "roc_gnb.csv"));
}

TEST_CASE("a failing run removes what it wrote") {
    fixtures::TempDir dir("failing");
    auto c = quick_config(dir, "out");
    c.apriori.columns = {"Age"};
    const auto msg = fixtures::error_of([&] { pipeline::run_all(c); });
    CHECK(msg.find("stage 'mine'") != std::string::npos);
    CHECK_FALSE(fs::exists(c.output_dir / "encoded.csv"));
    CHECK_FALSE(fs::exists(c.output_dir / "manifest.json"));
}

TEST_CASE("checksums") {
    fixtures::TempDir dir("sum");
    fixtures::write_text(dir / "empty", "");
    fixtures::write_text(dir / "a", "a");
    CHECK(pipeline::checksum_file(dir / "empty") == "cbf29ce484222325");
    CHECK(pipeline::checksum_file(dir / "a") == "af63dc4c8601ec8c");
    CHECK_THROWS_AS(pipeline::checksum_file(dir / "absent"), Error);
}

TEST_CASE("ROC SVG") {
    std::vector<report::NamedCurve> curves;
    for (int i = 0; i < 11; ++i) {
        curves.push_back({"m" + std::to_string(i), curve_of({{0, 0}, {0.1 * i / 2, 0.5}, {1, 1}}, 0.7)});
    }
    const auto svg = report::roc_svg(curves);
    CHECK(svg == report::roc_svg(curves));
    CHECK(count_of(svg, "<polyline") == 11);
    CHECK(count_of(svg, "class=\"diagonal\"") == 1);
    CHECK(svg.find("m10 (AUC 0.700)") != std::string::npos);

    const std::vector<report::NamedCurve> perfect{{"rf", curve_of({{0, 0}, {0, 1}, {1, 1}}, 1.0)}};
    const auto one = report::roc_svg(perfect);
    std::smatch diag;
    REQUIRE(std::regex_search(one, diag,
                              std::regex("class=\"diagonal\" x1=\"([0-9.]+)\" y1=\"([0-9.]+)\" x2=\"([0-9.]+)\" "
                                         "y2=\"([0-9.]+)\"")));
    const std::string x0 = diag[1], y0 = diag[2], x1 = diag[3], y1 = diag[4];
    CHECK(one.find("points=\"" + x0 + "," + y0 + " " + x0 + "," + y1 + " " + x1 + "," + y1 + "\"") !=
          std::string::npos);

    CHECK_THROWS_AS(report::roc_svg({}), Error);
}

TEST_CASE("command-line tool") {
    fixtures::TempDir dir("cli");
    fixtures::write_text(dir / "data.csv", fixtures::synthetic_uci_csv(80, 4));
    const std::string cli = EARLYRISK_CLI;
    const auto out = (dir / "out").string();
    const auto log = (dir / "log.txt").string();
    CHECK(std::system((cli + " --version > " + log).c_str()) == 0);
    CHECK(fixtures::read_text(dir / "log.txt").find(pipeline::toolkit_version()) != std::string::npos);
    CHECK(std::system((cli + " ingest --data " + (dir / "data.csv").string() + " --out " + out + " > " + log).c_str()) ==
          0);
    CHECK(fs::exists(dir / "out" / "encoded.csv"));
    CHECK(std::system((cli + " select --out " + (dir / "nothing").string() + " > " + log + " 2>&1").c_str()) != 0);
    CHECK(fixtures::read_text(dir / "log.txt").find("earlyrisk select: error:") != std::string::npos);
}

}  // TEST_SUITE
