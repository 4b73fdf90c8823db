#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "earlyrisk/config.hpp"
#include "earlyrisk/pipeline.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::string> data;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> models;
};

void add_flags(CLI::App& app, Overrides& o) {
    app.add_option("--config", o.config_path, "JSON run configuration");
    app.add_option("--data", o.data, "input CSV (overrides the config)");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--models", o.models, "comma-separated model names");
}

earlyrisk::RunConfig resolve(const Overrides& o) {
    auto cfg = o.config_path.empty() ? earlyrisk::default_config() : earlyrisk::load_config(o.config_path);
    if (o.data) cfg.data = *o.data;
    if (o.seed) cfg.seed = *o.seed;
    if (o.out) cfg.output_dir = *o.out;
    if (o.models) cfg.models = earlyrisk::split_model_list(*o.models);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"earlyrisk: early diabetes risk modelling toolkit"};
    app.set_version_flag("--version", earlyrisk::pipeline::toolkit_version());
    app.require_subcommand(1);

    Overrides overrides;
    std::string chosen;

    auto* run = app.add_subcommand("run", "run every stage and write manifest.json");
    add_flags(*run, overrides);
    run->callback([&] { chosen = "run"; });

    auto* show = app.add_subcommand("config", "print the resolved configuration as JSON");
    add_flags(*show, overrides);
    show->callback([&] { chosen = "config"; });

    const std::pair<const char*, const char*> stages[] = {
        {"ingest", "encode the input CSV into encoded.csv"},
        {"mine", "mine association rules into rules.csv"},
        {"select", "run the feature selectors and write votes.csv"},
        {"train", "fit the enabled models and write test predictions"},
        {"cv", "cross-validate the enabled models into cv.csv"},
        {"eval", "compute metrics, confusion matrices and ROC curves"},
        {"report", "render report.md and roc.svg"},
    };
    for (const auto& [name, help] : stages) {
        auto* sub = app.add_subcommand(name, help);
        add_flags(*sub, overrides);
        sub->callback([&chosen, n = std::string(name)] { chosen = n; });
    }

    CLI11_PARSE(app, argc, argv);

    std::string stage = "config";
    try {
        const auto cfg = resolve(overrides);
        if (chosen == "config") {
            std::cout << earlyrisk::config_to_json(cfg) << '\n';
        } else if (chosen == "run") {
            stage = "run";
            const auto manifest = earlyrisk::pipeline::run_all(cfg);
            for (const auto& s : manifest.stages) {
                std::cout << s.stage << ": " << s.seconds << " s\n";
            }
            std::cout << "wrote " << (cfg.output_dir / "manifest.json").generic_string() << '\n';
        } else {
            stage = chosen;
            const auto result = earlyrisk::pipeline::run_stage(chosen, cfg);
            for (const auto& p : result.outputs) std::cout << "wrote " << p.generic_string() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "earlyrisk " << stage << ": error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
