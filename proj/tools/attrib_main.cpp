// Command-line surface: attribute / evaluate / adaptive / gradcheck / report.
// Exit codes: 0 success, 2 config or IO error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "attrib/parallel.hpp"
#include "attrib/runner.hpp"

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output;
    std::size_t workers = 0;
};

attrib::ExperimentConfig resolve_config(const GlobalOpts& opts) {
    attrib::ExperimentConfig cfg = attrib::load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.output) cfg.output_dir = *opts.output;
    if (opts.workers > 0) cfg.workers = opts.workers;
    attrib::set_worker_count(cfg.workers);
    return cfg;
}

void add_global_flags(CLI::App* cmd, GlobalOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Experiment config JSON")->required();
    cmd->add_option("--seed", opts.seed, "Override the config seed");
    cmd->add_option("--output", opts.output, "Override the output directory");
    cmd->add_option("--workers", opts.workers, "Worker thread cap (0 = runtime default)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gradient attribution toolkit"};
    app.require_subcommand(1);

    GlobalOpts opts;
    int rc = 0;

    const auto run = [&](const char* name, auto&& fn) {
        CLI::App* cmd = app.add_subcommand(name);
        add_global_flags(cmd, opts);
        cmd->callback([&, fn]() {
            try {
                fn(resolve_config(opts));
            } catch (const attrib::Error& e) {
                std::cerr << "error: " << e.what() << "\n";
                rc = e.kind() == attrib::ErrorKind::numeric ? 3 : 2;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                rc = 1;
            }
        });
        return cmd;
    };

    run("attribute", [](const attrib::ExperimentConfig& cfg) {
        const auto files = attrib::cmd_attribute(cfg);
        std::cout << "attribute: wrote " << files.size() << " files to " << cfg.output_dir.string()
                  << "\n";
    })->description("Attribution maps + saliency PGMs per (input, method)");

    run("evaluate", [](const attrib::ExperimentConfig& cfg) {
        const auto files = attrib::cmd_evaluate(cfg);
        std::cout << "evaluate: wrote " << files.size() << " files to " << cfg.output_dir.string()
                  << "\n";
    })->description("Perturbation + TV curves, per-image metrics, aggregated table");

    run("adaptive", [](const attrib::ExperimentConfig& cfg) {
        const auto files = attrib::cmd_adaptive(cfg);
        std::cout << "adaptive: wrote " << files.size() << " files to " << cfg.output_dir.string()
                  << "\n";
    })->description("Per-input noise-scale line search with tuned maps");

    run("gradcheck", [](const attrib::ExperimentConfig& cfg) {
        std::string text;
        attrib::cmd_gradcheck(cfg, &text);
        std::cout << text;
    })->description("Autodiff vs finite-difference oracle report");

    run("report", [](const attrib::ExperimentConfig& cfg) {
        const auto files = attrib::cmd_report(cfg);
        std::cout << "report: wrote " << files.size() << " files to " << cfg.output_dir.string()
                  << "\n";
    })->description("Aggregate metrics CSVs into the summary table");

    CLI11_PARSE(app, argc, argv);
    return rc;
}
