#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bench_config.hpp"
#include "bench_plot.hpp"
#include "bench_runner.hpp"

namespace {

using namespace simba::bench;

void apply_overrides(ExperimentConfig& config, long iters, long long seed) {
    if (iters > 0) config.iters = iters;
    if (iters > 0) config.verify.iterations = iters;
    if (seed >= 0) config.seeds = {static_cast<std::uint64_t>(seed)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simba-bench: optimizer benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, out_override, trace_dir;
    long iters_override = 0;
    long long seed_override = -1;

    CLI::App* run_cmd = app.add_subcommand("run", "run optimizers and write traces");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_override, "output directory override");
    run_cmd->add_option("--iters", iters_override, "iteration budget override");
    run_cmd->add_option("--seed", seed_override, "single-seed override");

    CLI::App* verify_cmd = app.add_subcommand("verify", "check the linear-rate certificate");
    verify_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    verify_cmd->add_option("--out", out_override, "output directory override");
    verify_cmd->add_option("--iters", iters_override, "iteration budget override");
    verify_cmd->add_option("--seed", seed_override, "single-seed override");

    CLI::App* plot_cmd = app.add_subcommand("plot", "render figures from a trace directory");
    plot_cmd->add_option("dir", trace_dir, "directory holding traces")->required();
    plot_cmd->add_option("--out", out_override, "figure output directory (defaults to dir)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            ExperimentConfig config = load_config(config_path);
            apply_overrides(config, iters_override, seed_override);
            const auto out_dir = resolve_out_dir(config, out_override);
            const RunOutput output = run_experiment(config, out_dir, std::cout);
            std::cout << "wrote " << output.trace_files.size() << " trace(s) and "
                      << output.summary_file.string() << "\n";
            return kExitOk;
        }
        if (verify_cmd->parsed()) {
            ExperimentConfig config = load_config(config_path);
            apply_overrides(config, iters_override, seed_override);
            const auto out_dir = resolve_out_dir(config, out_override);
            return verify_experiment(config, out_dir, std::cout);
        }
        if (plot_cmd->parsed()) {
            const std::string out = out_override.empty() ? trace_dir : out_override;
            const auto figures = plot_traces(trace_dir, out);
            for (const auto& figure : figures) std::cout << "wrote " << figure.string() << "\n";
            return kExitOk;
        }
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const IoError& err) {
        std::cerr << "io error: " << err.what() << "\n";
        return kExitIo;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return kExitOk;
}
