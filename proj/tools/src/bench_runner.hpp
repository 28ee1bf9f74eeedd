#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include "bench_config.hpp"
#include "simba/problems.hpp"
#include "simba/verify.hpp"

namespace simba::bench {

std::unique_ptr<Problem> build_problem(const ProblemConfig& config);

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::uint64_t seed);

// Output root: the config's out_dir, overridden by --out, resolved against
// the SIMBA_OUT_ROOT environment variable when relative.
std::filesystem::path resolve_out_dir(const ExperimentConfig& config,
                                      const std::string& cli_override);

struct RunOutput {
    std::vector<std::filesystem::path> trace_files;
    std::filesystem::path summary_file;
};

// One CSV trace per (optimizer, seed), a summary with mean +- std of the
// final training error per optimizer, and the config echoed for provenance.
RunOutput run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         std::ostream& log);

// Rate-certificate check on a quadratic problem; returns the process exit
// code (0 clean, kExitContraction on any violation).
int verify_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      std::ostream& log);

// CSV helpers shared with tests.
struct TraceData {
    std::string optimizer;
    std::vector<long> iters;
    std::vector<double> losses;
    std::vector<double> seconds;
};

TraceData read_trace(const std::filesystem::path& file);

}  // namespace simba::bench
