#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "simba/optimizer.hpp"

namespace simba::bench {

// Bad or inconsistent configuration: exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Missing files, unreadable directories: exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitContraction = 4;

enum class ProblemKind { Quadratic, Nlls, Autoencoder };

struct ProblemConfig {
    ProblemKind kind = ProblemKind::Quadratic;
    std::uint64_t seed = 0;

    // quadratic
    Eigen::Index dim = 200;
    double mu = 1.0;
    double lipschitz = 100.0;

    // nlls: either a LIBSVM file or a synthetic instance
    std::string data_path;
    Eigen::Index synth_m = 600;
    Eigen::Index synth_n = 500;
    double synth_sparsity = 0.05;

    // autoencoder
    std::vector<Eigen::Index> widths;
    std::string activation = "sigmoid";
    Eigen::Index samples = 512;
    double init_scale = 1.0;
};

struct OptimizerConfig {
    std::string name;   // simba | adam | sgd_momentum
    std::string label;  // trace label, defaults to name

    HyperParams hp;  // simba settings
    StepMode mode = StepMode::AlwaysCoarse;

    double lr = 1e-3;  // baselines
    double sgd_momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct ScheduleConfig {
    std::string kind = "constant";  // constant | cosine
    double min_factor = 0.0;
};

struct VerifyConfig {
    long iterations = 300;
    double eps_fraction = 1e-6;
    std::string mode = "guarded";  // guarded | always-coarse | always-fine
    std::optional<double> factor_override;
};

struct ExperimentConfig {
    ProblemConfig problem;
    std::vector<OptimizerConfig> optimizers;
    long iters = 1000;
    Eigen::Index batch_size = 128;
    std::vector<std::uint64_t> seeds{0};
    std::string init = "default";  // zero | normal | default
    ScheduleConfig schedule;
    VerifyConfig verify;
    std::string out_dir = "out";

    std::string raw_json;  // echoed into the output directory
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace simba::bench
