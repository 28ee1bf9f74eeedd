#include "bench_runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "simba/baselines.hpp"

namespace simba::bench {

namespace {

using Clock = std::chrono::steady_clock;

InitKind parse_init(const std::string& init) {
    if (init == "zero") return InitKind::Zero;
    if (init == "normal") return InitKind::Normal;
    return InitKind::Default;
}

double schedule_factor(const ScheduleConfig& schedule, long k, long total) {
    if (schedule.kind != "cosine" || total <= 1) return 1.0;
    const double phase = static_cast<double>(k) / static_cast<double>(total - 1);
    const double lo = schedule.min_factor;
    return lo + (1.0 - lo) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kind_label(const std::vector<StepReport>& reports) {
    bool any_coarse = false, any_fine = false;
    for (const StepReport& report : reports) {
        if (report.kind == StepKind::Coarse)
            any_coarse = true;
        else
            any_fine = true;
    }
    if (any_coarse && any_fine) return "mixed";
    return any_coarse ? "coarse" : "fine";
}

}  // namespace

std::unique_ptr<Problem> build_problem(const ProblemConfig& config) {
    switch (config.kind) {
        case ProblemKind::Quadratic: {
            Rng rng(fnv1a64("x_star", config.seed));
            const Eigen::VectorXd x_star = gaussian_matrix(config.dim, 1, rng);
            const Eigen::VectorXd spectrum =
                Eigen::VectorXd::LinSpaced(config.dim, config.mu, config.lipschitz);
            return std::make_unique<QuadraticProblem>(spectrum, x_star, config.seed);
        }
        case ProblemKind::Nlls: {
            Dataset data;
            if (!config.data_path.empty()) {
                if (!std::filesystem::exists(config.data_path))
                    throw IoError("data file not found: " + config.data_path);
                data = parse_libsvm(config.data_path);
            } else {
                data = synthetic_nlls(config.synth_m, config.synth_n, config.synth_sparsity,
                                      config.seed);
            }
            return std::make_unique<NllsProblem>(std::move(data));
        }
        case ProblemKind::Autoencoder: {
            if (config.widths.empty()) throw ConfigError("autoencoder needs widths");
            MlpSpec spec;
            spec.widths = config.widths;
            spec.activation =
                config.activation == "relu" ? Activation::Relu : Activation::Sigmoid;
            spec.init_scale = config.init_scale;
            spec.seed = config.seed;
            Dataset data = synthetic_signals(config.samples, config.widths.front(), config.seed);
            return std::make_unique<AutoencoderProblem>(std::move(spec), std::move(data));
        }
    }
    throw ConfigError("unreachable problem kind");
}

std::unique_ptr<Optimizer> make_optimizer(const OptimizerConfig& config, std::uint64_t seed) {
    if (config.name == "simba") {
        HyperParams hp = config.hp;
        hp.seed = seed;
        return std::make_unique<SimbaOptimizer>(hp, config.mode);
    }
    if (config.name == "adam")
        return std::make_unique<AdamOptimizer>(config.lr, config.adam_beta1, config.adam_beta2,
                                               config.adam_eps);
    if (config.name == "sgd_momentum")
        return std::make_unique<SgdMomentumOptimizer>(config.lr, config.sgd_momentum);
    throw ConfigError("unknown optimizer '" + config.name + "'");
}

std::filesystem::path resolve_out_dir(const ExperimentConfig& config,
                                      const std::string& cli_override) {
    std::filesystem::path out = cli_override.empty() ? config.out_dir : cli_override;
    if (out.is_relative()) {
        if (const char* root = std::getenv("SIMBA_OUT_ROOT"); root != nullptr && *root != '\0')
            out = std::filesystem::path(root) / out;
    }
    return out;
}

RunOutput run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                         std::ostream& log) {
    const std::unique_ptr<Problem> problem = build_problem(config.problem);
    const InitKind init = parse_init(config.init);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    // Echo the configuration for provenance.
    {
        std::ofstream echo(out_dir / "config.json");
        if (!echo) throw IoError("cannot write config echo");
        echo << config.raw_json;
    }

    RunOutput output;
    std::map<std::string, std::vector<double>> final_losses;
    std::vector<std::string> label_order;

    for (const OptimizerConfig& opt_config : config.optimizers) {
        if (std::find(label_order.begin(), label_order.end(), opt_config.label) ==
            label_order.end())
            label_order.push_back(opt_config.label);

        const double base_step = opt_config.name == "simba" ? opt_config.hp.step_size
                                                            : opt_config.lr;

        for (const std::uint64_t seed : config.seeds) {
            const std::unique_ptr<Optimizer> optimizer = make_optimizer(opt_config, seed);
            std::vector<ParamBlock> blocks = problem->initial_blocks(init, seed);
            Rng batch_rng(fnv1a64("batch", seed));

            const std::filesystem::path trace_path =
                out_dir / (opt_config.label + "_seed" + std::to_string(seed) + ".csv");
            std::ofstream trace(trace_path);
            if (!trace) throw IoError("cannot write trace " + trace_path.string());
            trace << "run_id,optimizer,iter,epoch,loss,grad_norm,step_kind,seconds\n";

            const std::string run_id = opt_config.label + "-s" + std::to_string(seed);
            const Eigen::Index m = problem->sample_count();
            const Eigen::Index batch_size = std::min<Eigen::Index>(config.batch_size, m);

            std::vector<Eigen::MatrixXd> grads;
            const auto started = Clock::now();
            double final_loss = 0.0;

            for (long k = 1; k <= config.iters; ++k) {
                optimizer->set_step_size(base_step *
                                         schedule_factor(config.schedule, k - 1, config.iters));

                std::vector<Eigen::Index> batch;
                if (batch_size < m)
                    batch = sample_restriction(m, batch_size, batch_rng).indices;
                problem->batch_gradient(blocks, batch, grads);

                double grad_norm_sq = 0.0;
                for (const Eigen::MatrixXd& g : grads) grad_norm_sq += g.squaredNorm();

                const std::vector<StepReport> reports = optimizer->step(blocks, grads);
                final_loss = problem->loss(blocks);

                const long epoch = (k * batch_size) / m;
                const double seconds =
                    std::chrono::duration<double>(Clock::now() - started).count();
                trace << run_id << ',' << opt_config.label << ',' << k << ',' << epoch << ','
                      << format_double(final_loss) << ','
                      << format_double(std::sqrt(grad_norm_sq)) << ',' << kind_label(reports)
                      << ',' << format_double(seconds) << '\n';
            }
            if (!trace) throw IoError("write failed for " + trace_path.string());
            output.trace_files.push_back(trace_path);
            final_losses[opt_config.label].push_back(final_loss);
            log << run_id << ": final loss " << format_double(final_loss) << "\n";
        }
    }

    // Summary: mean and sample standard deviation of the final training error.
    output.summary_file = out_dir / "summary.csv";
    std::ofstream summary(output.summary_file);
    if (!summary) throw IoError("cannot write summary");
    summary << "optimizer,runs,final_loss_mean,final_loss_std\n";
    for (const std::string& label : label_order) {
        const std::vector<double>& losses = final_losses[label];
        const double n = static_cast<double>(losses.size());
        double mean = 0.0;
        for (const double v : losses) mean += v;
        mean /= n;
        double var = 0.0;
        for (const double v : losses) var += (v - mean) * (v - mean);
        const double stddev = losses.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
        summary << label << ',' << losses.size() << ',' << format_double(mean) << ','
                << format_double(stddev) << '\n';
    }
    return output;
}

int verify_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      std::ostream& log) {
    const std::unique_ptr<Problem> problem = build_problem(config.problem);
    const auto* quadratic = dynamic_cast<const QuadraticProblem*>(problem.get());
    if (quadratic == nullptr || !problem->curvature())
        throw ConfigError("verify needs a problem with known (mu, L, f*); use a quadratic");

    TheoremCheckConfig check;
    check.iterations = config.verify.iterations;
    check.eps_fraction = config.verify.eps_fraction;
    check.factor_override = config.verify.factor_override;
    if (config.verify.mode == "guarded")
        check.mode = VerifyMode::Guarded;
    else if (config.verify.mode == "always-coarse")
        check.mode = VerifyMode::AlwaysCoarse;
    else if (config.verify.mode == "always-fine")
        check.mode = VerifyMode::AlwaysFine;
    else
        throw ConfigError("verify mode must be guarded, always-coarse or always-fine");
    check.init = parse_init(config.init);

    // Simba settings come from the first simba entry, default otherwise.
    for (const OptimizerConfig& opt : config.optimizers) {
        if (opt.name == "simba") {
            check.hp = opt.hp;
            break;
        }
    }
    check.hp.momentum = 0.0;  // the guarantees are stated without momentum

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());
    std::ofstream report(out_dir / "certificate.csv");
    if (!report) throw IoError("cannot write certificate");
    report << "seed,mu,L,m,M,xi,omega,c_hat,c,k_hat,k,step_coarse,step_fine,"
              "coarse_steps,fine_steps,violations,k_bound_ok,passed\n";

    long total_violations = 0;
    bool all_passed = true;
    for (const std::uint64_t seed : config.seeds) {
        TheoremCheckConfig seeded = check;
        seeded.seed = seed;
        seeded.hp.seed = seed;
        const TheoremCheckResult result = check_theorem_rates(*quadratic, seeded);
        total_violations += result.violations();
        all_passed = all_passed && result.passed;

        const RateCertificate& cert = result.certificate;
        report << seed << ',' << format_double(cert.mu) << ',' << format_double(cert.lipschitz)
               << ',' << format_double(cert.floor_m) << ',' << format_double(cert.bound_M) << ','
               << format_double(cert.xi) << ',' << format_double(cert.omega) << ','
               << format_double(cert.c_hat) << ',' << format_double(cert.c) << ','
               << format_double(cert.k_hat) << ',' << format_double(cert.k) << ','
               << format_double(result.step_coarse) << ',' << format_double(result.step_fine)
               << ',' << result.coarse_steps << ',' << result.fine_steps << ','
               << result.violations() << ',' << (result.k_bound_ok ? 1 : 0) << ','
               << (result.passed ? 1 : 0) << '\n';

        log << "seed " << seed << ": coarse " << result.coarse_steps << ", fine "
            << result.fine_steps << ", violations " << result.violations() << ", k_hat "
            << format_double(cert.k_hat) << (result.passed ? " [ok]" : " [FAIL]") << "\n";
    }

    if (!all_passed || total_violations > 0) {
        log << "contraction check FAILED (" << total_violations << " violations)\n";
        return kExitContraction;
    }
    log << "contraction check passed for " << config.seeds.size() << " seed(s)\n";
    return kExitOk;
}

TraceData read_trace(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open trace " + file.string());
    TraceData data;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace " + file.string());
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (fields.size() != 8) throw IoError("malformed trace row in " + file.string());
        data.optimizer = fields[1];
        data.iters.push_back(std::stol(fields[2]));
        data.losses.push_back(std::stod(fields[4]));
        data.seconds.push_back(std::stod(fields[7]));
    }
    if (data.losses.empty()) throw IoError("trace has no rows: " + file.string());
    return data;
}

}  // namespace simba::bench
