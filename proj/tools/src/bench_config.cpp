#include "bench_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace simba::bench {

namespace {

using nlohmann::json;

ProblemKind parse_kind(const std::string& kind) {
    if (kind == "quadratic") return ProblemKind::Quadratic;
    if (kind == "nlls") return ProblemKind::Nlls;
    if (kind == "autoencoder") return ProblemKind::Autoencoder;
    throw ConfigError("unknown problem kind '" + kind + "'");
}

ProblemConfig parse_problem(const json& node) {
    ProblemConfig problem;
    problem.kind = parse_kind(node.at("kind").get<std::string>());
    problem.seed = node.value("seed", problem.seed);
    switch (problem.kind) {
        case ProblemKind::Quadratic:
            problem.dim = node.value("dim", problem.dim);
            problem.mu = node.value("mu", problem.mu);
            problem.lipschitz = node.value("L", problem.lipschitz);
            if (!(problem.mu > 0.0 && problem.mu < problem.lipschitz))
                throw ConfigError("quadratic problem needs 0 < mu < L");
            break;
        case ProblemKind::Nlls:
            problem.data_path = node.value("data", std::string{});
            if (node.contains("synth")) {
                const json& synth = node.at("synth");
                problem.synth_m = synth.value("m", problem.synth_m);
                problem.synth_n = synth.value("n", problem.synth_n);
                problem.synth_sparsity = synth.value("sparsity", problem.synth_sparsity);
            }
            break;
        case ProblemKind::Autoencoder:
            for (const auto& w : node.at("widths")) problem.widths.push_back(w.get<Eigen::Index>());
            problem.activation = node.value("activation", problem.activation);
            problem.samples = node.value("samples", problem.samples);
            problem.init_scale = node.value("init_scale", problem.init_scale);
            break;
    }
    return problem;
}

OptimizerConfig parse_optimizer(const json& node) {
    OptimizerConfig opt;
    opt.name = node.at("name").get<std::string>();
    opt.label = node.value("label", opt.name);
    if (opt.name == "simba") {
        opt.hp.step_size = node.value("step_size", opt.hp.step_size);
        opt.hp.momentum = node.value("momentum", opt.hp.momentum);
        opt.hp.rank = node.value("rank", opt.hp.rank);
        opt.hp.coarse_fraction = node.value("coarse_fraction", opt.hp.coarse_fraction);
        opt.hp.floor = node.value("floor", opt.hp.floor);
        opt.hp.guard_xi = node.value("guard_xi", opt.hp.guard_xi);
        opt.hp.guard_e = node.value("guard_e", opt.hp.guard_e);
        opt.hp.oversample = node.value("oversample", opt.hp.oversample);
        opt.hp.power_iters = node.value("power_iters", opt.hp.power_iters);
        const std::string mode = node.value("mode", std::string{"always-coarse"});
        if (mode == "always-coarse")
            opt.mode = StepMode::AlwaysCoarse;
        else if (mode == "guarded")
            opt.mode = StepMode::Guarded;
        else
            throw ConfigError("unknown simba mode '" + mode + "'");
        try {
            opt.hp.validate();
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("simba hyper parameters: ") + err.what());
        }
    } else if (opt.name == "adam") {
        opt.lr = node.value("lr", opt.lr);
        opt.adam_beta1 = node.value("beta1", opt.adam_beta1);
        opt.adam_beta2 = node.value("beta2", opt.adam_beta2);
        opt.adam_eps = node.value("eps", opt.adam_eps);
    } else if (opt.name == "sgd_momentum") {
        opt.lr = node.value("lr", 1e-2);
        opt.sgd_momentum = node.value("momentum", opt.sgd_momentum);
    } else {
        throw ConfigError("unknown optimizer '" + opt.name + "'");
    }
    return opt;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config parse error: ") + err.what());
    }

    try {
        ExperimentConfig config;
        config.raw_json = text;
        config.problem = parse_problem(doc.at("problem"));

        if (!doc.contains("optimizers") || doc.at("optimizers").empty())
            throw ConfigError("config needs at least one optimizer");
        for (const auto& node : doc.at("optimizers"))
            config.optimizers.push_back(parse_optimizer(node));

        config.iters = doc.value("iters", config.iters);
        if (config.iters < 1) throw ConfigError("iters must be positive");
        config.batch_size = doc.value("batch_size", config.batch_size);
        if (config.batch_size < 1) throw ConfigError("batch_size must be positive");

        if (doc.contains("seeds")) {
            config.seeds.clear();
            for (const auto& s : doc.at("seeds")) config.seeds.push_back(s.get<std::uint64_t>());
            if (config.seeds.empty()) throw ConfigError("seeds must not be empty");
        }
        config.init = doc.value("init", config.init);
        if (config.init != "zero" && config.init != "normal" && config.init != "default")
            throw ConfigError("init must be zero, normal or default");

        if (doc.contains("schedule")) {
            const json& node = doc.at("schedule");
            config.schedule.kind = node.value("kind", config.schedule.kind);
            config.schedule.min_factor = node.value("min_factor", config.schedule.min_factor);
            if (config.schedule.kind != "constant" && config.schedule.kind != "cosine")
                throw ConfigError("schedule kind must be constant or cosine");
        }
        if (doc.contains("verify")) {
            const json& node = doc.at("verify");
            config.verify.iterations = node.value("iters", config.verify.iterations);
            config.verify.eps_fraction = node.value("eps_fraction", config.verify.eps_fraction);
            config.verify.mode = node.value("mode", config.verify.mode);
            if (node.contains("factor_override"))
                config.verify.factor_override = node.at("factor_override").get<double>();
        }
        config.out_dir = doc.value("out_dir", config.out_dir);
        return config;
    } catch (const json::exception& err) {
        throw ConfigError(std::string("config error: ") + err.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace simba::bench
