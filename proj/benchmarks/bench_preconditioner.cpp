#include <benchmark/benchmark.h>

#include "simba/baselines.hpp"
#include "simba/linalg.hpp"
#include "simba/optimizer.hpp"
#include "simba/random.hpp"

using namespace simba;

// Build cost of the truncated inverse-sqrt preconditioner as the coarse
// dimension grows with the column count fixed. At d >= n_l the Gram matrix
// is formed explicitly, so the expected scaling is quadratic in n_l.
static void BM_PreconditionerBuild(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Eigen::Index d = 512;
    Rng rng(7);
    const Eigen::MatrixXd g = gaussian_matrix(n, d, rng);
    for (auto _ : state) {
        const TruncatedSpectrum spec = randomized_truncated_eig(g, 21, 10, 2, rng);
        benchmark::DoNotOptimize(build_inverse_sqrt(spec, 1e-8));
    }
}
BENCHMARK(BM_PreconditionerBuild)->Arg(128)->Arg(256)->Arg(512);

// Tall-and-thin blocks take the Gram-trick route on G itself, linear in n_l.
static void BM_PreconditionerBuildThin(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    const Eigen::Index d = 8;
    Rng rng(11);
    const Eigen::MatrixXd g = gaussian_matrix(n, d, rng);
    for (auto _ : state) {
        const TruncatedSpectrum spec = randomized_truncated_eig(g, 21, 10, 2, rng);
        benchmark::DoNotOptimize(build_inverse_sqrt(spec, 1e-8));
    }
}
BENCHMARK(BM_PreconditionerBuildThin)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_ApplyPreconditioner(benchmark::State& state) {
    const Eigen::Index n = state.range(0);
    Rng rng(13);
    const Eigen::MatrixXd g = gaussian_matrix(n, 32, rng);
    const TruncatedSpectrum spec = randomized_truncated_eig(g, 21, 10, 2, rng);
    const Preconditioner p = build_inverse_sqrt(spec, 1e-8);
    const Eigen::MatrixXd v = gaussian_matrix(n, 32, rng);
    for (auto _ : state) benchmark::DoNotOptimize(apply_preconditioner(p, v));
}
BENCHMARK(BM_ApplyPreconditioner)->Arg(256)->Arg(1024)->Arg(4096);

static void BM_SimbaStep(benchmark::State& state) {
    const Eigen::Index q = state.range(0);
    HyperParams hp;
    hp.coarse_fraction = 0.5;
    SimbaOptimizer opt(hp);
    std::vector<ParamBlock> blocks{{"w", Eigen::MatrixXd::Zero(q, 64)}};
    Rng rng(17);
    const std::vector<Eigen::MatrixXd> grads{gaussian_matrix(q, 64, rng)};
    for (auto _ : state) benchmark::DoNotOptimize(opt.step(blocks, grads));
}
BENCHMARK(BM_SimbaStep)->Arg(128)->Arg(512)->Arg(2048);

static void BM_AdamStep(benchmark::State& state) {
    const Eigen::Index q = state.range(0);
    AdamOptimizer opt(1e-3);
    std::vector<ParamBlock> blocks{{"w", Eigen::MatrixXd::Zero(q, 64)}};
    Rng rng(19);
    const std::vector<Eigen::MatrixXd> grads{gaussian_matrix(q, 64, rng)};
    for (auto _ : state) benchmark::DoNotOptimize(opt.step(blocks, grads));
}
BENCHMARK(BM_AdamStep)->Arg(128)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
