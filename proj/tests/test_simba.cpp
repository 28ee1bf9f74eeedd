#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cstring>

#include "simba/optimizer.hpp"
#include "simba/random.hpp"

using namespace simba;

namespace {

Eigen::MatrixXd dense_inverse_sqrt_oracle(const Eigen::MatrixXd& q, Eigen::Index r, double m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q);
    const Eigen::VectorXd vals = solver.eigenvalues().reverse().cwiseMax(0.0);
    const Eigen::MatrixXd vecs = solver.eigenvectors().rowwise().reverse();
    const double fill = 1.0 / std::sqrt(std::max(vals[r], m));
    Eigen::MatrixXd op = fill * Eigen::MatrixXd::Identity(q.rows(), q.rows());
    for (Eigen::Index i = 0; i < r; ++i)
        op += (1.0 / std::sqrt(std::max(vals[i], m)) - fill) * vecs.col(i) * vecs.col(i).transpose();
    return op;
}

}  // namespace

TEST_CASE("ema follows the accumulator recursion without bias correction") {
    EmaState state;
    const Eigen::MatrixXd one = Eigen::MatrixXd::Constant(1, 1, 1.0);
    ema_update(state, one, 0.9);
    CHECK(state.g(0, 0) == doctest::Approx(1.0));
    ema_update(state, one, 0.9);
    CHECK(state.g(0, 0) == doctest::Approx(1.9));
    CHECK(state.step_count == 2);
}

TEST_CASE("ema with zero momentum tracks the current gradient") {
    EmaState state;
    Rng rng(3);
    for (int k = 0; k < 5; ++k) {
        const Eigen::MatrixXd grad = gaussian_matrix(4, 2, rng);
        ema_update(state, grad, 0.0);
        CHECK(state.g == grad);
    }
}

TEST_CASE("ema limit for a constant gradient is g / (1 - beta)") {
    EmaState state;
    const Eigen::MatrixXd g = Eigen::MatrixXd::Constant(2, 1, 0.7);
    for (int k = 0; k < 200; ++k) ema_update(state, g, 0.9);
    CHECK(state.g(0, 0) == doctest::Approx(0.7 / 0.1).epsilon(1e-6));
}

TEST_CASE("ema rejects non-finite gradients") {
    EmaState state;
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(ema_update(state, bad, 0.9), std::invalid_argument);
}

TEST_CASE("coarse step with a zero accumulator leaves the block untouched") {
    ParamBlock block{"w", Eigen::MatrixXd::Random(8, 3)};
    const Eigen::MatrixXd before = block.values;
    EmaState state;
    state.g = Eigen::MatrixXd::Zero(8, 3);
    HyperParams hp;
    Rng rng(5);
    const StepReport report = coarse_step(block, state, hp, rng);
    CHECK(block.values == before);
    CHECK(report.coarse_norm == 0.0);
}

TEST_CASE("scalar block takes a sign-preserving magnitude-normalized step") {
    HyperParams hp;
    hp.step_size = 0.05;
    hp.floor = 1e-8;
    hp.coarse_fraction = 1.0;

    SUBCASE("gradient above the floor scale") {
        ParamBlock block{"s", Eigen::MatrixXd::Constant(1, 1, 2.0)};
        EmaState state;
        state.g = Eigen::MatrixXd::Constant(1, 1, 2.0);
        Rng rng(7);
        coarse_step(block, state, hp, rng);
        // step = -t * g / max(|g|, sqrt(m)) = -t * sign(g)
        CHECK(block.values(0, 0) == doctest::Approx(2.0 - 0.05).epsilon(1e-12));
    }
    SUBCASE("gradient below the floor scale") {
        ParamBlock block{"s", Eigen::MatrixXd::Zero(1, 1)};
        EmaState state;
        state.g = Eigen::MatrixXd::Constant(1, 1, 1e-6);
        Rng rng(7);
        coarse_step(block, state, hp, rng);
        // max(|g|, sqrt(m)) = 1e-4, so the step is -t * 1e-6 / 1e-4
        CHECK(block.values(0, 0) == doctest::Approx(-0.05 * 1e-2).epsilon(1e-10));
    }
}

TEST_CASE("full sampling matches the dense Eq-style oracle step") {
    Rng rng(11);
    const Eigen::Index q = 8, d = 3;
    ParamBlock block{"w", gaussian_matrix(q, d, rng)};
    const Eigen::MatrixXd x0 = block.values;
    EmaState state;
    state.g = gaussian_matrix(q, d, rng);

    HyperParams hp;
    hp.step_size = 0.1;
    hp.coarse_fraction = 1.0;
    hp.rank = 20;  // r + 1 >= q: the whole spectrum is kept
    hp.floor = 1e-8;
    Rng step_rng(13);
    coarse_step(block, state, hp, step_rng);

    Eigen::MatrixXd gram = state.g * state.g.transpose();
    gram = 0.5 * (gram + gram.transpose());
    const Eigen::MatrixXd op = dense_inverse_sqrt_oracle(gram, q - 1, hp.floor);
    const Eigen::MatrixXd expected = x0 - hp.step_size * op * state.g;
    CHECK((block.values - expected).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("unsampled rows are bit-identical after a coarse step") {
    Rng rng(17);
    ParamBlock block{"w", gaussian_matrix(50, 4, rng)};
    const Eigen::MatrixXd before = block.values;
    EmaState state;
    state.g = gaussian_matrix(50, 4, rng);

    HyperParams hp;
    hp.coarse_fraction = 0.3;
    hp.rank = 5;

    // Re-derive the sample the step will draw to know which rows may move.
    Rng probe = make_block_rng(hp.seed, block.id);
    const RestrictionOp expected_r = sample_restriction(50, 15, probe);

    Rng step_rng = make_block_rng(hp.seed, block.id);
    coarse_step(block, state, hp, step_rng);

    for (Eigen::Index i = 0; i < 50; ++i) {
        const bool sampled =
            std::binary_search(expected_r.indices.begin(), expected_r.indices.end(), i);
        if (!sampled) {
            for (Eigen::Index j = 0; j < 4; ++j) {
                CHECK(std::memcmp(&block.values(i, j), &before(i, j), sizeof(double)) == 0);
            }
        }
    }
    CHECK(block.values != before);
}

TEST_CASE("identical seeds give identical trajectories") {
    auto run = [](std::uint64_t seed) {
        HyperParams hp;
        hp.seed = seed;
        hp.coarse_fraction = 0.5;
        hp.rank = 3;
        SimbaOptimizer opt(hp);
        std::vector<ParamBlock> blocks{{"a", Eigen::MatrixXd::Zero(20, 2)},
                                       {"b", Eigen::MatrixXd::Zero(9, 1)}};
        Rng grad_rng(999);
        for (int k = 0; k < 10; ++k) {
            std::vector<Eigen::MatrixXd> grads{gaussian_matrix(20, 2, grad_rng),
                                               gaussian_matrix(9, 1, grad_rng)};
            opt.step(blocks, grads);
        }
        return blocks;
    };
    const auto a = run(4242);
    const auto b = run(4242);
    CHECK(a[0].values == b[0].values);
    CHECK(a[1].values == b[1].values);
    const auto c = run(4243);
    CHECK(a[0].values != c[0].values);
}

TEST_CASE("the realized direction is never an ascent direction for the EMA") {
    Rng rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        ParamBlock block{"w", Eigen::MatrixXd::Zero(30, 2)};
        EmaState state;
        state.g = gaussian_matrix(30, 2, rng);  // beta = 0: the EMA is the gradient
        HyperParams hp;
        hp.momentum = 0.0;
        hp.coarse_fraction = 0.4;
        hp.rank = 4;
        Rng step_rng(trial);
        coarse_step(block, state, hp, step_rng);
        const double inner = (state.g.array() * block.values.array()).sum();
        CHECK(inner <= 1e-12);  // <G, dx> <= 0, dx = -t P Q^{-1/2} R G
    }
}

TEST_CASE("a gradient supported off the sample leaves the block unchanged") {
    // <G, dx> = 0 exactly when R G = 0: the coarse direction vanishes.
    HyperParams hp;
    hp.coarse_fraction = 0.5;
    hp.rank = 2;
    Rng probe = make_block_rng(hp.seed, "w");
    const RestrictionOp r = sample_restriction(12, 6, probe);

    ParamBlock block{"w", Eigen::MatrixXd::Random(12, 2)};
    const Eigen::MatrixXd before = block.values;
    EmaState state;
    state.g = Eigen::MatrixXd::Zero(12, 2);
    for (Eigen::Index i = 0; i < 12; ++i)
        if (!std::binary_search(r.indices.begin(), r.indices.end(), i))
            state.g.row(i).setConstant(1.0);

    Rng step_rng = make_block_rng(hp.seed, "w");
    const StepReport report = coarse_step(block, state, hp, step_rng);
    CHECK(report.coarse_norm == 0.0);
    CHECK(block.values == before);
}

TEST_CASE("the displacement never exceeds the floored operator bound") {
    // |dx| <= t * m^{-1/2} * |R G|: the preconditioner's spectrum caps the step.
    Rng rng(29);
    for (int trial = 0; trial < 10; ++trial) {
        ParamBlock block{"w", Eigen::MatrixXd::Zero(24, 3)};
        EmaState state;
        state.g = gaussian_matrix(24, 3, rng);
        HyperParams hp;
        hp.step_size = 0.1;
        hp.floor = 1e-6;
        hp.coarse_fraction = 0.5;
        hp.rank = 4;
        Rng step_rng(trial);
        const StepReport report = coarse_step(block, state, hp, step_rng);
        const double bound = hp.step_size * report.coarse_norm / std::sqrt(hp.floor);
        CHECK(block.values.norm() <= bound * (1.0 + 1e-12));
    }
}

TEST_CASE("doubling the step size doubles the displacement") {
    auto displacement = [](double step) {
        ParamBlock block{"w", Eigen::MatrixXd::Zero(16, 2)};
        EmaState state;
        Rng grad_rng(31);
        state.g = gaussian_matrix(16, 2, grad_rng);
        HyperParams hp;
        hp.momentum = 0.0;
        hp.step_size = step;
        hp.coarse_fraction = 0.5;
        hp.rank = 3;
        Rng rng(77);
        coarse_step(block, state, hp, rng);
        return block.values;  // started from zero: the values are the displacement
    };
    const Eigen::MatrixXd d1 = displacement(0.01);
    const Eigen::MatrixXd d2 = displacement(0.02);
    CHECK(d2 == 2.0 * d1);
}

TEST_CASE("full sampling reduces the coarse step to the fine step bit-for-bit") {
    Rng grad_rng(37);
    const Eigen::MatrixXd g = gaussian_matrix(10, 2, grad_rng);
    HyperParams hp;
    hp.coarse_fraction = 1.0;
    hp.rank = 20;  // r + 1 >= n

    ParamBlock coarse_block{"w", Eigen::MatrixXd::Zero(10, 2)};
    ParamBlock fine_block{"w", Eigen::MatrixXd::Zero(10, 2)};
    EmaState state;
    state.g = g;
    Rng rng_a(5), rng_b(5);
    coarse_step(coarse_block, state, hp, rng_a);
    fine_step(fine_block, state, hp, rng_b);
    CHECK(coarse_block.values == fine_block.values);
}

TEST_CASE("zero gradient fine step is a no-op") {
    ParamBlock block{"w", Eigen::MatrixXd::Random(6, 2)};
    const Eigen::MatrixXd before = block.values;
    EmaState state;
    state.g = Eigen::MatrixXd::Zero(6, 2);
    HyperParams hp;
    Rng rng(1);
    fine_step(block, state, hp, rng);
    CHECK(block.values == before);
}

TEST_CASE("always-coarse mode never emits a fine report") {
    HyperParams hp;
    hp.seed = 9;
    hp.coarse_fraction = 0.5;
    hp.rank = 2;
    SimbaOptimizer opt(hp, StepMode::AlwaysCoarse);
    std::vector<ParamBlock> blocks{{"w", Eigen::MatrixXd::Zero(12, 1)}};
    Rng grad_rng(3);
    for (int k = 0; k < 20; ++k) {
        std::vector<Eigen::MatrixXd> grads{gaussian_matrix(12, 1, grad_rng)};
        for (const StepReport& report : opt.step(blocks, grads))
            CHECK(report.kind == StepKind::Coarse);
    }
}

TEST_CASE("guarded mode falls back to a fine step off the sample") {
    HyperParams hp;
    hp.seed = 21;
    hp.coarse_fraction = 0.5;
    hp.rank = 1;
    hp.guard_xi = 0.5;

    // Re-derive the restriction the optimizer will draw for this block, then
    // supply a gradient supported entirely on the unsampled rows.
    Rng probe = make_block_rng(hp.seed, "w");
    const RestrictionOp r = sample_restriction(8, 4, probe);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(8, 1);
    for (Eigen::Index i = 0; i < 8; ++i)
        if (!std::binary_search(r.indices.begin(), r.indices.end(), i)) grad(i, 0) = 1.0;

    SimbaOptimizer opt(hp, StepMode::Guarded);
    std::vector<ParamBlock> blocks{{"w", Eigen::MatrixXd::Zero(8, 1)}};
    std::vector<Eigen::MatrixXd> grads{grad};
    const auto reports = opt.step(blocks, grads);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].kind == StepKind::Fine);
}

TEST_CASE("guarded mode with full sampling matches always-coarse") {
    auto run = [](StepMode mode) {
        HyperParams hp;
        hp.seed = 55;
        hp.coarse_fraction = 1.0;
        hp.rank = 4;
        SimbaOptimizer opt(hp, mode);
        std::vector<ParamBlock> blocks{{"x", Eigen::MatrixXd::Zero(14, 1)}};
        Rng grad_rng(8);
        for (int k = 0; k < 8; ++k) {
            std::vector<Eigen::MatrixXd> grads{gaussian_matrix(14, 1, grad_rng)};
            opt.step(blocks, grads);
        }
        return blocks[0].values;
    };
    CHECK(run(StepMode::Guarded) == run(StepMode::AlwaysCoarse));
}

TEST_CASE("hyper parameter validation") {
    HyperParams hp;
    hp.coarse_fraction = 0.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = HyperParams{};
    hp.momentum = 1.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    hp = HyperParams{};
    hp.floor = 0.0;
    CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
    CHECK_NOTHROW(HyperParams{}.validate());
}
