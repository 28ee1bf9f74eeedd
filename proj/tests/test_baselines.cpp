#include <doctest.h>

#include <cmath>

#include "simba/baselines.hpp"

using namespace simba;

TEST_CASE("adam first step moves by about the learning rate") {
    ParamBlock block{"x", Eigen::MatrixXd::Zero(1, 1)};
    AdamState state;
    const double lr = 0.1;
    adam_step(block, state, Eigen::MatrixXd::Constant(1, 1, 3.0), lr);
    // bias correction makes m_hat = g and v_hat = g^2 on the first step
    CHECK(block.values(0, 0) == doctest::Approx(-lr).epsilon(1e-7));
}

TEST_CASE("adam with zero gradients never moves") {
    ParamBlock block{"x", Eigen::MatrixXd::Constant(2, 2, 1.5)};
    const Eigen::MatrixXd before = block.values;
    AdamState state;
    for (int k = 0; k < 50; ++k)
        adam_step(block, state, Eigen::MatrixXd::Zero(2, 2), 0.1);
    CHECK(block.values == before);
}

TEST_CASE("adam settles a scalar quadratic") {
    // The scalar simulation overshoots through zero around step 15 (momentum),
    // so |x| is not monotone; it stays bounded and ends far below 0.5.
    ParamBlock block{"x", Eigen::MatrixXd::Constant(1, 1, 1.0)};
    AdamState state;
    for (int k = 0; k < 100; ++k) {
        adam_step(block, state, block.values, 0.1);  // grad of x^2/2 is x
        CHECK(std::abs(block.values(0, 0)) <= 1.0 + 1e-12);
    }
    CHECK(std::abs(block.values(0, 0)) < 0.5);
    CHECK(std::abs(block.values(0, 0)) < 0.01);  // frozen from the simulation: 0.0029
}

TEST_CASE("adam rejects non-finite gradients") {
    ParamBlock block{"x", Eigen::MatrixXd::Zero(1, 1)};
    AdamState state;
    CHECK_THROWS_AS(
        adam_step(block, state, Eigen::MatrixXd::Constant(1, 1, std::nan("")), 0.1),
        std::invalid_argument);
}

TEST_CASE("sgd momentum with mu = 0 is a plain gradient step") {
    ParamBlock block{"x", Eigen::MatrixXd::Constant(1, 1, 2.0)};
    MomentumState state;
    sgd_momentum_step(block, state, Eigen::MatrixXd::Constant(1, 1, 0.5), 0.1, 0.0);
    CHECK(block.values(0, 0) == doctest::Approx(2.0 - 0.05));
}

TEST_CASE("sgd momentum displacement approaches lr * g / (1 - mu)") {
    ParamBlock block{"x", Eigen::MatrixXd::Zero(1, 1)};
    MomentumState state;
    const double lr = 0.01, mu = 0.9, g = 2.0;
    double prev = 0.0;
    double displacement = 0.0;
    for (int k = 0; k < 300; ++k) {
        sgd_momentum_step(block, state, Eigen::MatrixXd::Constant(1, 1, g), lr, mu);
        displacement = block.values(0, 0) - prev;
        prev = block.values(0, 0);
    }
    CHECK(displacement == doctest::Approx(-lr * g / (1.0 - mu)).epsilon(1e-6));
}

TEST_CASE("sgd momentum no-op on zero gradient and velocity") {
    ParamBlock block{"x", Eigen::MatrixXd::Constant(3, 1, 0.7)};
    const Eigen::MatrixXd before = block.values;
    MomentumState state;
    sgd_momentum_step(block, state, Eigen::MatrixXd::Zero(3, 1), 0.1, 0.9);
    CHECK(block.values == before);
}

TEST_CASE("optimizer wrappers are shape preserving and deterministic") {
    auto run = [](Optimizer& opt) {
        std::vector<ParamBlock> blocks{{"a", Eigen::MatrixXd::Zero(4, 2)}};
        std::vector<Eigen::MatrixXd> grads{Eigen::MatrixXd::Constant(4, 2, 0.3)};
        for (int k = 0; k < 5; ++k) opt.step(blocks, grads);
        return blocks[0].values;
    };
    AdamOptimizer adam_a(1e-2), adam_b(1e-2);
    CHECK(run(adam_a) == run(adam_b));
    SgdMomentumOptimizer sgd_a(1e-2), sgd_b(1e-2);
    CHECK(run(sgd_a) == run(sgd_b));
}
