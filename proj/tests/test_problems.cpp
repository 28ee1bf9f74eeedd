#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "simba/problems.hpp"
#include "simba/verify.hpp"

using namespace simba;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index n) {
    return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

}  // namespace

TEST_CASE("quadratic gradient vanishes at the minimizer") {
    Rng rng(3);
    const Eigen::VectorXd x_star = gaussian_matrix(12, 1, rng);
    QuadraticProblem problem(linspace(1.0, 10.0, 12), x_star, 5);
    CHECK(problem.gradient_at(x_star).cwiseAbs().maxCoeff() <= 1e-12);
    std::vector<ParamBlock> at_star{{"x", x_star}};
    CHECK(problem.loss(at_star) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("quadratic value along a principal direction is half lambda s^2") {
    Rng rng(7);
    const Eigen::VectorXd x_star = gaussian_matrix(10, 1, rng);
    QuadraticProblem problem(linspace(2.0, 50.0, 10), x_star, 11);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(problem.hessian());
    const double lambda_top = eig.eigenvalues().maxCoeff();
    const Eigen::VectorXd top = eig.eigenvectors().col(9);
    const double s = 0.37;
    std::vector<ParamBlock> blocks{{"x", x_star + s * top}};
    CHECK(problem.loss(blocks) == doctest::Approx(0.5 * lambda_top * s * s).epsilon(1e-10));
}

TEST_CASE("quadratic satisfies the two-sided curvature sandwich") {
    Rng rng(13);
    const Eigen::VectorXd x_star = gaussian_matrix(20, 1, rng);
    QuadraticProblem problem(linspace(1.0, 100.0, 20), x_star, 17);
    const auto info = problem.curvature();
    REQUIRE(info.has_value());
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd x = gaussian_matrix(20, 1, rng);
        std::vector<ParamBlock> blocks{{"x", x}};
        const double gap = problem.loss(blocks) - info->f_star;
        const double dist_sq = (x - x_star).squaredNorm();
        CHECK(gap >= 0.5 * info->mu * dist_sq - 1e-9);
        CHECK(gap <= 0.5 * info->strong_l * dist_sq + 1e-9);
    }
}

TEST_CASE("quadratic gradients match central differences") {
    Rng rng(19);
    const Eigen::VectorXd x_star = gaussian_matrix(8, 1, rng);
    QuadraticProblem problem(linspace(1.0, 5.0, 8), x_star, 23);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd x = gaussian_matrix(8, 1, rng);
        const auto f = [&](const Eigen::VectorXd& p) {
            std::vector<ParamBlock> blocks{{"x", p}};
            return problem.loss(blocks);
        };
        const Eigen::VectorXd fd = finite_diff_grad(f, x, 1e-5);
        const Eigen::VectorXd an = problem.gradient_at(x);
        CHECK((an - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
    }
}

TEST_CASE("quadratic rejects a flat or inverted spectrum") {
    Rng rng(29);
    const Eigen::VectorXd x_star = gaussian_matrix(4, 1, rng);
    CHECK_THROWS_AS(QuadraticProblem(Eigen::VectorXd::Constant(4, 2.0), x_star, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(QuadraticProblem(Eigen::VectorXd::Zero(4), x_star, 1), std::invalid_argument);
}

TEST_CASE("nlls at the origin predicts one half everywhere") {
    Dataset data;
    data.features = Eigen::MatrixXd::Random(10, 4);
    data.labels = Eigen::VectorXd::Zero(10);
    for (Eigen::Index i = 0; i < 10; ++i) data.labels[i] = i % 2 == 0 ? 1.0 : 0.0;
    NllsProblem problem(std::move(data));
    std::vector<ParamBlock> blocks = problem.initial_blocks(InitKind::Zero, 0);
    CHECK(problem.loss(blocks) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("nlls single-sample gradient follows the scalar chain rule") {
    Dataset data;
    data.features = Eigen::MatrixXd::Zero(1, 3);
    data.features(0, 0) = 1.0;  // a = e1
    data.labels = Eigen::VectorXd::Constant(1, 1.0);
    NllsProblem problem(std::move(data));
    std::vector<ParamBlock> blocks = problem.initial_blocks(InitKind::Zero, 0);
    CHECK(problem.loss(blocks) == doctest::Approx(0.25));

    std::vector<Eigen::MatrixXd> grads;
    problem.batch_gradient(blocks, {}, grads);
    // 2 (b - g) g (1 - g) at z = 0: 2 * 0.5 * 0.25 = 0.25 along e1
    CHECK(grads[0](0, 0) == doctest::Approx(0.25));
    CHECK(grads[0](1, 0) == doctest::Approx(0.0));

    const auto f = [&](const Eigen::VectorXd& p) {
        std::vector<ParamBlock> b{{"x", p}};
        return problem.loss(b);
    };
    const Eigen::VectorXd fd = finite_diff_grad(f, Eigen::VectorXd::Zero(3), 1e-5);
    CHECK((grads[0].col(0) - fd).norm() <= 1e-8);
}

TEST_CASE("nlls gradients match central differences on random data") {
    const Dataset data = synthetic_nlls(40, 12, 0.3, 7);
    NllsProblem problem(data);
    Rng rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<ParamBlock> blocks{{"x", gaussian_matrix(12, 1, rng)}};
        const double err = max_gradient_error(problem, blocks, {}, 1e-5, 50, rng);
        CHECK(err <= 1e-5);
    }
}

TEST_CASE("nlls loss is bounded by one for binary labels") {
    const Dataset data = synthetic_nlls(30, 8, 0.5, 11);
    NllsProblem problem(data);
    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<ParamBlock> blocks{{"x", 5.0 * gaussian_matrix(8, 1, rng)}};
        const double value = problem.loss(blocks);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
    }
}

TEST_CASE("the decreasing sigmoid saturates instead of overflowing") {
    CHECK(nlls_sigmoid(0.0) == doctest::Approx(0.5));
    CHECK(nlls_sigmoid(800.0) == doctest::Approx(0.0).epsilon(1e-300));
    CHECK(nlls_sigmoid(-800.0) == doctest::Approx(1.0));
    CHECK(std::isfinite(nlls_sigmoid(1e8)));
}

TEST_CASE("autoencoder at zero init predicts one half everywhere") {
    const Dataset data = synthetic_signals(16, 6, 3);
    MlpSpec spec;
    spec.widths = {6, 4, 2, 4, 6};
    AutoencoderProblem problem(spec, data);
    std::vector<ParamBlock> blocks = problem.initial_blocks(InitKind::Zero, 0);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 16; ++i)
        for (Eigen::Index j = 0; j < 6; ++j)
            expected += std::pow(0.5 - data.features(i, j), 2);
    expected /= 16.0;  // batch mean of per-sample squared error
    CHECK(problem.loss(blocks) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("autoencoder gradients match central differences on a small batch") {
    const Dataset data = synthetic_signals(8, 6, 5);
    MlpSpec spec;
    spec.widths = {6, 4, 2, 4, 6};
    AutoencoderProblem problem(spec, data);
    std::vector<ParamBlock> blocks = problem.initial_blocks(InitKind::Default, 9);
    const std::vector<Eigen::Index> batch{0, 2, 5, 7};
    Rng rng(41);
    const double err = max_gradient_error(problem, blocks, batch, 1e-5, 50, rng);
    CHECK(err <= 1e-4);
}

TEST_CASE("deep sigmoid nets exhibit the vanishing-gradient regime") {
    const Dataset data = synthetic_signals(32, 16, 13);
    MlpSpec spec;
    spec.widths = {16, 14, 12, 10, 8, 10, 12, 14, 16};  // 8 layers
    spec.init_scale = 0.5;
    AutoencoderProblem problem(spec, data);
    std::vector<ParamBlock> blocks = problem.initial_blocks(InitKind::Default, 7);
    const auto norms = problem.layer_gradient_norms(blocks, {});
    REQUIRE(norms.size() == 8);
    CHECK(norms.front() * 10.0 <= norms.back());
}

TEST_CASE("autoencoder validates shapes") {
    const Dataset data = synthetic_signals(4, 6, 1);
    MlpSpec bad;
    bad.widths = {6, 4, 6, 6};
    CHECK_THROWS_AS(AutoencoderProblem(bad, data), std::invalid_argument);
    MlpSpec mismatch;
    mismatch.widths = {8, 4, 8};
    CHECK_THROWS_AS(AutoencoderProblem(mismatch, data), std::invalid_argument);
}

TEST_CASE("libsvm parser reads sparse lines") {
    const auto path = temp_file("simba_parse_basic.libsvm");
    {
        std::ofstream out(path);
        out << "1 1:0.5 3:2\n";
    }
    const Dataset data = parse_libsvm(path.string(), 3);
    CHECK(data.labels[0] == 1.0);
    CHECK(data.features(0, 0) == 0.5);
    CHECK(data.features(0, 1) == 0.0);
    CHECK(data.features(0, 2) == 2.0);
    std::filesystem::remove(path);
}

TEST_CASE("libsvm parser remaps binary minus-one labels") {
    const auto path = temp_file("simba_parse_remap.libsvm");
    {
        std::ofstream out(path);
        out << "-1 2:1\n1 1:3\n";
    }
    const Dataset data = parse_libsvm(path.string());
    CHECK(data.labels[0] == 0.0);
    CHECK(data.labels[1] == 1.0);
    CHECK(data.features(0, 1) == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("libsvm write-parse round trip is exact") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset data = synthetic_nlls(20, 15, 0.2, seed);
        const auto path = temp_file("simba_roundtrip.libsvm");
        write_libsvm(path.string(), data);
        const Dataset back = parse_libsvm(path.string(), data.feature_count());
        CHECK(back.labels == data.labels);
        CHECK(back.features == data.features);
        std::filesystem::remove(path);
    }
}

TEST_CASE("libsvm parser reports the offending line") {
    const auto path = temp_file("simba_parse_bad.libsvm");
    {
        std::ofstream out(path);
        out << "1 1:0.5\n0 oops\n";
    }
    try {
        parse_libsvm(path.string());
        FAIL("expected a parse error");
    } catch (const std::runtime_error& err) {
        CHECK(std::string(err.what()).find("line 2") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("libsvm parser rejects an empty file") {
    const auto path = temp_file("simba_parse_empty.libsvm");
    std::ofstream(path).close();
    CHECK_THROWS_AS(parse_libsvm(path.string()), std::invalid_argument);
    std::filesystem::remove(path);
}

TEST_CASE("synthetic nlls data is deterministic and binary") {
    Eigen::VectorXd x_true;
    const Dataset a = synthetic_nlls(25, 10, 0.3, 99, &x_true);
    const Dataset b = synthetic_nlls(25, 10, 0.3, 99);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    for (Eigen::Index i = 0; i < a.labels.size(); ++i)
        CHECK((a.labels[i] == 0.0 || a.labels[i] == 1.0));

    // The planted parameters beat the x = 0 plateau.
    NllsProblem problem(a);
    std::vector<ParamBlock> blocks{{"x", x_true}};
    CHECK(problem.loss(blocks) < 0.25);
}

TEST_CASE("synthetic signals stay within the sigmoid range") {
    const Dataset data = synthetic_signals(64, 32, 21);
    CHECK(data.features.minCoeff() > 0.0);
    CHECK(data.features.maxCoeff() < 1.0);
    const Dataset again = synthetic_signals(64, 32, 21);
    CHECK(data.features == again.features);
}
