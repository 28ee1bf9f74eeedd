#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "simba/optimizer.hpp"
#include "simba/random.hpp"

namespace simba {

struct Dataset {
    Eigen::MatrixXd features;  // m x n, dense
    Eigen::VectorXd labels;    // length m

    Eigen::Index sample_count() const { return features.rows(); }
    Eigen::Index feature_count() const { return features.cols(); }
};

// Known curvature constants for problems that expose them (quadratics).
struct CurvatureInfo {
    double mu = 0.0;
    double strong_l = 0.0;  // Lipschitz constant of the gradient
    double f_star = 0.0;
};

enum class InitKind { Zero, Normal, Default };

// Differentiable objective over decoupled parameter blocks with analytic
// gradients. Gradient evaluation is pure; problems are immutable after
// construction.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::vector<ParamBlock> initial_blocks(InitKind kind, std::uint64_t seed) const = 0;

    // Full objective over all samples.
    virtual double loss(const std::vector<ParamBlock>& blocks) const = 0;

    // Mini-batch objective and gradient; `batch` holds sample indices.
    // Returns the batch loss and fills one gradient per block.
    virtual double batch_gradient(const std::vector<ParamBlock>& blocks,
                                  std::span<const Eigen::Index> batch,
                                  std::vector<Eigen::MatrixXd>& grads) const = 0;

    virtual Eigen::Index sample_count() const = 0;

    virtual std::optional<CurvatureInfo> curvature() const { return std::nullopt; }
};

// f(x) = 0.5 (x - x*)^T A (x - x*) with A built from the given spectrum
// under a random orthogonal basis. Exposes exact mu, L, f* = 0 and x*.
class QuadraticProblem final : public Problem {
public:
    QuadraticProblem(const Eigen::VectorXd& spectrum, const Eigen::VectorXd& x_star,
                     std::uint64_t seed);

    std::vector<ParamBlock> initial_blocks(InitKind kind, std::uint64_t seed) const override;
    double loss(const std::vector<ParamBlock>& blocks) const override;
    double batch_gradient(const std::vector<ParamBlock>& blocks,
                          std::span<const Eigen::Index> batch,
                          std::vector<Eigen::MatrixXd>& grads) const override;
    Eigen::Index sample_count() const override { return 1; }
    std::optional<CurvatureInfo> curvature() const override;

    const Eigen::VectorXd& x_star() const { return x_star_; }
    const Eigen::MatrixXd& hessian() const { return a_; }
    Eigen::VectorXd gradient_at(const Eigen::VectorXd& x) const { return a_ * (x - x_star_); }

private:
    Eigen::MatrixXd a_;
    Eigen::VectorXd x_star_;
    double mu_, l_;
};

// min (1/m) sum_i (b_i - g(a_i^T x))^2 with g(w) = 1 / (1 + exp(w)).
class NllsProblem final : public Problem {
public:
    explicit NllsProblem(Dataset data);

    std::vector<ParamBlock> initial_blocks(InitKind kind, std::uint64_t seed) const override;
    double loss(const std::vector<ParamBlock>& blocks) const override;
    double batch_gradient(const std::vector<ParamBlock>& blocks,
                          std::span<const Eigen::Index> batch,
                          std::vector<Eigen::MatrixXd>& grads) const override;
    Eigen::Index sample_count() const override { return data_.sample_count(); }

    const Dataset& data() const { return data_; }

private:
    Dataset data_;
};

enum class Activation { Sigmoid, Relu };

struct MlpSpec {
    std::vector<Eigen::Index> widths;  // encoder + mirrored decoder, ends match
    Activation activation = Activation::Sigmoid;
    double init_scale = 1.0;           // multiplier on the 1/sqrt(fan_in) init
    std::uint64_t seed = 0;

    void validate() const;
};

// Mean squared reconstruction loss of a fully connected autoencoder: the
// per-sample squared error averaged over the batch. Gradients by hand-rolled
// reverse accumulation, one ParamBlock per weight matrix and per bias vector.
class AutoencoderProblem final : public Problem {
public:
    AutoencoderProblem(MlpSpec spec, Dataset data);

    std::vector<ParamBlock> initial_blocks(InitKind kind, std::uint64_t seed) const override;
    double loss(const std::vector<ParamBlock>& blocks) const override;
    double batch_gradient(const std::vector<ParamBlock>& blocks,
                          std::span<const Eigen::Index> batch,
                          std::vector<Eigen::MatrixXd>& grads) const override;
    Eigen::Index sample_count() const override { return data_.sample_count(); }

    const MlpSpec& spec() const { return spec_; }
    Eigen::Index layer_count() const { return static_cast<Eigen::Index>(spec_.widths.size()) - 1; }

    // Per-layer gradient norms on a batch, ordered input-side first; used to
    // observe the vanishing-gradient regime directly.
    std::vector<double> layer_gradient_norms(const std::vector<ParamBlock>& blocks,
                                             std::span<const Eigen::Index> batch) const;

private:
    double forward_backward(const std::vector<ParamBlock>& blocks,
                            std::span<const Eigen::Index> batch,
                            std::vector<Eigen::MatrixXd>* grads) const;

    MlpSpec spec_;
    Dataset data_;
};

// LIBSVM sparse text format: per line `label idx:val idx:val ...` with
// 1-based indices. Binary labels {-1,+1} are remapped to {0,1}. The feature
// count is the largest index seen unless overridden.
Dataset parse_libsvm(const std::string& path, Eigen::Index feature_count = 0);

void write_libsvm(const std::string& path, const Dataset& data);

// Heavy-tailed sparse features with labels planted through the decreasing
// sigmoid at threshold 0.5. Deterministic per seed. The planted parameter
// vector is written to x_true when requested.
Dataset synthetic_nlls(Eigen::Index m, Eigen::Index n, double sparsity, std::uint64_t seed,
                       Eigen::VectorXd* x_true = nullptr);

// Smooth low-dimensional signals in (0, 1), suitable targets for a sigmoid
// autoencoder. Deterministic per seed.
Dataset synthetic_signals(Eigen::Index samples, Eigen::Index width, std::uint64_t seed);

// Numerically safe decreasing sigmoid g(w) = 1 / (1 + exp(w)).
double nlls_sigmoid(double w);

}  // namespace simba
