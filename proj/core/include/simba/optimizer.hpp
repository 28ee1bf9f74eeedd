#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "simba/linalg.hpp"
#include "simba/random.hpp"
#include "simba/restriction.hpp"

namespace simba {

// One decoupled parameter tensor (a layer), stored as a q x d matrix.
// Vectors are q x 1.
struct ParamBlock {
    std::string id;
    Eigen::MatrixXd values;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

// Per-block EMA gradient accumulator, initialized to zero.
struct EmaState {
    Eigen::MatrixXd g;
    long step_count = 0;
};

struct HyperParams {
    double step_size = 1e-2;
    double momentum = 0.9;          // beta; no bias correction anywhere
    int rank = 20;                  // r: eigenpairs kept beyond the fill slot
    double coarse_fraction = 0.5;   // n_coarse = ceil(fraction * q)
    double floor = 1e-8;            // m: eigenvalue floor
    double guard_xi = 0.1;
    double guard_e = 1e-12;
    Eigen::Index oversample = 10;
    int power_iters = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class StepKind { Coarse, Fine };

enum class StepMode { AlwaysCoarse, Guarded };

struct StepReport {
    std::string block_id;
    StepKind kind = StepKind::Coarse;
    double ema_norm = 0.0;          // ||G_k||_F
    double coarse_norm = 0.0;       // ||R G_k||_F
    double top_eigenvalue = 0.0;    // largest kept eigenvalue, before flooring
    int floored_count = 0;          // eigenvalues among the kept r+1 below the floor
    double seconds = 0.0;
};

// G <- beta * G + grad. Follows the accumulator recursion literally: no
// (1 - beta) scaling, no bias correction.
void ema_update(EmaState& state, const Eigen::MatrixXd& grad, double beta);

// One preconditioned update restricted to a freshly drawn row sample.
// Only sampled rows of the block change. The restriction is drawn from rng;
// blocks of q <= r+1 rows skip sampling and take the dense full-row path.
StepReport coarse_step(ParamBlock& block, const EmaState& state, const HyperParams& hp, Rng& rng);

// As coarse_step but with a caller-supplied restriction (used by guarded
// scheduling, which needs the sample before deciding the step kind).
StepReport coarse_step(ParamBlock& block, const EmaState& state, const HyperParams& hp,
                       const RestrictionOp& r, Rng& rng);

// Full-space step: identical pipeline with the identity restriction.
StepReport fine_step(ParamBlock& block, const EmaState& state, const HyperParams& hp, Rng& rng);

// Common interface so the bench runner can drive any update rule.
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual std::vector<StepReport> step(std::vector<ParamBlock>& blocks,
                                         const std::vector<Eigen::MatrixXd>& grads) = 0;
    virtual void set_step_size(double t) = 0;
    virtual std::string name() const = 0;
};

// Per-block EMA accumulation followed by a coarse step, or by the fine
// fallback when guarded scheduling rejects the sampled direction. Each block
// owns an RNG stream derived from the master seed and the block id, so block
// updates are independent and the trajectory is reproducible.
class SimbaOptimizer final : public Optimizer {
public:
    explicit SimbaOptimizer(HyperParams hp, StepMode mode = StepMode::AlwaysCoarse);

    std::vector<StepReport> step(std::vector<ParamBlock>& blocks,
                                 const std::vector<Eigen::MatrixXd>& grads) override;
    void set_step_size(double t) override { hp_.step_size = t; }
    std::string name() const override { return "simba"; }

    const HyperParams& hyper_params() const { return hp_; }
    StepMode mode() const { return mode_; }
    const EmaState& state(const std::string& block_id) const;

private:
    HyperParams hp_;
    StepMode mode_;
    std::map<std::string, EmaState> states_;
    std::map<std::string, Rng> rngs_;
};

}  // namespace simba
