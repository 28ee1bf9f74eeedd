#include "simba/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace simba {

namespace {

using Clock = std::chrono::steady_clock;

Eigen::Index coarse_dim_for(const HyperParams& hp, Eigen::Index q) {
    const auto n = static_cast<Eigen::Index>(std::ceil(hp.coarse_fraction * static_cast<double>(q)));
    return std::clamp<Eigen::Index>(n, 1, q);
}

// Shared pipeline: restrict, decompose, floor, assemble, update sampled rows.
StepReport preconditioned_update(ParamBlock& block, const EmaState& state, const HyperParams& hp,
                                 const RestrictionOp& r, StepKind kind, Rng& rng) {
    const auto started = Clock::now();

    StepReport report;
    report.block_id = block.id;
    report.kind = kind;
    report.ema_norm = state.g.norm();

    const Eigen::MatrixXd g_coarse = restrict_rows(r, state.g);
    report.coarse_norm = g_coarse.norm();

    // A zero accumulator yields a zero direction regardless of the
    // preconditioner; skip the decomposition and leave the block untouched.
    if (report.coarse_norm == 0.0) {
        report.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        return report;
    }

    const Eigen::Index n_coarse = r.coarse_dim();
    const Eigen::Index k = std::min<Eigen::Index>(hp.rank + 1, n_coarse);
    const TruncatedSpectrum spectrum =
        randomized_truncated_eig(g_coarse, k, hp.oversample, hp.power_iters, rng);
    report.top_eigenvalue = spectrum.eigvals.size() > 0 ? spectrum.eigvals[0] : 0.0;
    report.floored_count =
        static_cast<int>((spectrum.eigvals.array() < hp.floor).count());

    const Preconditioner precond = build_inverse_sqrt(spectrum, hp.floor);
    const Eigen::MatrixXd direction = apply_preconditioner(precond, g_coarse);

    // Scatter update: rows outside the sample are untouched this iteration.
    for (Eigen::Index i = 0; i < n_coarse; ++i)
        block.values.row(r.indices[static_cast<std::size_t>(i)]) -= hp.step_size * direction.row(i);

    report.seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return report;
}

}  // namespace

void HyperParams::validate() const {
    if (!(step_size > 0.0)) throw std::invalid_argument("HyperParams: step_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("HyperParams: momentum must lie in [0, 1)");
    if (rank < 1) throw std::invalid_argument("HyperParams: rank must be positive");
    if (!(coarse_fraction > 0.0 && coarse_fraction <= 1.0))
        throw std::invalid_argument("HyperParams: coarse_fraction must lie in (0, 1]");
    if (!(floor > 0.0)) throw std::invalid_argument("HyperParams: floor must be positive");
    if (!(guard_xi > 0.0 && guard_xi < 1.0))
        throw std::invalid_argument("HyperParams: guard_xi must lie in (0, 1)");
    if (!(guard_e > 0.0)) throw std::invalid_argument("HyperParams: guard_e must be positive");
    if (oversample < 0) throw std::invalid_argument("HyperParams: oversample must be nonnegative");
    if (power_iters < 0) throw std::invalid_argument("HyperParams: power_iters must be nonnegative");
}

void ema_update(EmaState& state, const Eigen::MatrixXd& grad, double beta) {
    if (!grad.allFinite()) throw std::invalid_argument("ema_update: non-finite gradient");
    if (state.g.size() == 0) state.g = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
    if (state.g.rows() != grad.rows() || state.g.cols() != grad.cols())
        throw std::invalid_argument("ema_update: shape mismatch");
    state.g = beta * state.g + grad;
    ++state.step_count;
}

StepReport coarse_step(ParamBlock& block, const EmaState& state, const HyperParams& hp, Rng& rng) {
    const Eigen::Index q = block.rows();
    // Sampling below the kept rank is meaningless; small blocks take the
    // dense full-row path. Full sampling also skips the draw so that a
    // coarse step at coarse_fraction = 1 consumes the same RNG stream as a
    // fine step.
    Eigen::Index n_coarse = coarse_dim_for(hp, q);
    if (q <= hp.rank + 1) n_coarse = q;
    const RestrictionOp r =
        n_coarse >= q ? identity_restriction(q) : sample_restriction(q, n_coarse, rng);
    return preconditioned_update(block, state, hp, r, StepKind::Coarse, rng);
}

StepReport coarse_step(ParamBlock& block, const EmaState& state, const HyperParams& hp,
                       const RestrictionOp& r, Rng& rng) {
    return preconditioned_update(block, state, hp, r, StepKind::Coarse, rng);
}

StepReport fine_step(ParamBlock& block, const EmaState& state, const HyperParams& hp, Rng& rng) {
    return preconditioned_update(block, state, hp, identity_restriction(block.rows()),
                                 StepKind::Fine, rng);
}

SimbaOptimizer::SimbaOptimizer(HyperParams hp, StepMode mode) : hp_(hp), mode_(mode) {
    hp_.validate();
}

const EmaState& SimbaOptimizer::state(const std::string& block_id) const {
    return states_.at(block_id);
}

std::vector<StepReport> SimbaOptimizer::step(std::vector<ParamBlock>& blocks,
                                             const std::vector<Eigen::MatrixXd>& grads) {
    if (blocks.size() != grads.size())
        throw std::invalid_argument("SimbaOptimizer::step: one gradient per block required");

    std::vector<StepReport> reports;
    reports.reserve(blocks.size());

    for (std::size_t i = 0; i < blocks.size(); ++i) {
        ParamBlock& block = blocks[i];
        auto [state_it, inserted] = states_.try_emplace(block.id);
        EmaState& state = state_it->second;
        auto rng_it = rngs_.find(block.id);
        if (rng_it == rngs_.end())
            rng_it = rngs_.emplace(block.id, make_block_rng(hp_.seed, block.id)).first;
        Rng& rng = rng_it->second;

        ema_update(state, grads[i], hp_.momentum);

        const Eigen::Index q = block.rows();
        Eigen::Index n_coarse = coarse_dim_for(hp_, q);
        if (q <= hp_.rank + 1) n_coarse = q;

        if (mode_ == StepMode::AlwaysCoarse) {
            const RestrictionOp r =
                n_coarse >= q ? identity_restriction(q) : sample_restriction(q, n_coarse, rng);
            reports.push_back(preconditioned_update(block, state, hp_, r, StepKind::Coarse, rng));
        } else {
            const RestrictionOp r =
                n_coarse >= q ? identity_restriction(q) : sample_restriction(q, n_coarse, rng);
            if (guard(r, state.g, hp_.guard_xi, hp_.guard_e)) {
                reports.push_back(preconditioned_update(block, state, hp_, r, StepKind::Coarse, rng));
            } else {
                reports.push_back(fine_step(block, state, hp_, rng));
            }
        }
    }
    return reports;
}

}  // namespace simba
