#include "simba/baselines.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace simba {

namespace {

using Clock = std::chrono::steady_clock;

void require_grad(const ParamBlock& block, const Eigen::MatrixXd& grad, const char* what) {
    if (!grad.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite gradient");
    if (grad.rows() != block.rows() || grad.cols() != block.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

void adam_step(ParamBlock& block, AdamState& state, const Eigen::MatrixXd& grad, double lr,
               double beta1, double beta2, double eps) {
    require_grad(block, grad, "adam_step");
    if (state.m.size() == 0) {
        state.m = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
        state.v = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
    }
    ++state.step_count;
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);

    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step_count));
    const Eigen::MatrixXd m_hat = state.m / bc1;
    const Eigen::MatrixXd v_hat = state.v / bc2;

    block.values -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
}

void sgd_momentum_step(ParamBlock& block, MomentumState& state, const Eigen::MatrixXd& grad,
                       double lr, double mu) {
    require_grad(block, grad, "sgd_momentum_step");
    if (state.velocity.size() == 0)
        state.velocity = Eigen::MatrixXd::Zero(grad.rows(), grad.cols());
    state.velocity = mu * state.velocity + grad;
    block.values -= lr * state.velocity;
}

std::vector<StepReport> AdamOptimizer::step(std::vector<ParamBlock>& blocks,
                                            const std::vector<Eigen::MatrixXd>& grads) {
    if (blocks.size() != grads.size())
        throw std::invalid_argument("AdamOptimizer::step: one gradient per block required");
    std::vector<StepReport> reports;
    reports.reserve(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto started = Clock::now();
        adam_step(blocks[i], states_[blocks[i].id], grads[i], lr_, beta1_, beta2_, eps_);
        StepReport report;
        report.block_id = blocks[i].id;
        report.kind = StepKind::Fine;
        report.ema_norm = states_[blocks[i].id].m.norm();
        report.coarse_norm = report.ema_norm;
        report.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<StepReport> SgdMomentumOptimizer::step(std::vector<ParamBlock>& blocks,
                                                   const std::vector<Eigen::MatrixXd>& grads) {
    if (blocks.size() != grads.size())
        throw std::invalid_argument("SgdMomentumOptimizer::step: one gradient per block required");
    std::vector<StepReport> reports;
    reports.reserve(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto started = Clock::now();
        sgd_momentum_step(blocks[i], states_[blocks[i].id], grads[i], lr_, mu_);
        StepReport report;
        report.block_id = blocks[i].id;
        report.kind = StepKind::Fine;
        report.ema_norm = states_[blocks[i].id].velocity.norm();
        report.coarse_norm = report.ema_norm;
        report.seconds = std::chrono::duration<double>(Clock::now() - started).count();
        reports.push_back(std::move(report));
    }
    return reports;
}

}  // namespace simba
