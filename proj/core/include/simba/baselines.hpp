#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "simba/optimizer.hpp"

namespace simba {

struct AdamState {
    Eigen::MatrixXd m;  // first moment
    Eigen::MatrixXd v;  // second moment
    long step_count = 0;
};

struct MomentumState {
    Eigen::MatrixXd velocity;
};

// Standard bias-corrected Adam update.
void adam_step(ParamBlock& block, AdamState& state, const Eigen::MatrixXd& grad, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// v <- mu * v + grad; x <- x - lr * v.
void sgd_momentum_step(ParamBlock& block, MomentumState& state, const Eigen::MatrixXd& grad,
                       double lr, double mu = 0.9);

class AdamOptimizer final : public Optimizer {
public:
    AdamOptimizer(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    std::vector<StepReport> step(std::vector<ParamBlock>& blocks,
                                 const std::vector<Eigen::MatrixXd>& grads) override;
    void set_step_size(double t) override { lr_ = t; }
    std::string name() const override { return "adam"; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::map<std::string, AdamState> states_;
};

class SgdMomentumOptimizer final : public Optimizer {
public:
    SgdMomentumOptimizer(double lr = 1e-2, double mu = 0.9) : lr_(lr), mu_(mu) {}

    std::vector<StepReport> step(std::vector<ParamBlock>& blocks,
                                 const std::vector<Eigen::MatrixXd>& grads) override;
    void set_step_size(double t) override { lr_ = t; }
    std::string name() const override { return "sgd_momentum"; }

private:
    double lr_, mu_;
    std::map<std::string, MomentumState> states_;
};

}  // namespace simba
