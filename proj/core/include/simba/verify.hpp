#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "simba/linalg.hpp"
#include "simba/optimizer.hpp"
#include "simba/problems.hpp"
#include "simba/restriction.hpp"

namespace simba {

// Every constant of the coarse- and fine-step linear-rate guarantees.
//   c_hat = 1 - xi^4 m mu / (omega^4 M L)    (coarse steps)
//   c     = 1 - m mu / (M L)                 (fine steps)
// For valid inputs 0 < c <= c_hat < 1: the fine rate is the faster one,
// since xi never exceeds omega.
struct RateCertificate {
    double mu = 0.0;
    double lipschitz = 0.0;  // L
    double floor_m = 0.0;    // m
    double bound_M = 0.0;    // realized upper bound on the floored operator
    double xi = 0.0;
    double omega = 0.0;
    double c_hat = 0.0;
    double c = 0.0;
    double k_hat = 0.0;  // iteration bound for the coarse rate
    double k = 0.0;      // iteration bound for the fine rate
};

struct ContractionReport {
    std::vector<double> ratios;  // (f_{k+1} - f*) / (f_k - f*)
    double worst_ratio = 0.0;
    long violation_count = 0;
    double fitted_slope = 0.0;  // least-squares slope of log(f_k - f*)
};

// Step size prescribed for always-coarse sequences: xi^2 m / (L sqrt(M) omega^4).
double theoretical_step_coarse(double xi, double m, double lipschitz, double bound_m, double omega);

// Step size prescribed for fine-only sequences: m / (L sqrt(M)).
double theoretical_step_fine(double m, double lipschitz, double bound_m);

// Builds the certificate; gap0 = f(x0) - f*, eps the target accuracy.
RateCertificate rate_constants(double mu, double lipschitz, double m, double bound_m, double xi,
                               double omega, double gap0, double eps);

// Preconditioned gradient norm sqrt(grad^T P Q^{-1/2} R grad). Also checks
// the identity lambda^2 = -<grad, d> against the realized direction and
// throws on numerical inconsistency beyond 1e-10.
double lambda_hat(const Eigen::VectorXd& grad, const RestrictionOp& r, const Preconditioner& p);

// Flags every iteration whose per-step ratio exceeds factor + 1e-12. Ratios
// are recorded only while the gap stays above the 1e-14 numerical floor.
ContractionReport check_contraction(const std::vector<double>& trace, double f_star,
                                    double factor);

// Central finite differences of f at x, one coordinate at a time.
Eigen::VectorXd finite_diff_grad(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h = 1e-5);

// Compares analytic batch gradients against central differences on a random
// coordinate subset per block (at least min_coords when a block is larger).
// Returns the worst relative error over the sampled coordinates.
double max_gradient_error(const Problem& problem, const std::vector<ParamBlock>& blocks,
                          std::span<const Eigen::Index> batch, double h, Eigen::Index min_coords,
                          Rng& rng);

// ---------------------------------------------------------------------------
// Instrumented theorem check

enum class VerifyMode { Guarded, AlwaysCoarse, AlwaysFine };

struct TheoremCheckConfig {
    long iterations = 300;
    double eps_fraction = 1e-6;    // target accuracy as a fraction of the initial gap
    std::uint64_t seed = 0;
    VerifyMode mode = VerifyMode::Guarded;
    HyperParams hp;                       // floor/rank/fraction/guard settings
    InitKind init = InitKind::Zero;
    std::optional<double> factor_override;  // replaces c_hat and c when flagging
};

struct IterationRecord {
    long iteration = 0;
    double objective = 0.0;       // f(x_k), before the step
    double grad_norm = 0.0;
    double restricted_ratio = 0.0;  // ||R grad|| / ||grad||
    double top_floored = 0.0;       // max(lambda_1, m) of this step's operator
    StepKind kind = StepKind::Coarse;
};

struct TheoremCheckResult {
    RateCertificate certificate;
    ContractionReport coarse_report;
    ContractionReport fine_report;
    std::vector<IterationRecord> records;
    double final_objective = 0.0;
    double initial_gap = 0.0;
    double step_coarse = 0.0;
    double step_fine = 0.0;
    long coarse_steps = 0;
    long fine_steps = 0;
    long observed_to_eps = -1;  // first iteration at which the gap fell below eps, or -1
    bool k_bound_ok = false;
    bool passed = false;

    long violations() const {
        return coarse_report.violation_count + fine_report.violation_count;
    }
};

// Runs the prescribed sequence on a problem with known (mu, L, f*) and checks
// the per-iteration contraction at the realized constants. The step size
// depends on constants that are only observable a posteriori, so a probe pass
// realizes (M, xi) first and the certified pass re-runs with the matching
// theoretical step from the same seed.
TheoremCheckResult check_theorem_rates(const QuadraticProblem& problem,
                                       const TheoremCheckConfig& config);

}  // namespace simba
