#pragma once

#include <Eigen/Core>

#include "simba/random.hpp"

namespace simba {

// Top eigenpairs of a symmetric PSD matrix, eigenvalues sorted descending.
// Holds exactly the r+1 pairs the preconditioner assembly consumes.
struct TruncatedSpectrum {
    Eigen::VectorXd eigvals;   // length r+1, descending, all >= 0
    Eigen::MatrixXd eigvecs;   // source_dim x (r+1), orthonormal columns
    Eigen::Index source_dim = 0;

    Eigen::Index count() const { return eigvals.size(); }
};

// Compact form of the inverse square root of a floored PSD operator:
//   op = fill * I + basis * diag(correction) * basis^T
// with fill = (max(lambda_{r+1}, m))^{-1/2} and
// correction[i] = (max(lambda_i, m))^{-1/2} - fill  (all <= 0).
struct Preconditioner {
    double fill = 0.0;
    Eigen::MatrixXd basis;       // dim x r, orthonormal columns
    Eigen::VectorXd correction;  // length r
    double floor_m = 0.0;
    Eigen::Index dim = 0;

    Eigen::Index rank_kept() const { return correction.size(); }
};

// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
// Exact path: backs the randomized route in tests and serves as the dense
// fallback for small operators. Throws std::invalid_argument if A is not
// finite or not symmetric to 1e-12 relative tolerance.
TruncatedSpectrum sym_eig_dense(const Eigen::MatrixXd& a);

// Top-k eigenpairs of Q = G G^T without requiring Q explicitly.
// Subspace iteration with a Gaussian test matrix; operates on G directly
// when G has fewer columns than rows, otherwise on the explicitly formed
// Gram matrix. Falls back to the dense path when k + oversample reaches the
// dimension. Eigenvalues are clamped to [0, inf); eigenvector signs are
// normalized so the first nonzero component is positive.
TruncatedSpectrum randomized_truncated_eig(const Eigen::MatrixXd& g, Eigen::Index k,
                                           Eigen::Index oversample, int power_iters, Rng& rng);

// Elementwise max(eigvals, m), input assumed descending. m must be > 0.
Eigen::VectorXd floor_eigenvalues(const Eigen::VectorXd& eigvals, double m);

// Assembles the compact inverse square root from r+1 eigenpairs: the last
// eigenvalue (floored) provides the fill for the unrepresented subspace,
// the first r get individual inverse-sqrt corrections.
Preconditioner build_inverse_sqrt(const TruncatedSpectrum& spectrum, double m);

// op * V in O(r * dim * cols); the dense operator is never materialized.
Eigen::MatrixXd apply_preconditioner(const Preconditioner& p, const Eigen::MatrixXd& v);

// Dense realization of the operator, for tests and small problems only.
Eigen::MatrixXd materialize_preconditioner(const Preconditioner& p);

}  // namespace simba
