#pragma once

#include <vector>

#include <Eigen/Core>

#include "simba/random.hpp"

namespace simba {

// Row-sampling restriction: a sorted subset of row indices of the identity.
// The prolongation is its transpose, so both have unit spectral norm.
struct RestrictionOp {
    Eigen::Index source_dim = 0;           // q
    std::vector<Eigen::Index> indices;     // strictly increasing, in [0, q)

    Eigen::Index coarse_dim() const { return static_cast<Eigen::Index>(indices.size()); }
    bool is_identity() const { return coarse_dim() == source_dim; }
};

// Uniform sample of n_coarse distinct rows out of q, sorted. Deterministic
// given the generator state.
RestrictionOp sample_restriction(Eigen::Index q, Eigen::Index n_coarse, Rng& rng);

RestrictionOp identity_restriction(Eigen::Index q);

// Row gather: out.row(i) = g.row(indices[i]).
Eigen::MatrixXd restrict_rows(const RestrictionOp& r, const Eigen::MatrixXd& g);

// Row scatter: out.row(indices[i]) = y.row(i), all other rows zero.
Eigen::MatrixXd prolong_rows(const RestrictionOp& r, const Eigen::MatrixXd& y);

// Effective-coarse-direction conditions: ||R G||_F > xi * ||G||_F and
// ||R G||_F > e, both strict. xi must lie in (0, 1), e must be positive.
bool guard(const RestrictionOp& r, const Eigen::MatrixXd& g, double xi, double e);

}  // namespace simba
