#include "simba/restriction.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace simba {

RestrictionOp sample_restriction(Eigen::Index q, Eigen::Index n_coarse, Rng& rng) {
    if (n_coarse < 1 || n_coarse > q)
        throw std::invalid_argument("sample_restriction: need 1 <= n_coarse <= q");

    // Partial Fisher-Yates: exact uniform sampling without replacement.
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(q));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < n_coarse; ++i) {
        std::uniform_int_distribution<Eigen::Index> pick(i, q - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    pool.resize(static_cast<std::size_t>(n_coarse));
    std::sort(pool.begin(), pool.end());

    return RestrictionOp{q, std::move(pool)};
}

RestrictionOp identity_restriction(Eigen::Index q) {
    RestrictionOp r;
    r.source_dim = q;
    r.indices.resize(static_cast<std::size_t>(q));
    std::iota(r.indices.begin(), r.indices.end(), Eigen::Index{0});
    return r;
}

Eigen::MatrixXd restrict_rows(const RestrictionOp& r, const Eigen::MatrixXd& g) {
    if (g.rows() != r.source_dim)
        throw std::invalid_argument("restrict_rows: row dimension mismatch");
    Eigen::MatrixXd out(r.coarse_dim(), g.cols());
    for (Eigen::Index i = 0; i < r.coarse_dim(); ++i)
        out.row(i) = g.row(r.indices[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::MatrixXd prolong_rows(const RestrictionOp& r, const Eigen::MatrixXd& y) {
    if (y.rows() != r.coarse_dim())
        throw std::invalid_argument("prolong_rows: row dimension mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r.source_dim, y.cols());
    for (Eigen::Index i = 0; i < r.coarse_dim(); ++i)
        out.row(r.indices[static_cast<std::size_t>(i)]) = y.row(i);
    return out;
}

bool guard(const RestrictionOp& r, const Eigen::MatrixXd& g, double xi, double e) {
    if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("guard: xi must lie in (0, 1)");
    if (!(e > 0.0)) throw std::invalid_argument("guard: e must be positive");
    const double restricted = restrict_rows(r, g).norm();
    return restricted > xi * g.norm() && restricted > e;
}

}  // namespace simba
