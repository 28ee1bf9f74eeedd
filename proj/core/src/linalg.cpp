#include "simba/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace simba {

namespace {

void require_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

// First nonzero component of each column made positive, for reproducible
// comparisons between eigendecomposition routes.
void normalize_signs(Eigen::MatrixXd& vecs) {
    for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
        const double scale = vecs.col(j).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
            const double v = vecs(i, j);
            if (std::abs(v) > 1e-12 * scale) {
                if (v < 0.0) vecs.col(j) = -vecs.col(j);
                break;
            }
        }
    }
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
    return q;
}

// Extends `taken` (orthonormal, dim x p) with extra orthonormal columns so
// rank-deficient Gram matrices still yield the full k pairs requested; the
// padded directions carry eigenvalue zero.
Eigen::MatrixXd pad_orthonormal(const Eigen::MatrixXd& taken, Eigen::Index want, Rng& rng) {
    const Eigen::Index dim = taken.rows();
    const Eigen::Index have = taken.cols();
    if (have >= want) return taken.leftCols(want);
    Eigen::MatrixXd stacked(dim, want);
    stacked.leftCols(have) = taken;
    stacked.rightCols(want - have) = gaussian_matrix(dim, want - have, rng);
    Eigen::MatrixXd q = orthonormalize(stacked);
    q.leftCols(have) = taken;  // QR may flip signs of the leading block
    return q;
}

TruncatedSpectrum truncate(const TruncatedSpectrum& full, Eigen::Index k) {
    TruncatedSpectrum out;
    out.eigvals = full.eigvals.head(k);
    out.eigvecs = full.eigvecs.leftCols(k);
    out.source_dim = full.source_dim;
    return out;
}

}  // namespace

TruncatedSpectrum sym_eig_dense(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("sym_eig_dense: matrix not square");
    require_finite(a, "sym_eig_dense");
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0.0 && asym > 1e-12 * scale)
        throw std::invalid_argument("sym_eig_dense: matrix not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("sym_eig_dense: eigendecomposition failed");

    const Eigen::Index n = a.rows();
    TruncatedSpectrum spec;
    spec.source_dim = n;
    spec.eigvals = solver.eigenvalues().reverse();
    spec.eigvecs = solver.eigenvectors().rowwise().reverse();
    normalize_signs(spec.eigvecs);
    return spec;
}

TruncatedSpectrum randomized_truncated_eig(const Eigen::MatrixXd& g, Eigen::Index k,
                                           Eigen::Index oversample, int power_iters, Rng& rng) {
    const Eigen::Index n = g.rows();
    const Eigen::Index d = g.cols();
    if (k < 1 || k > n) throw std::invalid_argument("randomized_truncated_eig: k out of range");
    if (oversample < 0 || power_iters < 0)
        throw std::invalid_argument("randomized_truncated_eig: negative parameter");
    require_finite(g, "randomized_truncated_eig");

    // Degenerate all-zero input: every eigenvalue is zero, any orthonormal
    // basis will do.
    if (g.cwiseAbs().maxCoeff() == 0.0) {
        TruncatedSpectrum spec;
        spec.source_dim = n;
        spec.eigvals = Eigen::VectorXd::Zero(k);
        spec.eigvecs = Eigen::MatrixXd::Identity(n, k);
        return spec;
    }

    // Sketching below the full dimension is meaningless; use the exact path.
    if (k + oversample >= n) {
        Eigen::MatrixXd q = g * g.transpose();
        q = 0.5 * (q + q.transpose());
        TruncatedSpectrum spec = truncate(sym_eig_dense(q), k);
        spec.eigvals = spec.eigvals.cwiseMax(0.0);  // PSD by construction
        return spec;
    }

    const Eigen::Index sketch = k + oversample;
    TruncatedSpectrum spec;
    spec.source_dim = n;

    if (d < n) {
        // Work with G itself: singular pairs of G give eigenpairs of G G^T.
        Eigen::MatrixXd z = orthonormalize(g * gaussian_matrix(d, sketch, rng));
        for (int it = 0; it < power_iters; ++it)
            z = orthonormalize(g * (g.transpose() * z));
        Eigen::MatrixXd b = z.transpose() * g;  // sketch x d
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
        const Eigen::Index avail = std::min<Eigen::Index>(k, svd.singularValues().size());
        Eigen::MatrixXd u = z * svd.matrixU().leftCols(avail);
        spec.eigvecs = pad_orthonormal(u, k, rng);
        spec.eigvals = Eigen::VectorXd::Zero(k);
        spec.eigvals.head(avail) = svd.singularValues().head(avail).array().square();
    } else {
        // Wide blocks: the Gram matrix is no larger than G, form it once.
        Eigen::MatrixXd q = g * g.transpose();
        q = 0.5 * (q + q.transpose());
        Eigen::MatrixXd z = orthonormalize(q * gaussian_matrix(n, sketch, rng));
        for (int it = 0; it < power_iters; ++it) z = orthonormalize(q * z);
        Eigen::MatrixXd small = z.transpose() * q * z;
        small = 0.5 * (small + small.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("randomized_truncated_eig: Rayleigh-Ritz step failed");
        spec.eigvals = solver.eigenvalues().reverse().head(k);
        spec.eigvecs = z * solver.eigenvectors().rowwise().reverse().leftCols(k);
    }

    spec.eigvals = spec.eigvals.cwiseMax(0.0);  // Q is PSD; negatives are round-off
    normalize_signs(spec.eigvecs);
    return spec;
}

Eigen::VectorXd floor_eigenvalues(const Eigen::VectorXd& eigvals, double m) {
    if (!(m > 0.0)) throw std::invalid_argument("floor_eigenvalues: floor must be positive");
    return eigvals.cwiseMax(m);
}

Preconditioner build_inverse_sqrt(const TruncatedSpectrum& spectrum, double m) {
    if (!(m > 0.0)) throw std::invalid_argument("build_inverse_sqrt: floor must be positive");
    const Eigen::Index kept = spectrum.count();
    if (kept < 1) throw std::invalid_argument("build_inverse_sqrt: empty spectrum");

    const Eigen::VectorXd floored = floor_eigenvalues(spectrum.eigvals, m);
    const Eigen::Index r = kept - 1;

    Preconditioner p;
    p.dim = spectrum.source_dim;
    p.floor_m = m;
    p.fill = 1.0 / std::sqrt(floored[r]);
    p.basis = spectrum.eigvecs.leftCols(r);
    p.correction = (floored.head(r).array().rsqrt() - p.fill).matrix();
    return p;
}

Eigen::MatrixXd apply_preconditioner(const Preconditioner& p, const Eigen::MatrixXd& v) {
    if (v.rows() != p.dim)
        throw std::invalid_argument("apply_preconditioner: row dimension mismatch");
    if (p.rank_kept() == 0) return p.fill * v;
    return p.fill * v +
           p.basis * (p.correction.asDiagonal() * (p.basis.transpose() * v));
}

Eigen::MatrixXd materialize_preconditioner(const Preconditioner& p) {
    Eigen::MatrixXd op = p.fill * Eigen::MatrixXd::Identity(p.dim, p.dim);
    if (p.rank_kept() > 0)
        op += p.basis * p.correction.asDiagonal() * p.basis.transpose();
    return op;
}

}  // namespace simba
