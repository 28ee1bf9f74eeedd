#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace simba {

using Rng = std::mt19937_64;

// FNV-1a, used to derive per-block RNG streams from (master seed, block id)
// without depending on std::hash's unspecified values.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline Rng make_block_rng(std::uint64_t master_seed, std::string_view block_id) {
    std::uint64_t h = fnv1a64(block_id);
    h ^= master_seed + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return Rng(h);
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = normal(rng);
    return m;
}

}  // namespace simba
