#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "kerodeepc/datagen.hpp"
#include "kerodeepc/numerics.hpp"
#include "kerodeepc/plant.hpp"

namespace kerodeepc::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
    return random_matrix(n, 1, rng, scale).col(0);
}

/// B·Bᵀ + shift·I, well conditioned for small shifts of order one.
inline Matrix random_spd(Index n, std::mt19937_64& rng, double shift = 1.0) {
    const Matrix b = random_matrix(n, n, rng);
    return b * b.transpose() + shift * Matrix::Identity(n, n);
}

/// Entry-by-entry Kronecker product, independent of the library routine.
inline Matrix kron_loops(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            for (Index k = 0; k < b.rows(); ++k)
                for (Index l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

/// Small Van der Pol dataset: random initial states in a box, random input windows.
inline datagen::Dataset small_vdp_dataset(Index tu, Index tx, Index horizon, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    plant::VanDerPolPlant vdp;
    const Matrix x0 = random_matrix(2, tx, rng, 2.0);
    const Matrix u = random_matrix(horizon, tu, rng, 1.0);
    return datagen::generate_dataset(vdp, x0, u, horizon);
}

/// Membership in the convex hull of planar points (columns of `pts`), by
/// Andrew's monotone chain and half-plane tests with absolute slack `tol`.
inline bool in_convex_hull_2d(const Matrix& pts, const Eigen::Ref<const Vector>& q, double tol) {
    std::vector<std::pair<double, double>> p;
    for (Index j = 0; j < pts.cols(); ++j) p.emplace_back(pts(0, j), pts(1, j));
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() < 3) return false;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> h(2 * p.size());
    size_t k = 0;
    for (size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    for (size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    h.resize(k - 1);
    const std::pair<double, double> qq{q(0), q(1)};
    for (size_t i = 0; i < h.size(); ++i) {
        const auto& a = h[i];
        const auto& b = h[(i + 1) % h.size()];
        const double len = std::hypot(b.first - a.first, b.second - a.second);
        if (cross(a, b, qq) / len < -tol) return false;
    }
    return true;
}

}  // namespace kerodeepc::testing
