#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ranklens/matrix.hpp"
#include "ranklens/rng.hpp"

namespace ranklens {

/// Top-2 principal components of a point cloud, via deterministic power
/// iteration with deflation on the covariance matrix.
struct Pca2d {
    std::array<std::vector<double>, 2> components;  // orthonormal directions
    std::array<double, 2> eigenvalues{};            // covariance eigenvalues
    std::vector<double> mean;
    Matrix coordinates;  // n x 2 projections of the centered data
};

namespace detail {

inline std::vector<double> power_iterate(const Matrix& cov,
                                         const std::vector<double>* orthogonal_to,
                                         std::uint64_t seed, double* eigenvalue_out) {
    const std::size_t d = cov.rows;
    Rng rng(derive_seed(seed, 0x70636131ULL));
    std::vector<double> v(d);
    for (double& x : v) x = rng.gaussian();
    auto orthogonalize = [&](std::vector<double>& u) {
        if (!orthogonal_to) return;
        const double proj = dot(u, *orthogonal_to);
        for (std::size_t i = 0; i < d; ++i) u[i] -= proj * (*orthogonal_to)[i];
    };
    orthogonalize(v);
    double norm = l2_norm(v);
    if (norm == 0.0) {  // pathological draw; restart from a basis vector
        v.assign(d, 0.0);
        v[0] = 1.0;
        orthogonalize(v);
        norm = l2_norm(v);
    }
    if (norm == 0.0) {  // subspace exhausted (d == 1 with a constraint)
        *eigenvalue_out = 0.0;
        return std::vector<double>(d, 0.0);
    }
    for (double& x : v) x /= norm;

    for (std::size_t iter = 0; iter < 1000; ++iter) {
        std::vector<double> next(d, 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            const double* row = cov.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += row[j] * v[j];
            next[i] = s;
        }
        orthogonalize(next);
        const double next_norm = l2_norm(next);
        if (next_norm <= 1e-300) {
            // Effectively null operator in this subspace: any unit vector is
            // an eigenvector with eigenvalue 0.
            break;
        }
        for (double& x : next) x /= next_norm;
        double delta = 0.0;
        for (std::size_t i = 0; i < d; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
        v = std::move(next);
        if (delta < 1e-14) break;
    }
    // Rayleigh quotient for the eigenvalue.
    std::vector<double> cv(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double* row = cov.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += row[j] * v[j];
        cv[i] = s;
    }
    *eigenvalue_out = dot(v, cv);

    // Fix the sign so results do not depend on the iteration start: the
    // largest-magnitude entry is made positive.
    std::size_t arg = 0;
    for (std::size_t i = 1; i < d; ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0)
        for (double& x : v) x = -x;
    return v;
}

}  // namespace detail

/// 2-D PCA projection of the rows of `data` (n x d, n >= 3). Coordinates are
/// mean-centered projections onto the top two covariance eigenvectors.
inline Pca2d pca_project_2d(const Matrix& data, std::uint64_t seed = 0) {
    const std::size_t n = data.rows;
    const std::size_t d = data.cols;
    if (n < 3) throw std::invalid_argument("pca_project_2d: need at least 3 instances");
    if (d == 0) throw std::invalid_argument("pca_project_2d: empty feature dimension");

    Pca2d out;
    out.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out.mean[j] += data(i, j);
    for (double& m : out.mean) m /= static_cast<double>(n);

    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = data(i, j) - out.mean[j];

    Matrix cov(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t m = 0; m < n; ++m) s += centered(m, i) * centered(m, j);
            s /= static_cast<double>(n - 1);
            cov(i, j) = s;
            cov(j, i) = s;
        }
    }

    out.components[0] = detail::power_iterate(cov, nullptr, seed, &out.eigenvalues[0]);
    // Deflate and keep the second vector orthogonal to the first throughout.
    Matrix deflated = cov;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            deflated(i, j) -= out.eigenvalues[0] * out.components[0][i] * out.components[0][j];
    out.components[1] =
        detail::power_iterate(deflated, &out.components[0], seed + 1, &out.eigenvalues[1]);

    out.coordinates = Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = centered.row(i);
        for (std::size_t k = 0; k < 2; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += row[j] * out.components[k][j];
            out.coordinates(i, k) = s;
        }
    }
    return out;
}

}  // namespace ranklens
