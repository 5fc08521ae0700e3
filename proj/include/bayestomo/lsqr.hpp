#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bayestomo/cholesky.hpp"
#include "bayestomo/sparse.hpp"

namespace bayestomo {

/// Damped least-squares solution and its iteration record.
struct RidgeSolution {
    std::vector<double> beta;
    double lambda = 0.0;             // damping parameter of the LSQR objective
    int iterations = 0;
    double residual_norm = 0.0;      // final damped residual norm
    bool converged = false;
    std::vector<double> residual_history; // nonincreasing by construction
};

/// LSQR (Paige-Saunders bidiagonalization) for the damped problem
///   min ||X b - y||^2 + lambda^2 ||b||^2.
/// Note the convention: `lambda` enters squared here, while the normal
/// equations (X'X + mu I) b = X'y use mu = lambda^2; modified_ridge below
/// takes mu directly.
inline RidgeSolution lsqr(const SparseRowMatrix& x, std::span<const double> y, double lambda,
                          double tol = 1e-10, int max_iter = 500) {
    if (lambda < 0.0) throw std::invalid_argument("lsqr: lambda must be nonnegative");
    if (y.size() != static_cast<std::size_t>(x.rows()))
        throw std::invalid_argument("lsqr: dimension mismatch");
    const int n = x.cols();

    RidgeSolution sol;
    sol.lambda = lambda;
    sol.beta.assign(n, 0.0);

    auto norm2 = [](std::span<const double> v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        return std::sqrt(s);
    };

    std::vector<double> u(y.begin(), y.end());
    double beta_norm = norm2(u);
    if (beta_norm == 0.0) {
        sol.converged = true;
        return sol; // y = 0 -> b = 0
    }
    for (double& v : u) v /= beta_norm;

    std::vector<double> v = x.apply_transpose(u);
    double alpha = norm2(v);
    if (alpha == 0.0) {
        sol.converged = true;
        sol.residual_norm = beta_norm;
        sol.residual_history.push_back(beta_norm);
        return sol; // X'y = 0 -> b = 0
    }
    for (double& w : v) w /= alpha;

    std::vector<double> w = v;
    double phibar = beta_norm;
    double rhobar = alpha;
    double prev_rnorm = phibar;
    double psi_sq_sum = 0.0; // rotated-out damping contributions

    for (int it = 1; it <= max_iter; ++it) {
        // next bidiagonalization step: u = X v - alpha u
        std::vector<double> xv = x.apply(v);
        for (int i = 0; i < x.rows(); ++i) u[i] = xv[i] - alpha * u[i];
        double beta_k = norm2(u);
        if (beta_k > 0.0)
            for (double& a : u) a /= beta_k;

        // eliminate the damping term with a first rotation
        double rhobar1 = std::sqrt(rhobar * rhobar + lambda * lambda);
        double c1 = rhobar / rhobar1;
        double s1 = lambda / rhobar1;
        double psi = s1 * phibar;
        phibar = c1 * phibar;

        // plane rotation zeroing beta_k
        double rho = std::sqrt(rhobar1 * rhobar1 + beta_k * beta_k);
        double c = rhobar1 / rho;
        double s = beta_k / rho;
        double phi = c * phibar;
        phibar = s * phibar;

        for (int j = 0; j < n; ++j) sol.beta[j] += (phi / rho) * w[j];

        // v = X'u - beta_k v
        std::vector<double> xtu = x.apply_transpose(u);
        for (int j = 0; j < n; ++j) v[j] = xtu[j] - beta_k * v[j];
        alpha = norm2(v);
        if (alpha > 0.0)
            for (double& a : v) a /= alpha;
        double theta = s * alpha;
        rhobar = -c * alpha;
        for (int j = 0; j < n; ++j) w[j] = v[j] - (theta / rho) * w[j];

        // damped residual norm accumulates the rotated-out pieces
        psi_sq_sum += psi * psi;
        double rnorm = std::sqrt(phibar * phibar + psi_sq_sum);
        sol.residual_history.push_back(rnorm);
        sol.iterations = it;
        sol.residual_norm = rnorm;
        if (std::abs(prev_rnorm - rnorm) <= tol * prev_rnorm || alpha == 0.0 || beta_k == 0.0) {
            sol.converged = true;
            break;
        }
        prev_rnorm = rnorm;
    }
    return sol;
}

/// Modified ridge estimator (X'X + mu I)^-1 (X'y + mu beta0), solved
/// exactly with the sparse Cholesky machinery.
inline std::vector<double> modified_ridge(const SparseRowMatrix& x, std::span<const double> y,
                                          double mu, std::span<const double> beta0) {
    if (mu < 0.0) throw std::invalid_argument("modified_ridge: mu must be nonnegative");
    if (y.size() != static_cast<std::size_t>(x.rows()) ||
        beta0.size() != static_cast<std::size_t>(x.cols()))
        throw std::invalid_argument("modified_ridge: dimension mismatch");
    SparseSymMatrix normal = x.normal_matrix();
    std::vector<Triplet> t;
    t.reserve(normal.nnz_lower() + x.cols());
    normal.for_each_lower([&](int i, int j, double v) { t.push_back({i, j, v}); });
    for (int j = 0; j < x.cols(); ++j) t.push_back({j, j, mu});
    SparseSymMatrix lhs = SparseSymMatrix::from_triplets(x.cols(), t);

    std::vector<double> rhs = x.apply_transpose(y);
    for (int j = 0; j < x.cols(); ++j) rhs[j] += mu * beta0[j];

    SparseCholesky chol(lhs); // throws NotPositiveDefinite on a singular system
    return chol.solve(rhs);
}

} // namespace bayestomo
