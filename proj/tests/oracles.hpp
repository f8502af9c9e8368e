#pragma once

// Test-only oracles: small dense linear algebra plus the exact joint
// density of the model, assembled independently of the library's
// tridiagonal / spectral code paths.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hiddenprice/types.hpp"

namespace oracle {

/// Exact minus-log joint density of both innovation sequences, given the
/// observed and hidden paths.  Written straight from the per-step bivariate
/// normal; the only shared ingredient with the library is the model itself.
inline double joint_minus_log(const std::vector<double>& hidden,
                              const std::vector<double>& observed,
                              const hiddenprice::ModelParams& p) {
    const double dt = p.dt;
    const double mu0 = p.a - p.sigma * p.sigma / 2;
    double acc = 0.0;
    std::size_t M = observed.size() - 1;
    for (std::size_t j = 0; j < M; ++j) {
        double A = hidden[j + 1] - hidden[j] - mu0 * dt;
        double B = observed[j + 1] - observed[j] +
                   p.k * (observed[j] - hidden[j]) * dt +
                   p.sigma_prime * p.sigma_prime * dt / 2;
        acc += (A * A / (p.sigma * p.sigma) + B * B / (p.sigma_prime * p.sigma_prime) -
                2 * p.rho * A * B / (p.sigma * p.sigma_prime)) /
               (2 * (1 - p.rho * p.rho) * dt);
    }
    acc += static_cast<double>(M) *
           std::log(2 * M_PI * p.sigma * p.sigma_prime * dt * std::sqrt(1 - p.rho * p.rho));
    return acc;
}

/// Cholesky in place; throws if not positive definite.
inline void cholesky(std::vector<double>& a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            if (i == j) {
                if (!(s > 0.0)) throw std::runtime_error("oracle: matrix not positive definite");
                a[i * n + j] = std::sqrt(s);
            } else {
                a[i * n + j] = s / a[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
    }
}

/// Solve L L^T x = b given the Cholesky factor.
inline std::vector<double> chol_solve(const std::vector<double>& L, std::size_t n,
                                      std::vector<double> b) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) b[i] -= L[i * n + j] * b[j];
        b[i] /= L[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) b[i] -= L[j * n + i] * b[j];
        b[i] /= L[i * n + i];
    }
    return b;
}

struct DenseMarginal {
    double loglik;                 ///< flat-measure marginal over the hidden path
    std::vector<double> mode;      ///< posterior-mode hidden path
    double quadratic_min;          ///< minimized exact quadratic (constants excluded)
};

/// Flat-measure marginal of the observations with the hidden path integrated
/// out, by probing the (exactly quadratic) joint minus-log density.
inline DenseMarginal dense_marginal(const std::vector<double>& observed,
                                    const hiddenprice::ModelParams& p) {
    const std::size_t n = observed.size();
    auto f = [&](const std::vector<double>& z) { return joint_minus_log(z, observed, p); };
    std::vector<double> z0(n, 0.0);
    double S0 = f(z0);
    std::vector<double> Sp(n), Sm(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto z = z0;
        z[i] = 1.0;
        Sp[i] = f(z);
        z[i] = -1.0;
        Sm[i] = f(z);
    }
    // S(z) = S0 - g.z + z' H z / 2; probes are exact for quadratics
    std::vector<double> g(n), H(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = -(Sp[i] - Sm[i]) / 2;
        H[i * n + i] = Sp[i] + Sm[i] - 2 * S0;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            auto z = z0;
            z[i] = 1.0;
            z[j] = 1.0;
            double Sij = f(z);
            H[i * n + j] = H[j * n + i] = Sij - Sp[i] - Sp[j] + S0;
        }

    auto L = H;
    cholesky(L, n);
    auto zstar = chol_solve(L, n, g);
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) quad += g[i] * zstar[i];
    double Smin = S0 - quad / 2;
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet += 2 * std::log(L[i * n + i]);

    DenseMarginal out;
    out.mode = zstar;
    out.loglik = -Smin + 0.5 * n * std::log(2 * M_PI) - 0.5 * logdet;
    const double cst = static_cast<double>(n - 1) *
                       std::log(2 * M_PI * p.sigma * p.sigma_prime * p.dt *
                                std::sqrt(1 - p.rho * p.rho));
    out.quadratic_min = Smin - cst;
    return out;
}

}  // namespace oracle
