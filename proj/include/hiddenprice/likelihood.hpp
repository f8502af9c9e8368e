#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "hiddenprice/spectrum.hpp"
#include "hiddenprice/types.hpp"

namespace hiddenprice {

/**
 * Marginal log likelihood of an observed series, hidden path integrated out.
 *
 * For the spectral evaluation, value = sum(per_mode) + zero_mode + drift_term
 * exactly; per_mode holds one entry per positive frequency.  For the Kalman
 * evaluation per_mode holds the per-innovation contributions instead and
 * drift_term the diffuse-initialization constant.
 */
struct LogLikelihood {
    double value = 0.0;
    std::vector<double> per_mode;
    double zero_mode = 0.0;       ///< zero-frequency coupling term (0 when disabled)
    double drift_term = 0.0;      ///< drift information plus parameter-free constants
};

/// Kalman filter output: exact log likelihood plus the filtered hidden state.
struct KalmanResult {
    LogLikelihood loglik;
    std::vector<double> filtered_mean;   ///< E[X0(j) | X(0..j+1)], j = 0..n-2
    std::vector<double> filtered_var;
    double endpoint_mean = 0.0;          ///< E[X0(n-1) | X(0..n-1)]
    double endpoint_var = 0.0;
};

namespace detail {

struct PairTerm {
    double lognorm;   // log((Om^2 + k^2) / (sigma'^2 Om^2 + sigma^2 k^2)), pair-weighted
    double quad;      // T Q |c|^2, pair-weighted
};

/// Cancellation-form per-mode term. weight = 1 for a conjugate pair, 1/2 for Nyquist.
inline PairTerm pair_term(double om2, double k, double s2, double sp2, double span,
                          double abs2_c, double weight) {
    double num = om2 + k * k;
    double den = sp2 * om2 + s2 * k * k;
    double Q = num * om2 / den;
    return {weight * std::log(num / den), 2.0 * weight * span * Q * abs2_c * 0.5};
}

}  // namespace detail

/**
 * Exact discrete joint quadratic, minimized over the hidden path.
 *
 * Returns the value of  sum_j [A_j^2/s^2 + B_j^2/s'^2 - 2 rho A_j B_j/(s s')] /
 * (2 (1-rho^2) dt)  at the supplied hidden path, where A and B are the two
 * innovation residuals.  This is the smoother objective; the zero-mode
 * coupling evaluates it at the tridiagonal solution.
 */
inline double joint_quadratic(const std::vector<double>& hidden, const LogSeries& series,
                              const ModelParams& p) {
    const auto& X = series.values;
    const double dt = p.dt;
    const double mu0 = p.mu0();
    const double hsp2 = p.sigma_prime * p.sigma_prime / 2;
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < X.size(); ++j) {
        double A = hidden[j + 1] - hidden[j] - mu0 * dt;
        double B = X[j + 1] - X[j] + p.k * (X[j] - hidden[j]) * dt + hsp2 * dt;
        acc += A * A / (p.sigma * p.sigma) + B * B / (p.sigma_prime * p.sigma_prime) -
               2 * p.rho * A * B / (p.sigma * p.sigma_prime);
    }
    return acc / (2 * (1 - p.rho * p.rho) * dt);
}

/// Most-probable hidden path: exact tridiagonal solve of the discrete
/// stationarity equations with a diffuse prior on the first hidden value.
/// Declared here because the zero-mode term evaluates the joint quadratic
/// at this path; the full smoother interface lives in inference.hpp.
inline std::vector<double> smooth_path_values(const LogSeries& series, const ModelParams& p) {
    p.validate();
    series.validate(3);
    if (p.k <= 0.0) throw degenerate_error("smoother: k must be positive (hidden path unidentifiable)");
    const auto& X = series.values;
    const std::size_t n = X.size();
    const double dt = p.dt;
    const double kap = p.k * dt;
    const double mu0dt = p.mu0() * dt;
    const double c1 = 1 / (p.sigma * p.sigma);
    const double c2 = 1 / (p.sigma_prime * p.sigma_prime);
    const double c12 = p.rho / (p.sigma * p.sigma_prime);

    // Bt_j = dX_j + k X_j dt + sigma'^2 dt / 2  (the hidden-free part of B_j)
    std::vector<double> Bt(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
        Bt[j] = X[j + 1] - X[j] + p.k * X[j] * dt + p.sigma_prime * p.sigma_prime * dt / 2;

    const double off = -c1 + c12 * kap;
    std::vector<double> diag(n), rhs(n);
    diag[0] = c1 + c2 * kap * kap - 2 * c12 * kap;
    rhs[0] = (c2 * kap - c12) * Bt[0] - c1 * mu0dt + c12 * kap * mu0dt;
    for (std::size_t u = 1; u + 1 < n; ++u) {
        diag[u] = 2 * c1 + c2 * kap * kap - 2 * c12 * kap;
        rhs[u] = (c2 * kap - c12) * Bt[u] + c12 * Bt[u - 1] + c12 * kap * mu0dt;
    }
    diag[n - 1] = c1;
    rhs[n - 1] = c1 * mu0dt + c12 * Bt[n - 2];

    // Thomas solve (constant off-diagonal)
    std::vector<double> cp(n), dp(n);
    cp[0] = off / diag[0];
    dp[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        double m = diag[i] - off * cp[i - 1];
        if (m == 0.0) throw numeric_error("smoother: singular tridiagonal system");
        cp[i] = (i + 1 < n) ? off / m : 0.0;
        dp[i] = (rhs[i] - off * dp[i - 1]) / m;
    }
    std::vector<double> x0(n);
    x0[n - 1] = dp[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x0[i] = dp[i] - cp[i] * x0[i + 1];
    return x0;
}

namespace detail {

/**
 * Zero-frequency coupling term.
 *
 * The exact quadratic couples the finite-frequency hidden amplitudes to the
 * zero-frequency block through a single scalar s = k dt (v - v0): the
 * reversion residual acquires a time ramp when the hidden drift disagrees
 * with the fitted one.  The drift itself is profiled out of the coupling
 * (as in the source derivation, which integrates it away), so the term
 * depends on the data only through the mode amplitudes.
 *
 * For fixed s every pair minimizes in closed form, leaving an exactly
 * quadratic scalar function F(s); the term is F(0) - min_s F(s) >= 0
 * evaluated by three probes.  The per-mode normalization stays untouched.
 */
struct ZeroModeTerm {
    const ModelParams& p;
    const SeriesTransform& tr;
    const std::vector<cplx>& coeffs;

    double pair_bracket_min(cplx q, cplx c, double s, double weight) const {
        const double kap = p.k * p.dt;
        const double s2 = p.sigma * p.sigma, sp2 = p.sigma_prime * p.sigma_prime;
        const double ss = p.sigma * p.sigma_prime;
        const double aq2 = std::norm(q);
        // quadratic coefficient of |d|^2 (rho-corrected)
        double P = 2 * weight * (aq2 / s2 + kap * kap / sp2) +
                   4 * weight * p.rho * kap * q.real() / ss;
        // linear coefficient: bracket = P|d|^2 - 2 Re(W conj(d)) + const(s)
        cplx wc = (q + kap) * c;
        cplx W = 2.0 * weight * kap * wc / sp2 +
                 (2.0 * weight * p.rho / ss) * (aq2 + kap * std::conj(q)) * c;
        // coupling: (2 s dt / sigma'^2) * 2Re(w/q) and -(2 rho s dt/(s s')) * 2Re(d)
        W += (2.0 * weight * s * p.dt * kap / sp2) * (q / aq2);
        W += cplx(2.0 * weight * p.rho * s * p.dt / ss, 0.0);
        double C0 = 2 * weight * std::norm(wc) / sp2 +
                    (2 * weight * s * p.dt / sp2) * 2.0 * ((q + kap) * c / q).real();
        return C0 - std::norm(W) / P;
    }

    /// exact quadratic F(s): ramp energy plus all pair minima at coupling s
    double F(double s) const {
        const double dt = p.dt;
        const double M = static_cast<double>(tr.M);
        const double tbar = dt * (M - 1) / 2;
        const double t2bar = dt * dt * (M - 1) * (2 * M - 1) / 6;
        const double sp2 = p.sigma_prime * p.sigma_prime;
        // drift and constant-offset hidden coordinates profiled out: the
        // zero-sector residue is the centered ramp energy
        double acc = s * s * (t2bar - tbar * tbar) / sp2;
        std::size_t pairs = tr.n_pairs();
        for (std::size_t m = 0; m < coeffs.size(); ++m) {
            double weight = (m < pairs) ? 1.0 : 0.5;
            acc += pair_bracket_min(tr.q[m], coeffs[m], s, weight);
        }
        return acc * M / (2 * (1 - p.rho * p.rho) * dt);
    }

    double value() const {
        // F is exactly quadratic: three probes pin the parabola
        double f0 = F(0.0);
        const double h = 1e-3;
        double fp = F(h), fm = F(-h);
        double curv = (fp + fm - 2 * f0) / (h * h);
        double grad = (fp - fm) / (2 * h);
        if (!(curv > 0.0)) return 0.0;   // numerically flat coupling
        double smin = -grad / curv;
        double fmin = f0 + grad * smin + 0.5 * curv * smin * smin;
        return f0 - fmin;
    }
};

}  // namespace detail

inline LogLikelihood spectral_log_likelihood(const detail::SeriesTransform& tr,
                                             const LogSeries& series, const ModelParams& p,
                                             bool include_zero_mode);

/**
 * Spectral marginal log likelihood (hidden path integrated out in Fourier
 * space).  Uses lattice frequencies Omega_n^2 = 2(1 - cos theta_n)/dt^2 in
 * the continuum-form per-mode term, which keeps the two structural
 * identities exact: the value never reads rho when the zero-frequency
 * coupling is off, and at sigma = sigma' every k-dependence cancels
 * algebraically (the per-mode terms then equal the iid geometric Brownian
 * ones; the drift term differs only through its two-channel variance).
 *
 * With include_zero_mode the coupling between the drift block and the
 * finite-frequency modes is restored: the exact joint quadratic is
 * re-minimized over the full hidden path (tridiagonal, O(n)) and the
 * decoupled minimum is subtracted, while the per-mode normalization is kept.
 */
inline LogLikelihood spectral_log_likelihood(const LogSeries& series, const ModelParams& p,
                                             bool include_zero_mode = false) {
    p.validate();
    const detail::SeriesTransform tr(series);
    return spectral_log_likelihood(tr, series, p, include_zero_mode);
}

/// Overload reusing a cached transform: the hot path for fitting.
inline LogLikelihood spectral_log_likelihood(const detail::SeriesTransform& tr,
                                             const LogSeries& series, const ModelParams& p,
                                             bool include_zero_mode) {
    const double s2 = p.sigma * p.sigma;
    const double sp2 = p.sigma_prime * p.sigma_prime;
    const double span = tr.span;
    const double M = static_cast<double>(tr.M);
    const double v = tr.drift(p.sigma_prime);
    const double b = p.b_drift();

    thread_local std::vector<cplx> coeffs;
    tr.mode_coeffs(p.sigma_prime, coeffs);

    LogLikelihood out;
    // Var(v) carries both noise channels.  The hidden channel alone
    // (sigma^2/T) is the continuum value, but it makes the fitted drift
    // degenerate: a can zero the residual exactly and sigma -> 0 then gains
    // -log(sigma) for free.  (sigma^2 + sigma'^2)/T is the exact k -> 0
    // variance of v and stays k-free, so the structural cancellations hold.
    const double var_v = (s2 + sp2) / span;
    out.drift_term = -(M / 2) * std::log(2 * M_PI * series.dt) -
                     0.5 * std::log(span * var_v) -
                     (v - b) * (v - b) / (2 * var_v);
    out.per_mode.resize(coeffs.size());
    double acc = out.drift_term;
    std::size_t pairs = tr.n_pairs();
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
        double weight = (m < pairs) ? 1.0 : 0.5;
        auto term = detail::pair_term(tr.omega2[m], p.k, s2, sp2, span, std::norm(coeffs[m]), weight);
        double contrib = term.lognorm - term.quad;
        if (!std::isfinite(contrib))
            throw numeric_error("spectral likelihood: non-finite contribution at mode " +
                                std::to_string(m + 1));
        out.per_mode[m] = contrib;
        acc += contrib;
    }

    if (include_zero_mode) {
        detail::ZeroModeTerm zm{p, tr, coeffs};
        out.zero_mode = zm.value();
        if (!std::isfinite(out.zero_mode))
            throw numeric_error("spectral likelihood: non-finite zero-mode term");
        acc += out.zero_mode;
    }
    out.value = acc;
    return out;
}

/**
 * Exact marginal log likelihood via the prediction-error decomposition of
 * the linear-Gaussian filter, diffuse prior on the first hidden value.
 * The artifact's reference oracle: no continuum approximation anywhere.
 *
 * k = 0 decouples the observation from the hidden path; the likelihood is
 * then the iid-increment density and the filtered state is undefined.
 */
inline KalmanResult kalman_filter(const LogSeries& series, const ModelParams& p) {
    p.validate();
    series.validate(2);
    const auto& X = series.values;
    const std::size_t M = X.size() - 1;
    const double dt = p.dt;
    const double mu0 = p.mu0();
    const double sp2dt = p.sigma_prime * p.sigma_prime * dt;
    const double kap = p.k * dt;

    KalmanResult out;
    if (p.k == 0.0) {
        // decoupled: increments are iid N(-sigma'^2 dt/2, sigma'^2 dt)
        double ll = 0.0;
        out.loglik.per_mode.resize(M);
        for (std::size_t j = 0; j < M; ++j) {
            double e = X[j + 1] - X[j] + sp2dt / 2;
            double term = -0.5 * (std::log(2 * M_PI * sp2dt) + e * e / sp2dt);
            out.loglik.per_mode[j] = term;
            ll += term;
        }
        out.loglik.value = ll;
        return out;
    }

    // y_j = kap x0_j + sigma' sqrt(dt) z'_j
    const double lam = p.rho * p.sigma / p.sigma_prime;
    out.loglik.per_mode.resize(M);
    out.filtered_mean.resize(M);
    out.filtered_var.resize(M);

    auto y_at = [&](std::size_t j) {
        return X[j + 1] - X[j] + p.k * X[j] * dt + sp2dt / 2;
    };

    // diffuse first observation: lim_D [log N(y0; kap m0, kap^2 D + R) + log sqrt(2 pi D)]
    out.loglik.drift_term = -std::log(kap);
    double ll = out.loglik.drift_term;
    double y0 = y_at(0);
    double mplus = y0 / kap;
    double Pplus = sp2dt / (kap * kap);
    out.loglik.per_mode[0] = 0.0;
    out.filtered_mean[0] = mplus;
    out.filtered_var[0] = Pplus;
    double ylag = y0;
    for (std::size_t j = 1; j < M; ++j) {
        double m = mplus + mu0 * dt + lam * (ylag - kap * mplus);
        double P = (1 - lam * kap) * (1 - lam * kap) * Pplus +
                   p.sigma * p.sigma * dt * (1 - p.rho * p.rho);
        double S = kap * kap * P + sp2dt;
        if (!(S > 0.0)) throw numeric_error("kalman: innovation variance not positive");
        double y = y_at(j);
        double e = y - kap * m;
        double term = -0.5 * (std::log(2 * M_PI * S) + e * e / S);
        out.loglik.per_mode[j] = term;
        ll += term;
        double K = kap * P / S;
        mplus = m + K * e;
        Pplus = P - kap * K * P;
        if (!(Pplus > 0.0)) throw numeric_error("kalman: filter covariance lost positivity");
        out.filtered_mean[j] = mplus;
        out.filtered_var[j] = Pplus;
        ylag = y;
    }
    // one-step prediction to the final sample time
    out.endpoint_mean = mplus + mu0 * dt + lam * (ylag - kap * mplus);
    out.endpoint_var = (1 - lam * kap) * (1 - lam * kap) * Pplus +
                       p.sigma * p.sigma * dt * (1 - p.rho * p.rho);
    out.loglik.value = ll;
    return out;
}

/// Log likelihood only (see kalman_filter).
inline LogLikelihood kalman_log_likelihood(const LogSeries& series, const ModelParams& p) {
    return kalman_filter(series, p).loglik;
}

/// Per-mode contribution row for the likelihood-surface CSV dump.
struct ModeContribution {
    std::size_t n;
    double omega;
    double power;        // |X_n|^2
    double contribution;
};

inline std::vector<ModeContribution> mode_contributions(const LogSeries& series,
                                                        const ModelParams& p) {
    auto dec = spectral_decompose(series, p.sigma_prime);
    auto ll = spectral_log_likelihood(series, p, false);
    std::vector<ModeContribution> rows(ll.per_mode.size());
    for (std::size_t m = 0; m < rows.size(); ++m)
        rows[m] = {m + 1, dec.omegas[m], std::norm(dec.coeffs[m]), ll.per_mode[m]};
    return rows;
}

/**
 * Hidden mode amplitude at the decoupled stationary point, the
 * finite-frequency solution diagnostic.  Uses the continuum relation with
 * the lattice frequency magnitude, so the stated stationarity identity
 * holds to round-off.
 */
inline std::vector<cplx> hidden_mode_solution(const LogSeries& series, const ModelParams& p) {
    auto dec = spectral_decompose(series, p.sigma_prime);
    const double s2 = p.sigma * p.sigma, sp2 = p.sigma_prime * p.sigma_prime;
    const double ssp = p.sigma * p.sigma_prime;
    std::vector<cplx> out(dec.coeffs.size());
    for (std::size_t m = 0; m < out.size(); ++m) {
        double om = std::sqrt(2 * (1 - std::cos(dec.omegas[m] * series.dt))) / series.dt;
        double om2 = om * om;
        cplx num = cplx(s2 * p.k * p.k + p.rho * ssp * om2, om * p.k * (s2 - p.rho * ssp));
        out[m] = num * dec.coeffs[m] / (sp2 * om2 + s2 * p.k * p.k);
    }
    return out;
}

}  // namespace hiddenprice
