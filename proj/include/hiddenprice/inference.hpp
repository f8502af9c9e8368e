#pragma once

#include <vector>

#include "hiddenprice/likelihood.hpp"
#include "hiddenprice/types.hpp"

namespace hiddenprice {

/// Most-probable hidden path given the full series, with the boundary
/// coefficient and the source sequence used by the continuum evaluator.
struct SmootherResult {
    HiddenPath path;
    double b_prime = 0.0;        ///< right-boundary coefficient of the decaying mode
    std::vector<double> g;       ///< source g(t), finite-difference stencils
};

/// Causal endpoint estimator state; updates in O(1) per observation.
struct FilterState {
    double ema = 0.0;           ///< running exponential average of h(t)
    double x0_endpoint = 0.0;   ///< current most-probable hidden value
    double h_last = 0.0;        ///< latest h input
    std::size_t n_seen = 0;     ///< observations consumed
    std::size_t burn_in = 0;    ///< steps until the seed transient has decayed

    bool warmed_up() const { return n_seen > burn_in; }
};

/// Predicted per-step risk premiums with the EMA intermediary.
struct PremiumSeries {
    std::vector<double> mu;      ///< per-step premium; mu[i] predicts the return i -> i+1
    std::vector<double> ema_x;   ///< EMA of past prices backing the premium
    std::size_t first_valid = 1; ///< mu[0] is pure seed; real information starts here
    std::size_t burn_in = 0;     ///< indices below this are flagged low-confidence
    double dt = 1.0;
};

namespace detail {

/**
 * Discrete decay weight of the inference EMA: the steady-state gain of the
 * exact discrete filter at rho = 0, from the scalar Riccati fixed point.
 * Tends to the continuum rate k sigma dt / sigma' as k dt -> 0; the naive
 * continuum weight over-responds and biases the premium's regression slope
 * upward by O(k dt).
 */
inline double ema_alpha(const ModelParams& p) {
    const double kap = p.k * p.dt;
    const double lam_bar = kap * p.sigma / p.sigma_prime;   // continuum rate per step
    const double c = p.sigma * p.sigma * p.dt;              // hidden innovation variance
    const double r = p.sigma_prime * p.sigma_prime * p.dt;  // observation noise variance
    double p_plus = 0.5 * c * (std::sqrt(1 + 4 / (lam_bar * lam_bar)) - 1);
    double p_pred = p_plus + c;
    return kap * kap * p_pred / (kap * kap * p_pred + r);
}

/// Mixing weight pairing the price EMA with the h average so the two
/// premium forms coincide exactly; tends to sigma/sigma' in the continuum.
inline double ema_mixing(const ModelParams& p) {
    const double kap = p.k * p.dt;
    const double alpha = ema_alpha(p);
    return alpha * (1 - kap) / (kap * (1 - alpha));
}

/// Constant part of h(t): (sigma'/(k sigma))(a - sigma^2/2) + sigma'^2/(2k).
inline double h_const(const ModelParams& p) {
    return p.sigma_prime / (p.k * p.sigma) * p.mu0() +
           p.sigma_prime * p.sigma_prime / (2 * p.k);
}

inline std::size_t burn_in_steps(const ModelParams& p) {
    return static_cast<std::size_t>(std::ceil(3 * p.sigma_prime / (p.k * p.sigma * p.dt)));
}

}  // namespace detail

/**
 * Exact discrete smoother: maximizes the joint log likelihood over the
 * hidden path with the series fixed, diffuse prior on the first hidden
 * value.  Tridiagonal solve, O(n).
 */
inline SmootherResult smooth_path(const LogSeries& series, const ModelParams& p);

/**
 * Continuum-formula smoother: the mirror-extended kernel convolution of the
 * source g(t) plus the decaying boundary mode b' exp(lambda (t - T)).
 *
 * The derivative terms of g are eliminated by parts analytically before
 * discretization and the remaining integrals evaluated as one-sided
 * exponential averages; convolving stencil estimates of dX and d2X directly
 * loses the rho-cancellation at the endpoint for small k dt.  g itself is
 * still reported with the forward-difference / three-point stencils.
 */
inline SmootherResult smooth_path_continuum(const LogSeries& series, const ModelParams& p);

/// Causal endpoint estimate after consuming the whole series.
inline FilterState filter_endpoint(const LogSeries& series, const ModelParams& p);

/// Risk premium sequence, EMA form, cross-checkable against the endpoint form.
inline PremiumSeries risk_premium(const LogSeries& series, const ModelParams& p);

/// Source sequence g(t) with forward-difference dX and three-point d2X.
inline std::vector<double> g_source(const LogSeries& series, const ModelParams& p);

// ---------------------------------------------------------------------------

inline SmootherResult smooth_path(const LogSeries& series, const ModelParams& p) {
    SmootherResult out;
    out.path.values = smooth_path_values(series, p);  // validates inputs
    out.path.dt = series.dt;
    out.g = g_source(series, p);

    // boundary coefficient consistent with the solved endpoint:
    // X0(T) = Xbar + b' folded into the closed form removes the (1+rho) factor
    const auto& X = series.values;
    const std::size_t n = X.size();
    double xd_end = (X[n - 1] - X[n - 2]) / series.dt;
    out.b_prime = p.sigma_prime / (p.k * p.sigma) *
                  (p.mu0() + p.rho * p.sigma / p.sigma_prime *
                                 (xd_end + p.k * (X[n - 1] - out.path.values[n - 1]) +
                                  p.sigma_prime * p.sigma_prime / 2));
    return out;
}

inline std::vector<double> g_source(const LogSeries& series, const ModelParams& p) {
    const auto& X = series.values;
    const std::size_t n = X.size();
    const double dt = series.dt;
    std::vector<double> xd(n), xdd(n), g(n);
    for (std::size_t j = 0; j + 1 < n; ++j) xd[j] = (X[j + 1] - X[j]) / dt;
    xd[n - 1] = (X[n - 1] - X[n - 2]) / dt;
    for (std::size_t j = 1; j + 1 < n; ++j) xdd[j] = (X[j + 1] - 2 * X[j] + X[j - 1]) / (dt * dt);
    xdd[0] = xdd[1];
    xdd[n - 1] = xdd[n - 2];
    const double srho = p.rho * p.sigma_prime / p.sigma;
    const double c0 = p.sigma_prime * p.sigma_prime / (2 * p.k);
    for (std::size_t j = 0; j < n; ++j)
        g[j] = X[j] + (1 - srho) * xd[j] / p.k - srho * xdd[j] / (p.k * p.k) + c0 +
               srho * p.mu0() / p.k;
    return g;
}

inline SmootherResult smooth_path_continuum(const LogSeries& series, const ModelParams& p) {
    p.validate();
    series.validate(3);
    if (p.k <= 0.0) throw degenerate_error("smoother: k must be positive");
    const auto& X = series.values;
    const std::size_t n = X.size();
    const double dt = series.dt;
    const double lam = p.lambda();
    const double srho = p.rho * p.sigma_prime / p.sigma;
    const double mu0 = p.mu0();
    const double c0 = p.sigma_prime * p.sigma_prime / (2 * p.k);
    const double w = std::exp(-lam * dt);
    const double span = (n - 1) * dt;

    // one-sided exponential averages of X
    std::vector<double> Em(n), Ep(n);
    Em[0] = (1 - w) * X[0];
    for (std::size_t i = 1; i < n; ++i) Em[i] = w * Em[i - 1] + (1 - w) * X[i];
    Ep[n - 1] = (1 - w) * X[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) Ep[i] = w * Ep[i + 1] + (1 - w) * X[i];
    const double EmT = Em[n - 1];
    const double xd0 = (X[1] - X[0]) / dt;
    const double xdT = (X[n - 1] - X[n - 2]) / dt;
    const double EmDT = lam * (X[n - 1] - X[0] * std::exp(-lam * span) - EmT);

    SmootherResult out;
    out.path.dt = dt;
    out.path.values.resize(n);
    out.g = g_source(series, p);

    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = i * dt;
        double eT_t = std::exp(-lam * (span - t));
        double e_t = std::exp(-lam * t);
        double e2T_t = std::exp(-lam * (2 * span - t));
        // symmetric kernel normalized to exact unit mass on the lattice:
        // 1/(1+w) replaces the continuum 1/2 and removes an O(lam dt) bias
        double P1 = (Em[i] + Ep[i] - (1 - w) * X[i]) / (1 + w) + 0.5 * eT_t * EmT;
        double W = 1 - 0.5 * e_t - 0.5 * e2T_t;
        double JX = 0.5 * lam * (2 * X[n - 1] * eT_t - X[0] * (e_t + e2T_t) + Ep[i] - Em[i] -
                                 eT_t * EmT);
        double EmD = lam * (X[i] - X[0] * e_t - Em[i]);
        double EpD = lam * (X[n - 1] * eT_t - X[i] + Ep[i]);
        double JXd = 0.5 * lam * (2 * xdT * eT_t - xd0 * (e_t + e2T_t) + EpD - EmD - eT_t * EmDT);
        base[i] = P1 + c0 * W + JX / p.k + srho * (mu0 * W - JX - JXd / p.k) / p.k;
    }
    // The boundary coefficient: X0(T) = Xbar(T) + b'.  The causal h-average
    // IS this endpoint and is exactly rho-free, so anchoring b' to it keeps
    // the endpoint invariance that the naive discrete transcription of the
    // closed form loses (its error is O(k dt) amplified by rho/(k dt)).
    double xbar = base[n - 1];
    out.b_prime = filter_endpoint(series, p).x0_endpoint - xbar;
    for (std::size_t i = 0; i < n; ++i) {
        double t = i * dt;
        out.path.values[i] = base[i] + out.b_prime * std::exp(-lam * (span - t));
    }
    return out;
}

/// Incremental update with the next observation.
inline void filter_update(FilterState& st, double x_prev, double x_next, const ModelParams& p) {
    double alpha = detail::ema_alpha(p);
    st.h_last = detail::h_const(p) + x_prev + (x_next - x_prev) / (p.k * p.dt);
    st.ema = (1 - alpha) * st.ema + alpha * st.h_last;
    st.x0_endpoint = st.ema;
    ++st.n_seen;
}

/// Seed a filter at the first observation.
inline FilterState filter_init(double x0, const ModelParams& p) {
    p.validate();
    if (p.k <= 0.0) throw degenerate_error("filter: k must be positive");
    FilterState st;
    st.ema = x0 + detail::h_const(p);   // stationary offset above the first price
    st.x0_endpoint = st.ema;
    st.h_last = st.ema;
    st.n_seen = 1;
    st.burn_in = detail::burn_in_steps(p);
    return st;
}

inline FilterState filter_endpoint(const LogSeries& series, const ModelParams& p) {
    series.validate(2);
    FilterState st = filter_init(series.values[0], p);
    for (std::size_t j = 1; j < series.size(); ++j)
        filter_update(st, series.values[j - 1], series.values[j], p);
    return st;
}

inline PremiumSeries risk_premium(const LogSeries& series, const ModelParams& p) {
    p.validate();
    series.validate(2);
    if (p.k <= 0.0) throw degenerate_error("risk premium: k must be positive");
    const auto& X = series.values;
    const std::size_t n = X.size();
    const double alpha = detail::ema_alpha(p);
    const double mix = detail::ema_mixing(p);   // sigma/sigma' in the continuum
    // constant term: k * h_const - sigma'^2/2 = (sigma'/sigma)(a - sigma^2/2)
    const double cmu = (p.sigma_prime / p.sigma) * p.mu0();

    PremiumSeries out;
    out.dt = series.dt;
    out.burn_in = detail::burn_in_steps(p);
    out.mu.resize(n);
    out.ema_x.resize(n);
    double ema = X[0];
    out.ema_x[0] = ema;
    out.mu[0] = (p.k * (1 - mix) * (ema - X[0]) + cmu) * series.dt;
    for (std::size_t j = 1; j < n; ++j) {
        ema = (1 - alpha) * ema + alpha * X[j];
        out.ema_x[j] = ema;
        double mu_rate = p.k * (1 - mix) * (ema - X[j]) + cmu;
        if (!std::isfinite(mu_rate)) throw numeric_error("risk premium: non-finite value");
        out.mu[j] = mu_rate * series.dt;
    }
    return out;
}

/// Endpoint-form premium k (X0(T) - X) - sigma'^2/2 from a filter sweep;
/// agrees with the EMA form to round-off by construction of the EMA weight.
inline std::vector<double> risk_premium_endpoint_form(const LogSeries& series,
                                                      const ModelParams& p) {
    series.validate(2);
    FilterState st = filter_init(series.values[0], p);
    std::vector<double> mu(series.size());
    auto prem = [&](double x) {
        return (p.k * (st.x0_endpoint - x) - p.sigma_prime * p.sigma_prime / 2) * series.dt;
    };
    mu[0] = prem(series.values[0]);
    for (std::size_t j = 1; j < series.size(); ++j) {
        filter_update(st, series.values[j - 1], series.values[j], p);
        mu[j] = prem(series.values[j]);
    }
    return mu;
}

}  // namespace hiddenprice
