#pragma once

#include <cmath>
#include <vector>

#include "hiddenprice/inference.hpp"
#include "hiddenprice/types.hpp"

namespace hiddenprice {

/// Ordinary least squares of realized returns on predicted premiums.
struct RegressionReport {
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    double t_intercept = 0.0;
    double t_slope = 0.0;
    double p_intercept = 1.0;
    double p_slope = 1.0;
    double r_squared = 0.0;
    std::size_t n_obs = 0;
    double rmse = 0.0;
};

/// Volatility-normalized backtest of premium-proportional holdings.
struct BacktestReport {
    std::vector<double> holdings;             ///< position at each step (pre-scaling)
    std::vector<double> strategy_returns;     ///< scaled to benchmark stdev
    std::vector<double> benchmark_returns;
    std::vector<double> cum_strategy;
    std::vector<double> cum_benchmark;
    double sharpe_strategy = 0.0;             ///< per-step mean/std, no annualization
    double sharpe_benchmark = 0.0;
    double sharpe_ratio = 0.0;                ///< strategy / benchmark
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stdev_of(const std::vector<double>& v) {
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size())) : 0.0;
}

/// Two-sided p-value of a t statistic with nu degrees of freedom, via the
/// regularized incomplete beta (continued fraction).
inline double student_t_pvalue(double t, double nu) {
    if (!std::isfinite(t)) return 0.0;
    double x = nu / (nu + t * t);
    // I_x(nu/2, 1/2)
    double a = nu / 2, b = 0.5;
    auto betacf = [](double a, double b, double x) {
        const int maxit = 200;
        const double eps = 3e-14, fpmin = 1e-300;
        double qab = a + b, qap = a + 1, qam = a - 1;
        double c = 1.0, d = 1.0 - qab * x / qap;
        if (std::abs(d) < fpmin) d = fpmin;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= maxit; ++m) {
            int m2 = 2 * m;
            double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < fpmin) d = fpmin;
            c = 1.0 + aa / c;
            if (std::abs(c) < fpmin) c = fpmin;
            d = 1.0 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < eps) break;
        }
        return h;
    };
    double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    double bt = std::exp(a * std::log(x) + b * std::log(1.0 - x) - lbeta);
    double ib;
    if (x < (a + 1) / (a + b + 2))
        ib = bt * betacf(a, b, x) / a;
    else
        ib = 1.0 - bt * betacf(b, a, 1.0 - x) / b;
    return std::min(1.0, std::max(0.0, ib));
}

}  // namespace detail

/**
 * Regress realized log returns on the premium predicting them: pairs
 * (mu[i], X[i+1] - X[i]) for every index where both exist.  Premiums must
 * be aligned with the series (strictly causal).
 */
inline RegressionReport regress_returns(const LogSeries& series, const PremiumSeries& premiums) {
    series.validate(2);
    if (premiums.mu.size() != series.size())
        throw usage_error("regress_returns: premium series not aligned with the price series");
    const std::size_t n = series.size() - 1;
    if (n < 3) throw size_error("regress_returns: need at least 3 return/premium pairs");

    std::vector<double> x(premiums.mu.begin(), premiums.mu.begin() + n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = series.values[i + 1] - series.values[i];

    double mx = detail::mean_of(x), my = detail::mean_of(y);
    double sxx = 0.0, sxy = 0.0, syy = 0.0, scale = 1e-300;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
        scale = std::max(scale, std::abs(x[i]));
    }
    // rounding noise around a constant premium is still degenerate
    if (!(sxx > 1e-24 * static_cast<double>(n) * scale * scale))
        throw degenerate_error("regress_returns: zero-variance premiums");

    RegressionReport rep;
    rep.n_obs = n;
    rep.slope = sxy / sxx;
    rep.intercept = my - rep.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = y[i] - rep.intercept - rep.slope * x[i];
        ssr += e * e;
    }
    double dof = static_cast<double>(n - 2);
    double s2 = ssr / dof;
    rep.rmse = std::sqrt(s2);
    rep.se_slope = std::sqrt(s2 / sxx);
    rep.se_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    rep.t_slope = rep.slope / rep.se_slope;
    rep.t_intercept = rep.intercept / rep.se_intercept;
    rep.p_slope = detail::student_t_pvalue(rep.t_slope, dof);
    rep.p_intercept = detail::student_t_pvalue(rep.t_intercept, dof);
    rep.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 0.0;
    return rep;
}

/**
 * Backtest premium-proportional holdings against constant holding.
 * Position at step i uses data through i only; both return streams are
 * rescaled to the same sample standard deviation, and the accumulated
 * curves are cumulative sums of the scaled log returns.
 */
inline BacktestReport backtest(const LogSeries& series, const PremiumSeries& premiums,
                               const ModelParams& params) {
    series.validate(2);
    params.validate();
    if (premiums.mu.size() != series.size())
        throw usage_error("backtest: premium series not aligned with the price series");
    const std::size_t n = series.size() - 1;

    BacktestReport rep;
    rep.holdings.resize(n);
    rep.strategy_returns.resize(n);
    rep.benchmark_returns.resize(n);
    const double sizing = 1.0 / (params.sigma_prime * params.sigma_prime);  // mean-variance
    for (std::size_t i = 0; i < n; ++i) {
        double r = series.values[i + 1] - series.values[i];
        rep.holdings[i] = premiums.mu[i] * sizing;
        rep.benchmark_returns[i] = r;
        rep.strategy_returns[i] = rep.holdings[i] * r;
    }
    double sb = detail::stdev_of(rep.benchmark_returns);
    double ss = detail::stdev_of(rep.strategy_returns);
    if (!(ss > 0.0)) throw degenerate_error("backtest: strategy returns have zero variance");
    if (!(sb > 0.0)) throw degenerate_error("backtest: benchmark returns have zero variance");
    double scale = sb / ss;
    for (auto& r : rep.strategy_returns) r *= scale;

    rep.cum_strategy.resize(n);
    rep.cum_benchmark.resize(n);
    double cs = 0.0, cb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cs += rep.strategy_returns[i];
        cb += rep.benchmark_returns[i];
        rep.cum_strategy[i] = cs;
        rep.cum_benchmark[i] = cb;
    }
    rep.sharpe_strategy = detail::mean_of(rep.strategy_returns) / detail::stdev_of(rep.strategy_returns);
    rep.sharpe_benchmark = detail::mean_of(rep.benchmark_returns) / sb;
    rep.sharpe_ratio = rep.sharpe_strategy / rep.sharpe_benchmark;
    return rep;
}

}  // namespace hiddenprice
