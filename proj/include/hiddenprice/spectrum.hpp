#pragma once

#include <complex>
#include <vector>

#include "hiddenprice/types.hpp"

namespace hiddenprice {

using cplx = std::complex<double>;

/**
 * Fourier decomposition of the Ito-shifted, drift-removed series.
 *
 * With X' = X + sigma'^2 t / 2 and v the endpoint slope of X', the residual
 * X' - v t is periodic over the M = n-1 increment window and
 *
 *     X'_j = v t_j + mean + sum_n ( coeffs[n] e^{i omega_n t_j} + c.c. )
 *
 * holds at every sample. coeffs run over n = 1 .. floor((n-1)/2); when M is
 * even the last entry is the real-valued Nyquist coefficient (counted once,
 * not conjugate-doubled).
 */
struct SpectralDecomposition {
    double v = 0.0;                  ///< fitted linear drift per step
    double mean = 0.0;               ///< zero-frequency coefficient of the residual
    std::vector<cplx> coeffs;        ///< complex amplitudes, n = 1 .. floor((T-1)/2)
    std::vector<double> omegas;      ///< omega_n = 2 pi n / span
    double dt = 1.0;
    bool has_nyquist = false;        ///< true when the last coeff is the Nyquist mode

    std::size_t n_modes() const { return coeffs.size(); }

    /// Evaluate v*t + mean + sum of modes at sample index j.
    double reconstruct(std::size_t j) const {
        double t = static_cast<double>(j) * dt;
        double acc = v * static_cast<double>(j) + mean;  // v is per step
        for (std::size_t m = 0; m < coeffs.size(); ++m) {
            double w = omegas[m] * t;
            cplx e(std::cos(w), std::sin(w));
            if (has_nyquist && m + 1 == coeffs.size())
                acc += (coeffs[m] * e).real();
            else
                acc += 2.0 * (coeffs[m] * e).real();
        }
        return acc;
    }
};

namespace detail {

/**
 * Per-series transform cache for the spectral likelihood.
 *
 * The Ito shift depends on the candidate sigma', but the transform is
 * linear, so the DFT of the raw series and the closed-form DFT of the time
 * ramp are cached once and recombined per candidate in O(M).
 */
struct SeriesTransform {
    std::size_t n = 0;       // sample count
    std::size_t M = 0;       // increments, n - 1
    double dt = 1.0;
    double span = 0.0;       // M * dt
    double x_first = 0.0, x_last = 0.0;
    std::vector<cplx> cx;    // (1/M) sum_j X_j e^{-i theta_n j}, n = 1 .. floor(M/2)
    std::vector<cplx> ct;    // same transform of t_j = j dt: dt / (e^{-i theta_n} - 1)
    std::vector<double> theta;     // 2 pi n / M
    std::vector<double> omega2;    // lattice frequency^2: 2(1 - cos theta)/dt^2
    std::vector<cplx> q;           // e^{i theta_n} - 1

    explicit SeriesTransform(const LogSeries& series) {
        series.validate(4);
        n = series.size();
        M = n - 1;
        dt = series.dt;
        span = static_cast<double>(M) * dt;
        x_first = series.values.front();
        x_last = series.values.back();
        std::size_t half = M / 2;
        cx.resize(half);
        ct.resize(half);
        theta.resize(half);
        omega2.resize(half);
        q.resize(half);
        const double* X = series.values.data();
        for (std::size_t m = 1; m <= half; ++m) {
            double th = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(M);
            double c = std::cos(th), s = std::sin(th);
            // direct DFT; done once per series, reused across likelihood calls
            double re = 0.0, im = 0.0;
            double cr = 1.0, ci = 0.0;  // e^{-i theta m j}, advanced by multiplication
            for (std::size_t j = 0; j < M; ++j) {
                re += X[j] * cr;
                im += X[j] * ci;
                double nr = cr * c + ci * s;   // multiply by e^{-i theta}
                ci = ci * c - cr * s;
                cr = nr;
            }
            cx[m - 1] = cplx(re, im) / static_cast<double>(M);
            ct[m - 1] = dt / (cplx(std::cos(th), -std::sin(th)) - 1.0);
            theta[m - 1] = th;
            omega2[m - 1] = 2.0 * (1.0 - std::cos(th)) / (dt * dt);
            q[m - 1] = cplx(c, s) - 1.0;
        }
    }

    bool has_nyquist() const { return M % 2 == 0; }
    std::size_t n_pairs() const { return has_nyquist() ? M / 2 - 1 : M / 2; }

    /// Drift per unit time of X' = X + sigma'^2 t / 2.
    double drift(double sigma_prime) const {
        return (x_last - x_first) / span + sigma_prime * sigma_prime / 2;
    }

    /// Mode coefficients of the detrended X' for the given candidate sigma'.
    void mode_coeffs(double sigma_prime, std::vector<cplx>& out) const {
        double v = drift(sigma_prime);
        double shift = sigma_prime * sigma_prime / 2 - v;
        out.resize(cx.size());
        for (std::size_t m = 0; m < cx.size(); ++m) out[m] = cx[m] + shift * ct[m];
    }
};

}  // namespace detail

/**
 * Decompose a series into drift plus Fourier modes of the shifted residual.
 * Length must be at least 4.
 */
inline SpectralDecomposition spectral_decompose(const LogSeries& series, double sigma_prime) {
    if (!(sigma_prime >= 0.0) || !std::isfinite(sigma_prime))
        throw param_error("spectral_decompose: sigma_prime must be non-negative");
    detail::SeriesTransform tr(series);
    SpectralDecomposition out;
    out.dt = series.dt;
    out.has_nyquist = tr.has_nyquist();
    double v = tr.drift(sigma_prime);
    out.v = v * series.dt;  // per step
    tr.mode_coeffs(sigma_prime, out.coeffs);
    out.omegas.resize(out.coeffs.size());
    for (std::size_t m = 0; m < out.coeffs.size(); ++m) out.omegas[m] = tr.theta[m] / series.dt;
    // zero-frequency coefficient: mean of the residual over the M-sample window
    double acc = 0.0;
    for (std::size_t j = 0; j < tr.M; ++j) {
        double t = static_cast<double>(j) * series.dt;
        acc += series.values[j] + sigma_prime * sigma_prime * t / 2 - v * t;
    }
    out.mean = acc / static_cast<double>(tr.M);
    return out;
}

}  // namespace hiddenprice
