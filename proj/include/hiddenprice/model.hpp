#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "hiddenprice/types.hpp"

namespace hiddenprice {

namespace detail {

/**
 * Deterministic standard-normal pair source: mt19937_64 + Box-Muller.
 *
 * std::normal_distribution is implementation-defined, so replaying a seed
 * would not be portable across standard libraries; Box-Muller over the
 * raw 64-bit stream is.
 */
class GaussianPairs {
  public:
    explicit GaussianPairs(std::uint64_t seed) : eng_(seed) {}

    /// Two independent N(0,1) draws.
    std::pair<double, double> next() {
        double u1 = uniform_open();   // in (0,1], log-safe
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double phi = 2.0 * M_PI * u2;
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    double uniform_open() {
        // 53-bit mantissa in [0,1), flipped to (0,1]
        return 1.0 - static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 eng_;
};

}  // namespace detail

/// One simulated realization: observed series, hidden path, and the seed used.
struct SimulationOutput {
    LogSeries observed;
    HiddenPath hidden;
    std::uint64_t seed = 0;
    ModelParams params;
};

/**
 * Advance the coupled process with caller-supplied noise.
 *
 * Per step: X0 += (a - sigma^2/2) dt + sigma sqrt(dt) z,
 *           X  += (-k (X - X0) - sigma'^2/2) dt + sigma' sqrt(dt) z',
 * with X - X0 taken at the step's start and z' = rho z + sqrt(1-rho^2) z2.
 *
 * The noise source is a callable returning a pair of independent N(0,1)
 * draws; tests drive it with zeros to pin the drift terms.
 */
template <typename NoiseSource>
SimulationOutput simulate_with_noise(const ModelParams& params, std::size_t n_steps,
                                     NoiseSource&& noise, double x_init, double x0_init) {
    params.validate();
    if (n_steps < 2) throw size_error("simulate: n_steps must be >= 2");

    const double dt = params.dt;
    const double sdt = std::sqrt(dt);
    const double mu0 = params.mu0();
    const double half_sp2 = params.sigma_prime * params.sigma_prime / 2;
    const double cross = params.rho;
    const double ortho = std::sqrt(1.0 - params.rho * params.rho);

    SimulationOutput out;
    out.params = params;
    out.observed.dt = dt;
    out.hidden.dt = dt;
    out.observed.values.resize(n_steps);
    out.hidden.values.resize(n_steps);
    out.observed.values[0] = x_init;
    out.hidden.values[0] = x0_init;

    double x = x_init, x0 = x0_init;
    for (std::size_t j = 1; j < n_steps; ++j) {
        auto [z, z2] = noise();
        double zp = cross * z + ortho * z2;
        double x0_next = x0 + mu0 * dt + params.sigma * sdt * z;
        double x_next = x + (-params.k * (x - x0) - half_sp2) * dt + params.sigma_prime * sdt * zp;
        x0 = x0_next;
        x = x_next;
        out.hidden.values[j] = x0;
        out.observed.values[j] = x;
    }
    return out;
}

/// Simulate n_steps samples of the coupled process. Deterministic per seed.
inline SimulationOutput simulate(const ModelParams& params, std::size_t n_steps,
                                 std::uint64_t seed, double x_init = 0.0, double x0_init = 0.0) {
    detail::GaussianPairs g(seed);
    auto out = simulate_with_noise(params, n_steps, [&g] { return g.next(); }, x_init, x0_init);
    out.seed = seed;
    return out;
}

}  // namespace hiddenprice
