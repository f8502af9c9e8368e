#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hiddenprice {

/// Invalid model parameters (domain violation).
struct param_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Input series too short for the requested operation.
struct size_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-domain input data (CSV rows, dates, prices).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation is undefined for these inputs (k = 0, zero variance, ...).
struct degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite intermediate or result.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched arguments (different series, incompatible reports).
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * Parameters of the two-variable hidden price model.
 *
 * The hidden log price X0 drifts at rate a with volatility sigma; the
 * observed log price X reverts toward X0 at rate k with volatility
 * sigma_prime; the two driving noises have correlation rho.  All rates
 * and volatilities are per unit time; dt is the sampling step.
 */
struct ModelParams {
    double sigma = 0.05;        ///< volatility of the hidden log price (1/sqrt(step))
    double sigma_prime = 0.1;   ///< volatility of the market log price (1/sqrt(step))
    double k = 0.2;             ///< reversion rate of X toward X0 (1/step)
    double a = 0.0;             ///< drift of the hidden price (1/step)
    double rho = 0.0;           ///< instantaneous noise correlation
    double dt = 1.0;            ///< sampling step

    /// Drift of the hidden log price, a - sigma^2/2.
    double mu0() const { return a - sigma * sigma / 2; }

    /// Drift of the Ito-shifted observed log price, a - sigma^2/2 + sigma'^2/2.
    double b_drift() const { return a - sigma * sigma / 2 + sigma_prime * sigma_prime / 2; }

    /// Decay rate of the inference EMA, k*sigma/sigma'.
    double lambda() const { return k * sigma / sigma_prime; }

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw param_error("sigma must be positive, got " + std::to_string(sigma));
        if (!(sigma_prime > 0.0) || !std::isfinite(sigma_prime))
            throw param_error("sigma_prime must be positive, got " + std::to_string(sigma_prime));
        if (!(k >= 0.0) || !std::isfinite(k))
            throw param_error("k must be non-negative, got " + std::to_string(k));
        if (!(rho > -1.0 && rho < 1.0))
            throw param_error("rho must lie in (-1, 1), got " + std::to_string(rho));
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw param_error("dt must be positive, got " + std::to_string(dt));
        // k*dt >= 1 makes the discrete reversion oscillatory and every
        // derived formula meaningless.
        if (k * dt >= 1.0)
            throw param_error("k*dt must be < 1, got " + std::to_string(k * dt));
    }

    bool is_valid() const noexcept {
        return sigma > 0 && sigma_prime > 0 && k >= 0 && rho > -1 && rho < 1 && dt > 0 &&
               k * dt < 1 && std::isfinite(sigma) && std::isfinite(sigma_prime) &&
               std::isfinite(k) && std::isfinite(a) && std::isfinite(dt);
    }
};

/**
 * Uniformly spaced observed log-price series.
 *
 * Values are natural logs of prices; spacing is dt steps per sample.
 * Labels, when present, carry the source timestamps (one per value).
 */
struct LogSeries {
    std::vector<double> values;
    double dt = 1.0;
    std::vector<std::string> labels;   ///< optional, empty or one per value

    std::size_t size() const { return values.size(); }

    /// Time span covered by the samples, (n-1)*dt.
    double span() const { return values.empty() ? 0.0 : (values.size() - 1) * dt; }

    void validate(std::size_t min_len = 2) const {
        if (values.size() < min_len)
            throw size_error("series has " + std::to_string(values.size()) +
                             " samples, need at least " + std::to_string(min_len));
        if (!(dt > 0.0)) throw data_error("series dt must be positive");
        for (double v : values)
            if (!std::isfinite(v)) throw data_error("series contains a non-finite value");
        if (!labels.empty() && labels.size() != values.size())
            throw data_error("label count does not match value count");
    }

    /// FNV-1a over the raw value bytes; used to detect mismatched inputs.
    std::uint64_t fingerprint() const noexcept {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ull;
            }
        };
        std::uint64_t n = values.size();
        mix(&n, sizeof n);
        mix(&dt, sizeof dt);
        if (!values.empty()) mix(values.data(), values.size() * sizeof(double));
        return h;
    }
};

/// Most-probable hidden log-price path, aligned with its observed series.
struct HiddenPath {
    std::vector<double> values;
    double dt = 1.0;

    std::size_t size() const { return values.size(); }
};

}  // namespace hiddenprice
