#include <catch2/catch_amalgamated.hpp>

#include "hiddenprice/model.hpp"

using namespace hiddenprice;

namespace {

ModelParams make_params(double s, double sp, double k, double a, double rho, double dt = 1.0) {
    ModelParams p;
    p.sigma = s;
    p.sigma_prime = sp;
    p.k = k;
    p.a = a;
    p.rho = rho;
    p.dt = dt;
    return p;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
}

double var_of(const std::vector<double>& v) {
    double m = mean_of(v), s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("parameter validation rejects out-of-domain values") {
    CHECK_THROWS_AS(make_params(-0.1, 0.1, 0.2, 0, 0).validate(), param_error);
    CHECK_THROWS_AS(make_params(0.1, 0.0, 0.2, 0, 0).validate(), param_error);
    CHECK_THROWS_AS(make_params(0.1, 0.1, -0.2, 0, 0).validate(), param_error);
    CHECK_THROWS_AS(make_params(0.1, 0.1, 0.2, 0, 1.0).validate(), param_error);
    CHECK_THROWS_AS(make_params(0.1, 0.1, 0.2, 0, 0, 0.0).validate(), param_error);
    CHECK_THROWS_AS(make_params(0.1, 0.1, 1.2, 0, 0, 1.0).validate(), param_error);
    CHECK_NOTHROW(make_params(0.1, 0.1, 0.0, 0, 0).validate());
}

TEST_CASE("simulate rejects short runs and is deterministic per seed") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.5);
    CHECK_THROWS_AS(simulate(p, 1, 7), size_error);
    auto a = simulate(p, 400, 7);
    auto b = simulate(p, 400, 7);
    CHECK(a.observed.values == b.observed.values);   // byte-identical replay
    CHECK(a.hidden.values == b.hidden.values);
    auto c = simulate(p, 400, 8);
    CHECK(a.observed.values != c.observed.values);
}

TEST_CASE("zero noise pins the exact drift terms") {
    auto p = make_params(0.3, 0.4, 0.25, 0.125, 0.0);
    auto out = simulate_with_noise(p, 2, [] { return std::pair<double, double>{0.0, 0.0}; },
                                   0.0, 0.0);
    CHECK(out.hidden.values[1] == Catch::Approx(0.125 - 0.3 * 0.3 / 2).epsilon(1e-14));
    CHECK(out.observed.values[1] == Catch::Approx(-0.4 * 0.4 / 2).epsilon(1e-14));
}

TEST_CASE("innovation moments match the generator (Monte Carlo oracle)") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.5);
    const std::size_t n = 100000;
    auto sim = simulate(p, n, 123);
    // residualize both increments: A = dX0 - mu0 dt, B = dX + k(X - X0)dt + sigma'^2 dt/2
    std::vector<double> A(n - 1), B(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j) {
        A[j] = sim.hidden.values[j + 1] - sim.hidden.values[j] - p.mu0() * p.dt;
        B[j] = sim.observed.values[j + 1] - sim.observed.values[j] +
               p.k * (sim.observed.values[j] - sim.hidden.values[j]) * p.dt +
               p.sigma_prime * p.sigma_prime * p.dt / 2;
    }
    double vB = var_of(B);
    double se_var = p.sigma_prime * p.sigma_prime * p.dt * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(vB - p.sigma_prime * p.sigma_prime * p.dt) < 3 * se_var);
    double vA = var_of(A);
    CHECK(std::abs(vA - p.sigma * p.sigma * p.dt) < 3 * p.sigma * p.sigma * std::sqrt(2.0 / (n - 1)));
    double mA = mean_of(A), mB = mean_of(B);
    double corr = 0;
    for (std::size_t j = 0; j + 1 < n; ++j) corr += (A[j] - mA) * (B[j] - mB);
    corr /= (n - 2) * std::sqrt(vA * vB);
    CHECK(std::abs(corr - 0.5) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("k = 0 decouples the observed increments into iid normals") {
    auto p = make_params(0.3, 0.1, 0.0, 0.05, 0.0);
    const std::size_t n = 100000;
    auto sim = simulate(p, n, 321);
    std::vector<double> w(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
        w[j] = sim.observed.values[j + 1] - sim.observed.values[j];
    double target_mean = -p.sigma_prime * p.sigma_prime * p.dt / 2;
    double se_mean = p.sigma_prime * std::sqrt(p.dt / (n - 1));
    CHECK(std::abs(mean_of(w) - target_mean) < 3 * se_mean);
    double target_var = p.sigma_prime * p.sigma_prime * p.dt;
    CHECK(std::abs(var_of(w) - target_var) < 3 * target_var * std::sqrt(2.0 / (n - 1)));
    // lag-1 autocorrelation of increments vanishes when decoupled
    double m = mean_of(w), c1 = 0, c0 = 0;
    for (std::size_t j = 0; j + 2 < n; ++j) c1 += (w[j] - m) * (w[j + 1] - m);
    for (std::size_t j = 0; j + 1 < n; ++j) c0 += (w[j] - m) * (w[j] - m);
    CHECK(std::abs(c1 / c0) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("extreme correlation drives the residual correlation to +-1") {
    for (double rho : {0.995, -0.995}) {
        auto p = make_params(0.05, 0.1, 0.2, 0.0, rho);
        const std::size_t n = 20000;
        auto sim = simulate(p, n, 55);
        std::vector<double> A(n - 1), B(n - 1);
        for (std::size_t j = 0; j + 1 < n; ++j) {
            A[j] = sim.hidden.values[j + 1] - sim.hidden.values[j] - p.mu0() * p.dt;
            B[j] = sim.observed.values[j + 1] - sim.observed.values[j] +
                   p.k * (sim.observed.values[j] - sim.hidden.values[j]) * p.dt +
                   p.sigma_prime * p.sigma_prime * p.dt / 2;
        }
        double mA = mean_of(A), mB = mean_of(B), acc = 0;
        for (std::size_t j = 0; j + 1 < n; ++j) acc += (A[j] - mA) * (B[j] - mB);
        double corr = acc / ((n - 2) * std::sqrt(var_of(A) * var_of(B)));
        CHECK(std::abs(corr - rho) < 0.01);
    }
}

TEST_CASE("market price tracks the hidden path at the stationary offset") {
    // Fig-1-style parameters; the long-run mean of X - X0 is -sigma'^2/(2k)
    auto p = make_params(0.5, 1.0, 0.2, 0.125, 0.0);
    auto sim = simulate(p, 500, 42);
    std::vector<double> gap(sim.observed.size());
    for (std::size_t j = 0; j < gap.size(); ++j)
        gap[j] = sim.observed.values[j] - sim.hidden.values[j];
    double expect = -p.sigma_prime * p.sigma_prime / (2 * p.k);
    // stationary std of the gap is ~1.9; the mean over an autocorrelated
    // window of 500 steps should land well within one stationary std
    CHECK(std::abs(mean_of(gap) - expect) < 1.9);
}
