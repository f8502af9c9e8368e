#include <catch2/catch_amalgamated.hpp>

#include "hiddenprice/model.hpp"
#include "hiddenprice/strategy.hpp"

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

double stdev_of(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= v.size();
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

}  // namespace

TEST_CASE("a perfect predictor regresses to slope one, intercept zero") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    auto sim = simulate(p, 300, 5);
    PremiumSeries prem;
    prem.dt = 1.0;
    prem.mu.resize(sim.observed.size(), 0.0);
    prem.ema_x.resize(sim.observed.size(), 0.0);
    for (std::size_t i = 0; i + 1 < sim.observed.size(); ++i)
        prem.mu[i] = sim.observed.values[i + 1] - sim.observed.values[i];
    auto rep = regress_returns(sim.observed, prem);
    CHECK(rep.slope == Catch::Approx(1.0).margin(1e-10));
    CHECK(rep.intercept == Catch::Approx(0.0).margin(1e-12));
    CHECK(rep.r_squared == Catch::Approx(1.0).margin(1e-12));
    CHECK(rep.n_obs == sim.observed.size() - 1);
    CHECK(rep.rmse < 1e-12);
}

TEST_CASE("regression errors on degenerate inputs") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    auto sim = simulate(p, 64, 6);
    PremiumSeries flat;
    flat.mu.assign(sim.observed.size(), 0.01);
    flat.ema_x.assign(sim.observed.size(), 0.0);
    CHECK_THROWS_AS(regress_returns(sim.observed, flat), degenerate_error);
    PremiumSeries misaligned;
    misaligned.mu.assign(10, 0.0);
    CHECK_THROWS_AS(regress_returns(sim.observed, misaligned), usage_error);
    LogSeries three;
    three.values = {0.0, 0.1, 0.2};
    PremiumSeries p3;
    p3.mu = {0.0, 0.1, 0.2};
    p3.ema_x = p3.mu;
    CHECK_THROWS_AS(regress_returns(three, p3), size_error);
}

TEST_CASE("regression on simulated data recovers the model calibration") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.5);
    auto sim = simulate(p, 5000, 7);
    auto prem = risk_premium(sim.observed, p);
    auto rep = regress_returns(sim.observed, prem);
    CHECK(std::abs(rep.slope - 1.0) < 2 * rep.se_slope);
    CHECK(std::abs(rep.intercept) < 2 * rep.se_intercept);
    // R^2 near Var(mu)/(Var(mu) + sigma'^2 dt)
    double vmu = stdev_of(prem.mu);
    vmu *= vmu;
    double expect = vmu / (vmu + p.sigma_prime * p.sigma_prime * p.dt);
    CHECK(rep.r_squared == Catch::Approx(expect).epsilon(0.5));
    // p-values live in [0, 1] and the slope is significant here
    CHECK(rep.p_slope < 0.05);
    CHECK(rep.p_intercept >= 0.0);
    CHECK(rep.p_intercept <= 1.0);
}

TEST_CASE("t statistic p-values match known reference points") {
    // two-sided Student t: t = 2.0, nu = 10 -> 0.0734; t = 1.0, nu = 1 -> 0.5
    CHECK(detail::student_t_pvalue(2.0, 10) == Catch::Approx(0.0734).margin(2e-4));
    CHECK(detail::student_t_pvalue(1.0, 1) == Catch::Approx(0.5).margin(1e-6));
    CHECK(detail::student_t_pvalue(0.0, 5) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("constant premium collapses the strategy onto the benchmark") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    auto sim = simulate(p, 400, 8);
    PremiumSeries prem;
    prem.mu.assign(sim.observed.size(), 0.004);
    prem.ema_x.assign(sim.observed.size(), 0.0);
    auto rep = backtest(sim.observed, prem, p);
    for (std::size_t i = 0; i < rep.cum_strategy.size(); ++i)
        CHECK(rep.cum_strategy[i] == Catch::Approx(rep.cum_benchmark[i]).margin(1e-10));
    CHECK(rep.sharpe_ratio == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("normalization equalizes standard deviations and is idempotent") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    auto sim = simulate(p, 600, 9);
    auto prem = risk_premium(sim.observed, p);
    auto rep = backtest(sim.observed, prem, p);
    CHECK(stdev_of(rep.strategy_returns) ==
          Catch::Approx(stdev_of(rep.benchmark_returns)).epsilon(1e-12));
    // feeding the scaled stream back through the same scaling changes nothing
    double sb = stdev_of(rep.benchmark_returns);
    double ss = stdev_of(rep.strategy_returns);
    double again = sb / ss;
    CHECK(again == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("positions are strictly causal") {
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    auto sim = simulate(p, 300, 10);
    auto prem_full = risk_premium(sim.observed, p);
    auto rep_full = backtest(sim.observed, prem_full, p);
    for (std::size_t cut : {60u, 150u, 299u}) {
        LogSeries prefix;
        prefix.dt = sim.observed.dt;
        prefix.values.assign(sim.observed.values.begin(), sim.observed.values.begin() + cut + 1);
        auto prem_cut = risk_premium(prefix, p);
        auto rep_cut = backtest(prefix, prem_cut, p);
        for (std::size_t i = 0; i < rep_cut.holdings.size(); ++i)
            CHECK(rep_cut.holdings[i] == rep_full.holdings[i]);   // future never leaks
    }
}

TEST_CASE("all-zero premiums are refused") {
    auto p = make_params(0.05, 0.1, 0.2, 0.0, 0.0);
    auto sim = simulate(p, 100, 11);
    PremiumSeries prem;
    prem.mu.assign(sim.observed.size(), 0.0);
    prem.ema_x.assign(sim.observed.size(), 0.0);
    CHECK_THROWS_AS(backtest(sim.observed, prem, p), degenerate_error);
}

TEST_CASE("mean reversion regime rewards the strategy on average") {
    // sign consistency over seeds: sigma < sigma' and homoskedastic noise
    auto p = make_params(0.05, 0.1, 0.2, 0.002, 0.0);
    int wins = 0, total = 24;
    for (int s = 0; s < total; ++s) {
        auto sim = simulate(p, 1500, 1000 + s);
        auto prem = risk_premium(sim.observed, p);
        auto rep = backtest(sim.observed, prem, p);
        if (rep.sharpe_strategy > rep.sharpe_benchmark) ++wins;
    }
    CHECK(wins > total / 2);
}
