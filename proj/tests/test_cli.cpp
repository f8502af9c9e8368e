#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hiddenprice/data_io.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_bin() {
    const char* p = std::getenv("HIDDENPRICE_BIN");
    REQUIRE(p != nullptr);
    return p;
}

int run(const std::string& args, const fs::path& log) {
    std::string cmd = cli_bin() + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* tag) {
        path = fs::temp_directory_path() / (std::string("hp_cli_") + tag + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
};

std::string serial_date(int serial) {   // days since 2010-01-01, ISO output
    static const int mdays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int y = 2010, m = 0, d = serial;
    for (;;) {
        int in_month = mdays[m];
        if (d < in_month) break;
        d -= in_month;
        if (++m == 12) {
            m = 0;
            ++y;
        }
    }
    std::ostringstream os;
    os << y << '-' << (m + 1 < 10 ? "0" : "") << m + 1 << '-' << (d + 1 < 10 ? "0" : "")
       << d + 1;
    return os.str();
}

/// simulated daily price CSV in the ingestion format
fs::path make_price_csv(const fs::path& dir, std::size_t n, std::uint64_t seed) {
    hiddenprice::ModelParams p;
    p.sigma = 0.008;
    p.sigma_prime = 0.011;
    p.k = 0.1;
    p.a = 0.0006;
    auto sim = hiddenprice::simulate(p, n, seed);
    std::ostringstream os;
    os << "DATE,SP500\n";
    for (std::size_t i = 0; i < n; ++i)
        os << serial_date(static_cast<int>(i)) << ','
           << hiddenprice::detail::num12(std::exp(sim.observed.values[i] + 7.0)) << '\n';
    auto f = dir / "prices.csv";
    std::ofstream out(f);
    out << os.str();
    return f;
}

}  // namespace

TEST_CASE("simulate runs are byte-identical per seed") {
    TempDir tmp("sim");
    auto log = tmp.path / "log.txt";
    std::string common = "simulate --n-steps 300 --params 0.5,1,0.2,0.125,0 --seed 9";
    REQUIRE(run(common + " --output-dir " + (tmp.path / "a").string(), log) == 0);
    REQUIRE(run(common + " --output-dir " + (tmp.path / "b").string(), log) == 0);
    CHECK(slurp(tmp.path / "a" / "simulation.csv") == slurp(tmp.path / "b" / "simulation.csv"));
    CHECK(slurp(tmp.path / "a" / "simulation.json") == slurp(tmp.path / "b" / "simulation.json"));
    CHECK(slurp(tmp.path / "a" / "config.json") != "");
    // a different seed changes the data
    REQUIRE(run("simulate --n-steps 300 --params 0.5,1,0.2,0.125,0 --seed 10 --output-dir " +
                    (tmp.path / "c").string(),
                log) == 0);
    CHECK(slurp(tmp.path / "a" / "simulation.csv") != slurp(tmp.path / "c" / "simulation.csv"));
}

TEST_CASE("fit writes model, baseline, and AIC comparison") {
    TempDir tmp("fit");
    auto csv = make_price_csv(tmp.path, 400, 77);
    auto log = tmp.path / "log.txt";
    int rc = run("fit --input " + csv.string() + " --output-dir " + (tmp.path / "out").string(),
                 log);
    INFO(slurp(log));
    REQUIRE(rc == 0);
    auto j = nlohmann::json::parse(slurp(tmp.path / "out" / "fit.json"));
    CHECK(j.contains("model"));
    CHECK(j.contains("gbm"));
    CHECK(j.contains("delta_aic"));
    CHECK(j["model"]["converged"] == true);
    CHECK(j["gbm"]["n_free_params"] == 2);
}

TEST_CASE("infer emits smoothed paths for the rho list plus endpoint track") {
    TempDir tmp("infer");
    auto csv = make_price_csv(tmp.path, 350, 78);
    auto log = tmp.path / "log.txt";
    int rc = run("infer --input " + csv.string() +
                     " --params 0.008,0.011,0.05,0.0006,0 --rho-list -0.5 0 0.5 --output-dir " +
                     (tmp.path / "out").string(),
                 log);
    INFO(slurp(log));
    REQUIRE(rc == 0);
    auto head = slurp(tmp.path / "out" / "smoother_paths.csv");
    CHECK(head.substr(0, head.find('\n')) ==
          "index,label,x,x0_rho_-0.5,x0_rho_0,x0_rho_0.5,"
          "x0_offset_rho_-0.5,x0_offset_rho_0,x0_offset_rho_0.5");
    // the three paths end at the same causal point
    std::istringstream in(head);
    std::string line, last;
    std::getline(in, line);
    while (std::getline(in, line))
        if (!line.empty()) last = line;
    std::vector<double> cols;
    std::stringstream ls(last);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
        try {
            cols.push_back(std::stod(tok));
        } catch (...) {
            cols.push_back(0);
        }
    }
    CHECK(std::abs(cols[3] - cols[4]) < 1e-9);
    CHECK(std::abs(cols[4] - cols[5]) < 1e-9);
    CHECK(fs::exists(tmp.path / "out" / "endpoint_track.csv"));
}

TEST_CASE("forecast and backtest pipelines produce aligned artifacts") {
    TempDir tmp("bt");
    auto csv = make_price_csv(tmp.path, 500, 79);
    auto log = tmp.path / "log.txt";
    REQUIRE(run("forecast --input " + csv.string() + " --params 0.008,0.011,0.05,0.0006,0" +
                    " --output-dir " + (tmp.path / "fc").string(),
                log) == 0);
    CHECK(fs::exists(tmp.path / "fc" / "premiums.csv"));
    int rc = run("backtest --input " + csv.string() + " --params 0.008,0.011,0.05,0.0006,0" +
                     " --output-dir " + (tmp.path / "bt").string(),
                 log);
    INFO(slurp(log));
    REQUIRE(rc == 0);
    auto j = nlohmann::json::parse(slurp(tmp.path / "bt" / "summary.json"));
    CHECK(j.contains("sharpe_ratio"));
    CHECK(j["regression"].contains("slope"));
    auto csv_text = slurp(tmp.path / "bt" / "backtest.csv");
    CHECK(csv_text.substr(0, csv_text.find('\n')) ==
          "index,label,benchmark_cum,strategy_cum,position");
}

TEST_CASE("config file fills unset flags; command line wins") {
    TempDir tmp("cfg");
    auto csv = make_price_csv(tmp.path, 300, 80);
    std::ofstream cfg(tmp.path / "run.json");
    cfg << "{\"params\": \"0.008,0.011,0.05,0.0006,0\", \"output-dir\": \""
        << (tmp.path / "from_cfg").string() << "\"}";
    cfg.close();
    auto log = tmp.path / "log.txt";
    REQUIRE(run("forecast --input " + csv.string() + " --config " +
                    (tmp.path / "run.json").string(),
                log) == 0);
    CHECK(fs::exists(tmp.path / "from_cfg" / "premiums.csv"));
    // CLI flag beats the config value
    REQUIRE(run("forecast --input " + csv.string() + " --config " +
                    (tmp.path / "run.json").string() + " --output-dir " +
                    (tmp.path / "cli_wins").string(),
                log) == 0);
    CHECK(fs::exists(tmp.path / "cli_wins" / "premiums.csv"));
    auto resolved = nlohmann::json::parse(slurp(tmp.path / "cli_wins" / "config.json"));
    CHECK(resolved["params"] == "0.008,0.011,0.05,0.0006,0");
}

TEST_CASE("exit codes distinguish usage, data, and numeric failures") {
    TempDir tmp("codes");
    auto log = tmp.path / "log.txt";
    // usage: infer without --params
    auto csv = make_price_csv(tmp.path, 100, 81);
    CHECK(run("infer --input " + csv.string() + " --output-dir " + (tmp.path / "u").string(),
              log) == 64);
    // usage: bad parameter domain
    CHECK(run("simulate --params 0.5,1,0.2,0.125,3 --output-dir " + (tmp.path / "p").string(),
              log) == 64);
    // data: missing file
    CHECK(run("fit --input " + (tmp.path / "absent.csv").string() + " --output-dir " +
                  (tmp.path / "d").string(),
              log) == 65);
    // data: too short after windowing
    CHECK(run("fit --input " + csv.string() + " --start 2010-01-01 --end 2010-01-05" +
                  " --output-dir " + (tmp.path / "s").string(),
              log) == 65);
    // numeric/degenerate: k = 0 premium forecast
    CHECK(run("forecast --input " + csv.string() + " --params 0.008,0.011,0,0.0006,0" +
                  " --output-dir " + (tmp.path / "n").string(),
              log) == 70);
}

TEST_CASE("verify passes clean and fails the injected corruption by name") {
    TempDir tmp("verify");
    auto log = tmp.path / "log.txt";
    REQUIRE(run("verify --n-series 4 --n-steps 220 --seed 5 --output-dir " +
                    (tmp.path / "ok").string(),
                log) == 0);
    auto rep = nlohmann::json::parse(slurp(tmp.path / "ok" / "verify_report.json"));
    CHECK(rep["all_passed"] == true);
    CHECK(run("verify --n-series 4 --n-steps 220 --seed 5 --inject-fault likelihood-sign" +
                  std::string(" --output-dir ") + (tmp.path / "bad").string(),
              log) == 75);
    auto text = slurp(log);
    CHECK(text.find("[FAIL] spectral-vs-kalman") != std::string::npos);
}

TEST_CASE("a million-step simulation completes within the wall-clock budget") {
    TempDir tmp("perf");
    auto log = tmp.path / "log.txt";
    auto t0 = std::chrono::steady_clock::now();
    REQUIRE(run("simulate --n-steps 1000000 --params 0.05,0.1,0.2,0.002,0 --seed 3 "
                "--output-dir " +
                    (tmp.path / "big").string(),
                log) == 0);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    INFO("simulate 1e6 took " << secs << " s");
    CHECK(secs < 10.0);
    CHECK(fs::file_size(tmp.path / "big" / "simulation.csv") > 20000000);
}
