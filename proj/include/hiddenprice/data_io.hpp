#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hiddenprice/estimation.hpp"
#include "hiddenprice/inference.hpp"
#include "hiddenprice/model.hpp"
#include "hiddenprice/strategy.hpp"
#include "hiddenprice/types.hpp"

namespace hiddenprice {

/// Parsed raw price rows prior to log transform and filtering.
struct RawPriceTable {
    std::vector<std::string> dates;
    std::vector<double> prices;   ///< NaN marks a missing value
};

/// Ingestion bookkeeping.
struct IngestReport {
    std::size_t n_rows_read = 0;
    std::size_t n_missing_skipped = 0;
    std::size_t n_used = 0;
    std::string first_date;
    std::string last_date;
};

namespace detail {

/// Split one CSV record, honoring double-quoted fields.
inline std::vector<std::string> split_csv(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Strict ISO-8601 date check (YYYY-MM-DD) with range validation.
inline bool parse_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    auto digits = [&](std::size_t from, std::size_t to, int& v) {
        v = 0;
        for (std::size_t i = from; i < to; ++i) {
            if (s[i] < '0' || s[i] > '9') return false;
            v = v * 10 + (s[i] - '0');
        }
        return true;
    };
    int y, m, d;
    if (!digits(0, 4, y) || !digits(5, 7, m) || !digits(8, 10, d)) return false;
    return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline bool is_missing(const std::string& field) { return field.empty() || field == "."; }

/// Fixed 12-significant-digit formatting for deterministic round-trips.
inline std::string num12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// RFC-4180-style quoting when a field needs it.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

}  // namespace detail

/**
 * Parse a delimited price file: header row naming the columns, ISO dates,
 * strictly increasing.  Missing prices ("." or empty) become NaN rows;
 * present prices must be positive.  Errors carry the offending row number.
 */
inline RawPriceTable read_price_table(const std::filesystem::path& path,
                                      const std::string& date_column = "DATE",
                                      const std::string& price_column = "SP500") {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw data_error(path.string() + ": empty file");
    auto header = detail::split_csv(line);
    std::size_t date_idx = header.size(), price_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == date_column) date_idx = i;
        if (header[i] == price_column) price_idx = i;
    }
    if (date_idx == header.size())
        throw data_error(path.string() + ": no column named '" + date_column + "'");
    if (price_idx == header.size())
        throw data_error(path.string() + ": no column named '" + price_column + "'");

    RawPriceTable table;
    std::string prev_date;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv(line);
        if (fields.size() <= std::max(date_idx, price_idx))
            throw data_error(path.string() + ":" + std::to_string(row) + ": too few fields");
        const std::string& date = fields[date_idx];
        if (!detail::parse_iso_date(date))
            throw data_error(path.string() + ":" + std::to_string(row) + ": unparseable date '" +
                             date + "'");
        if (!prev_date.empty() && date <= prev_date)
            throw data_error(path.string() + ":" + std::to_string(row) +
                             ": dates not strictly increasing");
        prev_date = date;
        const std::string& pf = fields[price_idx];
        if (detail::is_missing(pf)) {
            table.dates.push_back(date);
            table.prices.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double price;
        auto [ptr, ec] = std::from_chars(pf.data(), pf.data() + pf.size(), price);
        if (ec != std::errc() || ptr != pf.data() + pf.size())
            throw data_error(path.string() + ":" + std::to_string(row) + ": bad price '" + pf +
                             "'");
        if (!(price > 0.0))
            throw data_error(path.string() + ":" + std::to_string(row) +
                             ": non-positive price " + pf);
        table.dates.push_back(date);
        table.prices.push_back(price);
    }
    return table;
}

/**
 * Ingest a delimited price file into a log series.
 *
 * Rows whose price is missing are dropped, not interpolated; retained rows
 * are assigned uniform dt = 1 per trading day regardless of calendar gaps;
 * the [start, end] window is inclusive and applied before any counting.
 */
inline std::pair<LogSeries, IngestReport> ingest_csv(const std::filesystem::path& path,
                                                     const std::string& date_column = "DATE",
                                                     const std::string& price_column = "SP500",
                                                     const std::optional<std::string>& start = {},
                                                     const std::optional<std::string>& end = {}) {
    RawPriceTable table = read_price_table(path, date_column, price_column);
    LogSeries series;
    series.dt = 1.0;
    IngestReport rep;
    for (std::size_t i = 0; i < table.dates.size(); ++i) {
        const std::string& date = table.dates[i];
        if (start && date < *start) continue;
        if (end && date > *end) continue;
        ++rep.n_rows_read;
        if (std::isnan(table.prices[i])) {
            ++rep.n_missing_skipped;
            continue;
        }
        series.values.push_back(std::log(table.prices[i]));
        series.labels.push_back(date);
    }
    rep.n_used = series.values.size();
    if (!series.labels.empty()) {
        rep.first_date = series.labels.front();
        rep.last_date = series.labels.back();
    }
    if (series.values.size() < 16)
        throw size_error(path.string() + ": only " + std::to_string(series.values.size()) +
                         " usable rows, need at least 16");
    return {series, rep};
}

// ---------------------------------------------------------------------------
// Writers.  All output is deterministic: fixed column order, fixed precision.

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write " + path.string());
    out << text;
    if (!out) throw data_error("write failed for " + path.string());
}

/// Two-column simulation CSV plus a JSON side file with params and seed.
inline void write_simulation(const std::filesystem::path& csv_path, const SimulationOutput& sim) {
    std::ostringstream os;
    os << "observed,hidden\n";
    for (std::size_t i = 0; i < sim.observed.size(); ++i)
        os << detail::num12(sim.observed.values[i]) << ','
           << detail::num12(sim.hidden.values[i]) << '\n';
    write_text(csv_path, os.str());

    nlohmann::ordered_json j;
    j["sigma"] = sim.params.sigma;
    j["sigma_prime"] = sim.params.sigma_prime;
    j["k"] = sim.params.k;
    j["a"] = sim.params.a;
    j["rho"] = sim.params.rho;
    j["dt"] = sim.params.dt;
    j["seed"] = sim.seed;
    j["n_steps"] = sim.observed.size();
    auto jpath = csv_path;
    jpath.replace_extension(".json");
    write_text(jpath, j.dump(2) + "\n");
}

/// Read back a simulation CSV written by write_simulation.
inline std::pair<LogSeries, HiddenPath> read_simulation(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw data_error("cannot open " + csv_path.string());
    std::string line;
    std::getline(in, line);   // header
    LogSeries obs;
    HiddenPath hid;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv(line);
        if (f.size() != 2) throw data_error(csv_path.string() + ": bad row");
        obs.values.push_back(std::stod(f[0]));
        hid.values.push_back(std::stod(f[1]));
    }
    return {obs, hid};
}

/// Premium / smoother columns aligned with the input series, burn-in flagged.
inline void write_premiums(const std::filesystem::path& path, const LogSeries& series,
                           const PremiumSeries& prem,
                           const std::vector<double>* x0_endpoint = nullptr) {
    std::ostringstream os;
    os << "index,label,x,mu,ema_x,burn_in";
    if (x0_endpoint) os << ",x0_endpoint";
    os << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        os << i << ',' << (i < series.labels.size() ? detail::csv_field(series.labels[i]) : "")
           << ',' << detail::num12(series.values[i]);
        if (i < prem.mu.size())
            os << ',' << detail::num12(prem.mu[i]) << ',' << detail::num12(prem.ema_x[i]);
        else
            os << ",,";
        os << ',' << (i < prem.burn_in ? 1 : 0);
        if (x0_endpoint) os << ',' << detail::num12((*x0_endpoint)[i]);
        os << '\n';
    }
    write_text(path, os.str());
}

/// Smoothed paths for a list of rho values, optional plot offset column.
inline void write_smoother_paths(const std::filesystem::path& path, const LogSeries& series,
                                 const std::vector<std::pair<double, HiddenPath>>& paths,
                                 double plot_offset = 0.0) {
    std::ostringstream os;
    os << "index,label,x";
    for (const auto& pr : paths) os << ",x0_rho_" << detail::num12(pr.first);
    if (plot_offset != 0.0) {
        for (const auto& pr : paths) os << ",x0_offset_rho_" << detail::num12(pr.first);
    }
    os << '\n';
    for (std::size_t i = 0; i < series.size(); ++i) {
        os << i << ',' << (i < series.labels.size() ? detail::csv_field(series.labels[i]) : "")
           << ',' << detail::num12(series.values[i]);
        for (const auto& pr : paths) os << ',' << detail::num12(pr.second.values[i]);
        if (plot_offset != 0.0)
            for (const auto& pr : paths)
                os << ',' << detail::num12(pr.second.values[i] + plot_offset);
        os << '\n';
    }
    write_text(path, os.str());
}

inline nlohmann::ordered_json fit_result_json(const FitResult& fr) {
    nlohmann::ordered_json j;
    j["sigma"] = fr.params.sigma;
    j["sigma_prime"] = fr.params.sigma_prime;
    j["k"] = fr.params.k;
    j["a"] = fr.params.a;
    j["rho"] = fr.params.rho;
    j["dt"] = fr.params.dt;
    j["loglik"] = fr.loglik;
    j["aic"] = fr.aic;
    j["n_free_params"] = fr.n_free;
    j["converged"] = fr.converged;
    j["n_evals"] = fr.n_evals;
    nlohmann::ordered_json se = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < fr.std_errors.size() && i < fr.free_names.size(); ++i)
        se[fr.free_names[i]] = std::isfinite(fr.std_errors[i])
                                   ? nlohmann::ordered_json(fr.std_errors[i])
                                   : nlohmann::ordered_json();
    j["std_errors"] = se;
    return j;
}

/// Recovery table in the verification layout: parameter, ave, std1, std2.
inline void write_recovery_table(const std::filesystem::path& path, const RecoveryTable& table) {
    std::ostringstream os;
    os << "parameter,ave,std1,std2\n";
    for (const auto& row : table.rows) {
        os << row.name << ',' << detail::num12(row.ave) << ','
           << (std::isfinite(row.std1) ? detail::num12(row.std1) : std::string()) << ','
           << detail::num12(row.std2) << '\n';
    }
    write_text(path, os.str());
}

/// Aligned accumulated-return curves and positions.
inline void write_backtest(const std::filesystem::path& path, const LogSeries& series,
                           const BacktestReport& rep) {
    std::ostringstream os;
    os << "index,label,benchmark_cum,strategy_cum,position\n";
    for (std::size_t i = 0; i < rep.cum_benchmark.size(); ++i) {
        os << i << ',' << (i < series.labels.size() ? detail::csv_field(series.labels[i]) : "")
           << ',' << detail::num12(rep.cum_benchmark[i]) << ','
           << detail::num12(rep.cum_strategy[i]) << ',' << detail::num12(rep.holdings[i])
           << '\n';
    }
    write_text(path, os.str());
}

inline nlohmann::ordered_json backtest_json(const BacktestReport& rep,
                                            const RegressionReport* reg = nullptr) {
    nlohmann::ordered_json j;
    j["sharpe_strategy"] = rep.sharpe_strategy;
    j["sharpe_benchmark"] = rep.sharpe_benchmark;
    j["sharpe_ratio"] = rep.sharpe_ratio;
    if (reg) {
        nlohmann::ordered_json r;
        r["intercept"] = {{"estimate", reg->intercept},
                          {"se", reg->se_intercept},
                          {"t_stat", reg->t_intercept},
                          {"p_value", reg->p_intercept}};
        r["slope"] = {{"estimate", reg->slope},
                      {"se", reg->se_slope},
                      {"t_stat", reg->t_slope},
                      {"p_value", reg->p_slope}};
        r["n_obs"] = reg->n_obs;
        r["rmse"] = reg->rmse;
        r["r_squared"] = reg->r_squared;
        j["regression"] = r;
    }
    return j;
}

/// Per-mode likelihood-surface dump.
inline void write_mode_contributions(const std::filesystem::path& path,
                                     const std::vector<ModeContribution>& rows) {
    std::ostringstream os;
    os << "n,omega,power,contribution\n";
    for (const auto& r : rows)
        os << r.n << ',' << detail::num12(r.omega) << ',' << detail::num12(r.power) << ','
           << detail::num12(r.contribution) << '\n';
    write_text(path, os.str());
}

}  // namespace hiddenprice
