// SPDX-License-Identifier: Apache-2.0
//
// onebit - channel estimation for massive MIMO with one-bit ADCs
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Monte Carlo harness behind the command-line tool: run configuration, trial
// runners for every subcommand, CSV rows and JSON summaries.
//
// Seeds: every random stream of a trial is derive_seed(master, tag, {L,
// snr_key, trial}). The channel, pilots and data-phase symbols use fixed tags
// and are shared by all schemes of a cell; each scheme's own noise and
// thresholds use the scheme name as tag, so adding or removing a scheme never
// changes another scheme's numbers.

#include "onebit/crb.hpp"
#include "onebit/detect.hpp"
#include "onebit/errors.hpp"
#include "onebit/model.hpp"
#include "onebit/parallel.hpp"
#include "onebit/rng.hpp"
#include "onebit/schemes.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace onebit
{

enum class PilotKind { Orthogonal, Random };

struct ExperimentConfig
{
    int M = 16;
    int K = 8;
    std::vector<int> L{32};
    std::vector<double> snr_db{15.0};
    std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
    int i_max = 5;
    int trials = 200;
    std::uint64_t seed = 1;
    double sigma_h2 = 1.0;
    double sigma2 = 1.0;
    PilotKind pilots = PilotKind::Orthogonal;
    int frames = 1000;        // data-phase frames per trial
    bool perfect_csi = true;  // detect-ser / rate: also detect with the true channel
    int max_users = kDefaultMaxUsers;
    double rate_cap = kDefaultRateCap;
    int threads = 1;
    bool timing = false;      // wall_ms stays 0 unless set, keeping CSVs byte-stable
    std::string out_dir;

    void validate() const
    {
        if (M < 1) throw ConfigError("M", "must be at least 1");
        if (K < 1) throw ConfigError("K", "must be at least 1");
        if (L.empty()) throw ConfigError("L", "needs at least one value");
        for (int l : L) {
            if (l < K) throw ConfigError("L", "every L must satisfy L >= K (got " + std::to_string(l) + ")");
        }
        if (snr_db.empty()) throw ConfigError("snr_db", "needs at least one value");
        for (double s : snr_db) {
            if (!std::isfinite(s)) throw ConfigError("snr_db", "must be finite");
        }
        if (schemes.empty()) throw ConfigError("schemes", "must not be empty");
        if (i_max < 1) throw ConfigError("i_max", "must be at least 1");
        if (trials < 1) throw ConfigError("trials", "must be at least 1");
        if (!(sigma_h2 > 0.0) || !std::isfinite(sigma_h2)) throw ConfigError("sigma_h2", "must be positive");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2", "must be positive");
        if (frames < 1) throw ConfigError("frames", "must be at least 1");
        if (max_users < 1) throw ConfigError("max_users", "must be at least 1");
        if (!(rate_cap > 0.0)) throw ConfigError("rate_cap", "must be positive");
        if (threads < 1) throw ConfigError("threads", "must be at least 1");
    }
};

namespace detail
{

template <typename T>
T json_field(const nlohmann::json &j, const std::string &key)
{
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(key, e.what());
    }
}

// A scalar or a list of scalars.
template <typename T>
std::vector<T> json_list(const nlohmann::json &j, const std::string &key)
{
    const nlohmann::json &v = j.at(key);
    if (!v.is_array()) {
        return {json_field<T>(j, key)};
    }
    try {
        return v.get<std::vector<T>>();
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(key, e.what());
    }
}

} // namespace detail

inline std::vector<Scheme> parse_scheme_list(const std::vector<std::string> &names)
{
    std::vector<Scheme> out;
    for (const auto &n : names) {
        const auto s = parse_scheme(n);
        if (!s) {
            throw ConfigError("schemes", "unknown scheme '" + n + "' (expected FQ, RQ, AQ, OQ, NQ)");
        }
        if (std::find(out.begin(), out.end(), *s) == out.end()) {
            out.push_back(*s);
        }
    }
    return out;
}

// Overlay the keys present in `j` onto `cfg`. Unknown keys are rejected so a
// typo cannot silently fall back to a default.
inline void apply_json(ExperimentConfig &cfg, const nlohmann::json &j)
{
    if (!j.is_object()) {
        throw ConfigError("<root>", "config must be a JSON object");
    }
    static const std::set<std::string> known{"M",      "K",           "L",         "snr_db",   "schemes",
                                             "i_max",  "trials",      "seed",      "sigma_h2", "sigma2",
                                             "pilots", "frames",      "perfect_csi", "max_users", "rate_cap",
                                             "threads", "timing",     "out_dir"};
    for (const auto &[key, value] : j.items()) {
        if (!known.count(key)) {
            throw ConfigError(key, "unknown field");
        }
    }
    using detail::json_field;
    if (j.contains("M")) cfg.M = json_field<int>(j, "M");
    if (j.contains("K")) cfg.K = json_field<int>(j, "K");
    if (j.contains("L")) cfg.L = detail::json_list<int>(j, "L");
    if (j.contains("snr_db")) cfg.snr_db = detail::json_list<double>(j, "snr_db");
    if (j.contains("schemes")) cfg.schemes = parse_scheme_list(detail::json_list<std::string>(j, "schemes"));
    if (j.contains("i_max")) cfg.i_max = json_field<int>(j, "i_max");
    if (j.contains("trials")) cfg.trials = json_field<int>(j, "trials");
    if (j.contains("seed")) cfg.seed = json_field<std::uint64_t>(j, "seed");
    if (j.contains("sigma_h2")) cfg.sigma_h2 = json_field<double>(j, "sigma_h2");
    if (j.contains("sigma2")) cfg.sigma2 = json_field<double>(j, "sigma2");
    if (j.contains("pilots")) {
        const auto p = json_field<std::string>(j, "pilots");
        if (p == "orthogonal") {
            cfg.pilots = PilotKind::Orthogonal;
        } else if (p == "random") {
            cfg.pilots = PilotKind::Random;
        } else {
            throw ConfigError("pilots", "expected \"orthogonal\" or \"random\"");
        }
    }
    if (j.contains("frames")) cfg.frames = json_field<int>(j, "frames");
    if (j.contains("perfect_csi")) cfg.perfect_csi = json_field<bool>(j, "perfect_csi");
    if (j.contains("max_users")) cfg.max_users = json_field<int>(j, "max_users");
    if (j.contains("rate_cap")) cfg.rate_cap = json_field<double>(j, "rate_cap");
    if (j.contains("threads")) cfg.threads = json_field<int>(j, "threads");
    if (j.contains("timing")) cfg.timing = json_field<bool>(j, "timing");
    if (j.contains("out_dir")) cfg.out_dir = json_field<std::string>(j, "out_dir");
}

// Config echo for summaries. threads, timing and out_dir are left out: they
// do not change any result.
inline nlohmann::ordered_json to_json(const ExperimentConfig &cfg)
{
    std::vector<std::string> names;
    for (Scheme s : cfg.schemes) {
        names.emplace_back(to_string(s));
    }
    return {{"M", cfg.M},
            {"K", cfg.K},
            {"L", cfg.L},
            {"snr_db", cfg.snr_db},
            {"schemes", names},
            {"i_max", cfg.i_max},
            {"trials", cfg.trials},
            {"seed", cfg.seed},
            {"sigma_h2", cfg.sigma_h2},
            {"sigma2", cfg.sigma2},
            {"pilots", cfg.pilots == PilotKind::Orthogonal ? "orthogonal" : "random"},
            {"frames", cfg.frames},
            {"perfect_csi", cfg.perfect_csi},
            {"max_users", cfg.max_users},
            {"rate_cap", cfg.rate_cap}};
}

// One channel/pilot draw shared by every scheme of a (L, SNR, trial) cell.
struct TrialSetup
{
    int L = 0;
    double snr_db = 0.0;
    int trial = 0;
    double P = 0.0;
    RealModel model;
    ChannelRealization channel;
};

inline std::uint64_t snr_key(double snr_db)
{
    return static_cast<std::uint64_t>(std::llround(snr_db * 1e6));
}

inline std::uint64_t cell_seed(const ExperimentConfig &cfg, std::string_view tag, int L, double snr_db, int trial)
{
    return derive_seed(cfg.seed, tag,
                       {static_cast<std::uint64_t>(L), snr_key(snr_db), static_cast<std::uint64_t>(trial)});
}

inline TrialSetup make_setup(const ExperimentConfig &cfg, int L, double snr_db, int trial)
{
    const double P = power_for_snr(cfg.K, L, cfg.sigma2, snr_db);
    const std::uint64_t pilot_seed = cell_seed(cfg, "pilots", L, snr_db, trial);
    const ComplexMatrix X = cfg.pilots == PilotKind::Orthogonal ? generate_pilots_orthogonal(cfg.K, L, P, pilot_seed)
                                                                : generate_pilots_random(cfg.K, L, P, pilot_seed);
    return {L,
            snr_db,
            trial,
            P,
            realify(ComplexSystem(cfg.M, cfg.K, L, X, cfg.sigma2, P)),
            generate_channel(cfg.M, cfg.K, cfg.sigma_h2, cell_seed(cfg, "channel", L, snr_db, trial))};
}

// Blocks whose one-bit data are separable have no ML estimate; they are
// resolved by ML restricted to the ball of the prior RMS channel norm.
inline SolverOptions solver_options(const ExperimentConfig &cfg)
{
    SolverOptions opt;
    opt.separable_norm = std::sqrt(cfg.K * cfg.sigma_h2);
    return opt;
}

inline ChannelEstimate estimate_channel(const ExperimentConfig &cfg, const TrialSetup &setup, Scheme scheme,
                                        std::uint64_t seed)
{
    const SolverOptions opt = solver_options(cfg);
    const RealVector &h = setup.channel.h;
    switch (scheme) {
    case Scheme::FQ: return run_fq(setup.model, h, seed, opt);
    case Scheme::RQ: return run_rq(setup.model, h, cfg.sigma_h2, seed, opt);
    case Scheme::AQ: return run_aq(setup.model, h, cfg.i_max, seed, opt).estimate;
    case Scheme::OQ: return run_oq(setup.model, h, seed, opt);
    case Scheme::NQ: return run_nq(setup.model, h, seed);
    }
    throw std::logic_error("estimate_channel: unhandled scheme");
}

struct TrialResult
{
    std::string scheme;
    int M = 0;
    int K = 0;
    int L = 0;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double mse = 0.0;
    bool converged = true;
    int iters = 0;
    double ser = std::numeric_limits<double>::quiet_NaN();
    double rate = std::numeric_limits<double>::quiet_NaN();
    double wall_ms = 0.0;
};

namespace detail
{

struct Cell
{
    int L;
    double snr_db;
};

inline std::vector<Cell> cells(const ExperimentConfig &cfg)
{
    std::vector<Cell> out;
    for (int L : cfg.L) {
        for (double s : cfg.snr_db) {
            out.push_back({L, s});
        }
    }
    return out;
}

class Stopwatch
{
  public:
    explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
    double ms() const
    {
        if (!enabled_) {
            return 0.0;
        }
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

inline TrialResult base_row(const ExperimentConfig &cfg, const TrialSetup &setup, std::string scheme,
                            std::uint64_t seed)
{
    TrialResult r;
    r.scheme = std::move(scheme);
    r.M = cfg.M;
    r.K = cfg.K;
    r.L = setup.L;
    r.snr_db = setup.snr_db;
    r.trial = setup.trial;
    r.seed = seed;
    return r;
}

} // namespace detail

// All (L, SNR, scheme, trial) cells in that nesting order.
inline std::vector<TrialResult> run_sweep(const ExperimentConfig &cfg)
{
    cfg.validate();
    const auto grid = detail::cells(cfg);
    const std::size_t per_cell = cfg.schemes.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<TrialResult> rows(grid.size() * per_cell);
    parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        const detail::Cell &cell = grid[i / per_cell];
        const Scheme scheme = cfg.schemes[(i % per_cell) / static_cast<std::size_t>(cfg.trials)];
        const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
        const detail::Stopwatch clock(cfg.timing);
        const TrialSetup setup = make_setup(cfg, cell.L, cell.snr_db, trial);
        const std::uint64_t seed = cell_seed(cfg, to_string(scheme), cell.L, cell.snr_db, trial);
        const ChannelEstimate est = estimate_channel(cfg, setup, scheme, seed);
        TrialResult r = detail::base_row(cfg, setup, std::string(to_string(scheme)), seed);
        r.mse = mse(setup.channel.h, est.h_hat, cfg.M, cfg.K);
        r.converged = est.converged;
        r.iters = est.iterations;
        r.wall_ms = clock.ms();
        rows[i] = std::move(r);
    });
    return rows;
}

// Detection runs. Every scheme of a trial, and the perfect-CSI row, detect
// the same data-phase frames. rate holds the user-averaged achievable rate.
inline std::vector<TrialResult> run_detection(const ExperimentConfig &cfg)
{
    cfg.validate();
    if (cfg.K > cfg.max_users) {
        throw ConfigError("K", "exhaustive detection supports K <= " + std::to_string(cfg.max_users) +
                                   "; reduce K or raise max_users");
    }
    const auto grid = detail::cells(cfg);
    std::vector<std::string> labels;
    for (Scheme s : cfg.schemes) {
        labels.emplace_back(to_string(s));
    }
    if (cfg.perfect_csi) {
        labels.emplace_back("CSI");
    }
    const std::size_t per_cell = labels.size() * static_cast<std::size_t>(cfg.trials);
    std::vector<TrialResult> rows(grid.size() * per_cell);
    parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
        const detail::Cell &cell = grid[i / per_cell];
        const std::size_t which = (i % per_cell) / static_cast<std::size_t>(cfg.trials);
        const int trial = static_cast<int>(i % static_cast<std::size_t>(cfg.trials));
        const detail::Stopwatch clock(cfg.timing);
        const TrialSetup setup = make_setup(cfg, cell.L, cell.snr_db, trial);
        const std::uint64_t seed = cell_seed(cfg, labels[which], cell.L, cell.snr_db, trial);
        TrialResult r = detail::base_row(cfg, setup, labels[which], seed);
        RealVector h_hat = setup.channel.h;
        if (which < cfg.schemes.size()) {
            const ChannelEstimate est = estimate_channel(cfg, setup, cfg.schemes[which], seed);
            h_hat = est.h_hat;
            r.converged = est.converged;
            r.iters = est.iterations;
        }
        r.mse = mse(setup.channel.h, h_hat, cfg.M, cfg.K);

        DataPhaseConfig data;
        data.frames = cfg.frames;
        data.sigma2 = cfg.sigma2;
        data.amplitude = std::sqrt(db_to_linear(cell.snr_db) * cfg.sigma2);
        data.max_users = cfg.max_users;
        data.rate_cap = cfg.rate_cap;
        const DataPhaseResult res = measure_ser(setup.channel.H, real_to_channel(h_hat, cfg.M, cfg.K), data,
                                                cell_seed(cfg, "data", cell.L, cell.snr_db, trial));
        r.ser = res.ser;
        r.rate = res.rate;
        r.wall_ms = clock.ms();
        rows[i] = std::move(r);
    });
    return rows;
}

struct AqTraceRow
{
    int L = 0;
    double snr_db = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    AqIteration it;
};

inline std::vector<AqTraceRow> run_aq_trace(const ExperimentConfig &cfg)
{
    cfg.validate();
    const auto grid = detail::cells(cfg);
    const auto trials = static_cast<std::size_t>(cfg.trials);
    std::vector<std::vector<AqTraceRow>> per_task(grid.size() * trials);
    parallel_for(per_task.size(), cfg.threads, [&](std::size_t i) {
        const detail::Cell &cell = grid[i / trials];
        const int trial = static_cast<int>(i % trials);
        const TrialSetup setup = make_setup(cfg, cell.L, cell.snr_db, trial);
        const std::uint64_t seed = cell_seed(cfg, "AQ", cell.L, cell.snr_db, trial);
        const AqResult res = run_aq(setup.model, setup.channel.h, cfg.i_max, seed, solver_options(cfg));
        for (const AqIteration &it : res.trace) {
            per_task[i].push_back({cell.L, cell.snr_db, trial, seed, it});
        }
    });
    std::vector<AqTraceRow> rows;
    for (auto &v : per_task) {
        rows.insert(rows.end(), v.begin(), v.end());
    }
    return rows;
}

// Per-coefficient bounds tr(CRB)/(MK) for one cell, averaged over trials.
struct CrbCell
{
    int L = 0;
    double snr_db = 0.0;
    double P = 0.0;
    double crb_oq = 0.0;
    double crb_nq = 0.0;
    double crb_optimal_design = 0.0; // orthogonal-pilot optimum, per coefficient
    double ratio_max_deviation = 0.0; // max |crb_oq / crb_nq - pi/2| over trials
    double crb_fq = 0.0;              // mean over trials with a well-conditioned FIM
    double crb_rq = 0.0;
    int fq_near_singular = 0;
    int rq_near_singular = 0;
};

inline std::vector<CrbCell> run_crb(const ExperimentConfig &cfg)
{
    cfg.validate();
    const auto grid = detail::cells(cfg);
    std::vector<CrbCell> out(grid.size());
    const double mk = static_cast<double>(cfg.M) * cfg.K;
    parallel_for(grid.size(), cfg.threads, [&](std::size_t c) {
        CrbCell &cell = out[c];
        cell.L = grid[c].L;
        cell.snr_db = grid[c].snr_db;
        int fq_ok = 0;
        int rq_ok = 0;
        for (int t = 0; t < cfg.trials; ++t) {
            const TrialSetup setup = make_setup(cfg, cell.L, cell.snr_db, t);
            const RealModel &model = setup.model;
            const RealVector &h = setup.channel.h;
            cell.P = setup.P;
            const double oq = crb_trace(model, thresholds_oracle(model, h), h);
            const double nq = crb_nq_trace(model);
            cell.crb_oq += oq / mk / cfg.trials;
            cell.crb_nq += nq / mk / cfg.trials;
            cell.ratio_max_deviation = std::max(cell.ratio_max_deviation, std::abs(oq / nq - M_PI / 2.0));

            const CrbReport fq = fim(model, thresholds_fixed(model.measurements()), h);
            if (fq.near_singular) {
                ++cell.fq_near_singular;
            } else {
                cell.crb_fq += fq.trace / mk;
                ++fq_ok;
            }
            const auto rq_tau =
                thresholds_random(model, cfg.sigma_h2,
                                  derive_seed(cell_seed(cfg, "RQ", cell.L, cell.snr_db, t), "thresholds"));
            const CrbReport rq = fim(model, rq_tau, h);
            if (rq.near_singular) {
                ++cell.rq_near_singular;
            } else {
                cell.crb_rq += rq.trace / mk;
                ++rq_ok;
            }
        }
        cell.crb_fq = fq_ok ? cell.crb_fq / fq_ok : std::numeric_limits<double>::quiet_NaN();
        cell.crb_rq = rq_ok ? cell.crb_rq / rq_ok : std::numeric_limits<double>::quiet_NaN();
        cell.crb_optimal_design = crb_optimal_design_trace(cfg.M, cfg.K, cell.P, cfg.sigma2) / mk;
    });
    return out;
}

// ---- output -------------------------------------------------------------

inline std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline constexpr const char *kTrialCsvHeader =
    "scheme,M,K,L,snr_db,trial,seed,mse,converged,iters,ser,rate,wall_ms";

inline void write_trials_csv(std::ostream &os, const std::vector<TrialResult> &rows)
{
    os << kTrialCsvHeader << '\n';
    for (const TrialResult &r : rows) {
        os << r.scheme << ',' << r.M << ',' << r.K << ',' << r.L << ',' << format_double(r.snr_db) << ','
           << r.trial << ',' << r.seed << ',' << format_double(r.mse) << ',' << (r.converged ? 1 : 0) << ','
           << r.iters << ',' << format_double(r.ser) << ',' << format_double(r.rate) << ','
           << format_double(r.wall_ms) << '\n';
    }
}

inline void write_aq_trace_csv(std::ostream &os, const std::vector<AqTraceRow> &rows)
{
    os << "L,snr_db,trial,seed,iteration,mse,threshold_error,converged,solver_iters,binary_measurements\n";
    for (const AqTraceRow &r : rows) {
        os << r.L << ',' << format_double(r.snr_db) << ',' << r.trial << ',' << r.seed << ','
           << r.it.iteration << ',' << format_double(r.it.mse) << ',' << format_double(r.it.threshold_error)
           << ',' << (r.it.converged ? 1 : 0) << ',' << r.it.solver_iterations << ','
           << r.it.binary_measurements << '\n';
    }
}

inline double median(std::vector<double> v)
{
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double> &v)
{
    if (v.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

namespace detail
{

inline nlohmann::ordered_json number_or_null(double x)
{
    return std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
}

} // namespace detail

struct CellSummary
{
    std::string scheme;
    int L = 0;
    double snr_db = 0.0;
    int trials = 0;
    double median_mse = 0.0;
    double mean_mse = 0.0;
    double converged_fraction = 0.0;
    double median_ser = std::numeric_limits<double>::quiet_NaN();
    double mean_ser = std::numeric_limits<double>::quiet_NaN();
    double mean_rate = std::numeric_limits<double>::quiet_NaN();
};

// Aggregates per (scheme, L, SNR), computed from the rows alone.
inline std::vector<CellSummary> summarize(const std::vector<TrialResult> &rows)
{
    struct Acc
    {
        std::vector<double> mse, ser, rate;
        int converged = 0;
    };
    std::vector<std::tuple<int, double, std::string>> order;
    std::map<std::tuple<int, double, std::string>, Acc> acc;
    for (const TrialResult &r : rows) {
        const auto key = std::make_tuple(r.L, r.snr_db, r.scheme);
        if (!acc.count(key)) {
            order.push_back(key);
        }
        Acc &a = acc[key];
        a.mse.push_back(r.mse);
        a.converged += r.converged ? 1 : 0;
        if (!std::isnan(r.ser)) a.ser.push_back(r.ser);
        if (!std::isnan(r.rate)) a.rate.push_back(r.rate);
    }
    std::vector<CellSummary> out;
    for (const auto &key : order) {
        const Acc &a = acc.at(key);
        CellSummary s;
        std::tie(s.L, s.snr_db, s.scheme) = key;
        s.trials = static_cast<int>(a.mse.size());
        s.median_mse = median(a.mse);
        s.mean_mse = mean(a.mse);
        s.converged_fraction = static_cast<double>(a.converged) / s.trials;
        s.median_ser = median(a.ser);
        s.mean_ser = mean(a.ser);
        s.mean_rate = mean(a.rate);
        out.push_back(s);
    }
    return out;
}

inline nlohmann::ordered_json to_json(const CellSummary &s)
{
    return {{"scheme", s.scheme},
            {"L", s.L},
            {"snr_db", s.snr_db},
            {"trials", s.trials},
            {"median_mse", detail::number_or_null(s.median_mse)},
            {"mean_mse", detail::number_or_null(s.mean_mse)},
            {"converged_fraction", s.converged_fraction},
            {"median_ser", detail::number_or_null(s.median_ser)},
            {"mean_ser", detail::number_or_null(s.mean_ser)},
            {"mean_rate", detail::number_or_null(s.mean_rate)}};
}

inline nlohmann::ordered_json to_json(const CrbCell &c)
{
    return {{"L", c.L},
            {"snr_db", c.snr_db},
            {"P", c.P},
            {"crb_oq", c.crb_oq},
            {"crb_nq", c.crb_nq},
            {"ratio_oq_nq", c.crb_oq / c.crb_nq},
            {"ratio_max_deviation", c.ratio_max_deviation},
            {"crb_optimal_design", c.crb_optimal_design},
            {"crb_fq", detail::number_or_null(c.crb_fq)},
            {"crb_rq", detail::number_or_null(c.crb_rq)},
            {"fq_near_singular", c.fq_near_singular},
            {"rq_near_singular", c.rq_near_singular}};
}

// Summary for sweep / detect-ser / rate: config echo, per-cell aggregates and
// the CRB reference floors of every (L, SNR) cell.
inline nlohmann::ordered_json summary_json(const std::string &command, const ExperimentConfig &cfg,
                                   const std::vector<TrialResult> &rows, const std::vector<CrbCell> &reference)
{
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = to_json(cfg);
    j["cells"] = nlohmann::ordered_json::array();
    for (const CellSummary &s : summarize(rows)) {
        j["cells"].push_back(to_json(s));
    }
    j["reference"] = nlohmann::ordered_json::array();
    for (const CrbCell &c : reference) {
        j["reference"].push_back({{"L", c.L}, {"snr_db", c.snr_db}, {"crb_oq", c.crb_oq}, {"crb_nq", c.crb_nq}});
    }
    return j;
}

struct AqTraceSummary
{
    int L = 0;
    double snr_db = 0.0;
    int iteration = 0;
    double median_mse = 0.0;
    double mean_mse = 0.0;
    double median_threshold_error = 0.0;
};

inline std::vector<AqTraceSummary> summarize(const std::vector<AqTraceRow> &rows)
{
    std::vector<std::tuple<int, double, int>> order;
    std::map<std::tuple<int, double, int>, std::pair<std::vector<double>, std::vector<double>>> acc;
    for (const AqTraceRow &r : rows) {
        const auto key = std::make_tuple(r.L, r.snr_db, r.it.iteration);
        if (!acc.count(key)) {
            order.push_back(key);
        }
        acc[key].first.push_back(r.it.mse);
        acc[key].second.push_back(r.it.threshold_error);
    }
    std::vector<AqTraceSummary> out;
    for (const auto &key : order) {
        const auto &[m, t] = acc.at(key);
        AqTraceSummary s;
        std::tie(s.L, s.snr_db, s.iteration) = key;
        s.median_mse = median(m);
        s.mean_mse = mean(m);
        s.median_threshold_error = median(t);
        out.push_back(s);
    }
    return out;
}

} // namespace onebit
