// SPDX-License-Identifier: MIT
//
// Batch front end: scenario configs in, CSV tables out.
//
// A scenario is a flat key=value file (one pair per line, '#' comments,
// comma-separated lists).  Each subcommand reads the keys it needs,
// computes its sweep with a worker pool, and writes one CSV table to the
// --out path.  Only CSV ever goes to the data stream; progress and errors
// go to stderr.  Numbers are emitted with 17 significant digits through
// std::to_chars, so identical configs reproduce byte-identical files
// regardless of locale or worker count.
//
// Exit codes: 0 success, 1 usage, 2 configuration error, 3 numerical
// failure, 4 validation failure.

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ordstat/applications.hpp"
#include "ordstat/joint_densities.hpp"
#include "ordstat/kernels.hpp"
#include "ordstat/oracle.hpp"
#include "ordstat/validation.hpp"

namespace ordstat {

namespace exit_code {
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kConfig = 2;
constexpr int kNumerical = 3;
constexpr int kValidation = 4;
} // namespace exit_code

// ---------------------------------------------------------------------------
// key=value scenario files
// ---------------------------------------------------------------------------

/// Flat key=value store with typed accessors.  Lines are `key = value`,
/// blank, or '#'-comments; values may be comma-separated lists.  Duplicate
/// keys are rejected — silently keeping one of two conflicting values
/// would make experiments unreproducible.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::istream& in) {
        KeyValueConfig kv;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string trimmed = trim(line);
            if (trimmed.empty() || trimmed[0] == '#') continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": expected key=value, got '" + trimmed +
                                  "'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": empty key");
            if (!kv.values_.emplace(key, value).second)
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": duplicate key '" + key + "'");
        }
        return kv;
    }

    static KeyValueConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        return parse(in);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    const std::string& raw(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing required config key '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key) const { return raw(key); }
    std::string get_string(const std::string& key,
                           const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }

    double get_double(const std::string& key) const {
        return parse_double(raw(key), key);
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    int get_int(const std::string& key) const {
        return static_cast<int>(parse_integer(raw(key), key));
    }
    int get_int(const std::string& key, int fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::uint64_t get_u64(const std::string& key,
                          std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = raw(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key +
                              "': expected unsigned integer, got '" + s + "'");
        return v;
    }

    bool get_bool(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const std::string& s = raw(key);
        if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
        if (s == "false" || s == "0" || s == "no" || s == "off") return false;
        throw ConfigError("config key '" + key + "': expected boolean, got '" +
                          s + "'");
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const std::string& item : split_commas(raw(key))) {
            const std::string t = trim(item);
            if (t.empty())
                throw ConfigError("config key '" + key +
                                  "': empty list element");
            out.push_back(t);
        }
        if (out.empty())
            throw ConfigError("config key '" + key + "': empty list");
        return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& item : get_string_list(key))
            out.push_back(parse_double(item, key));
        return out;
    }

    std::vector<int> get_int_list(const std::string& key) const {
        std::vector<int> out;
        for (const std::string& item : get_string_list(key))
            out.push_back(static_cast<int>(parse_integer(item, key)));
        return out;
    }

  private:
    static std::string trim(const std::string& s) {
        const auto first = s.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return {};
        const auto last = s.find_last_not_of(" \t\r\n");
        return s.substr(first, last - first + 1);
    }

    static std::vector<std::string> split_commas(const std::string& s) {
        std::vector<std::string> parts;
        std::size_t begin = 0;
        for (;;) {
            const auto comma = s.find(',', begin);
            if (comma == std::string::npos) {
                parts.push_back(s.substr(begin));
                return parts;
            }
            parts.push_back(s.substr(begin, comma - begin));
            begin = comma + 1;
        }
    }

    static double parse_double(const std::string& s, const std::string& key) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key +
                              "': expected number, got '" + s + "'");
        return v;
    }

    static long long parse_integer(const std::string& s,
                                   const std::string& key) {
        long long v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError("config key '" + key +
                              "': expected integer, got '" + s + "'");
        return v;
    }

    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// scenario assembly
// ---------------------------------------------------------------------------

/// Command-line options shared by every subcommand.
struct RunOptions {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;  ///< overrides mc_seed
    std::optional<int> jobs;            ///< overrides ORDSTAT_JOBS and jobs=
};

/// A parsed scenario: the raw keys plus everything every runner needs.
struct ScenarioConfig {
    KeyValueConfig kv;
    std::string computation;
    FadingProfile profile;
    QuadratureConfig quad;
    McConfig mc;
    int jobs = 1;
};

inline FadingProfile profile_from_config(const KeyValueConfig& kv) {
    const bool has_avg = kv.has("averages");
    const bool has_mip =
        kv.has("mip_gamma1") || kv.has("mip_delta") || kv.has("n");
    if (has_avg && has_mip)
        throw ConfigError(
            "profile: give either averages= or mip_gamma1/mip_delta/n, "
            "not both");
    if (has_avg) return FadingProfile(kv.get_double_list("averages"));
    if (!(kv.has("mip_gamma1") && kv.has("mip_delta") && kv.has("n")))
        throw ConfigError(
            "profile: need averages= or all of mip_gamma1=, mip_delta=, n=");
    return profile_from_mip(MipSpec{kv.get_double("mip_gamma1"),
                                    kv.get_double("mip_delta"),
                                    kv.get_int("n")});
}

inline int resolve_jobs(const std::optional<int>& flag,
                        const KeyValueConfig& kv) {
    int jobs = 1;
    if (flag) {
        jobs = *flag;
    } else if (const char* env = std::getenv("ORDSTAT_JOBS")) {
        const std::string s(env);
        int v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
            throw ConfigError("ORDSTAT_JOBS: expected integer, got '" + s +
                              "'");
        jobs = v;
    } else {
        jobs = kv.get_int("jobs", 1);
    }
    if (jobs < 1 || jobs > 1024)
        throw ConfigError("jobs must lie in [1, 1024]");
    return jobs;
}

inline ScenarioConfig load_scenario(const RunOptions& opt,
                                    const std::string& computation) {
    KeyValueConfig kv = KeyValueConfig::load(opt.config_path);
    if (kv.has("computation") && kv.get_string("computation") != computation)
        throw ConfigError("config computes '" + kv.get_string("computation") +
                          "' but the subcommand is '" + computation + "'");
    FadingProfile profile = profile_from_config(kv);
    QuadratureConfig quad;
    quad.abs_tol = kv.get_double("quad_abs_tol", quad.abs_tol);
    quad.rel_tol = kv.get_double("quad_rel_tol", quad.rel_tol);
    quad.max_segments =
        static_cast<std::size_t>(kv.get_int(
            "quad_max_segments", static_cast<int>(quad.max_segments)));
    McConfig mc;
    mc.trials = kv.get_u64("mc_trials", mc.trials);
    mc.seed = opt.seed ? *opt.seed : kv.get_u64("mc_seed", mc.seed);
    mc.shards = kv.get_int("mc_shards", mc.shards);
    validate_mc(mc);
    const int jobs = resolve_jobs(opt.jobs, kv);
    return ScenarioConfig{std::move(kv), computation, std::move(profile),
                          quad, mc, jobs};
}

// ---------------------------------------------------------------------------
// sweep axes and CSV helpers
// ---------------------------------------------------------------------------

inline std::vector<double> linspace(double start, double stop, int steps) {
    if (steps < 1) throw ConfigError("axis: steps must be >= 1");
    if (steps == 1) return {start};
    if (!(stop >= start))
        throw ConfigError("axis: stop must be >= start");
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        out[static_cast<std::size_t>(i)] =
            start + (stop - start) * i / (steps - 1);
    return out;
}

/// An axis is either `<name>_list=v1,v2,...` or the triple
/// `<name>_start/<name>_stop/<name>_steps`.
inline std::vector<double> axis_from_config(const KeyValueConfig& kv,
                                            const std::string& name) {
    const std::string list_key = name + "_list";
    const std::string start_key = name + "_start";
    if (kv.has(list_key)) {
        if (kv.has(start_key))
            throw ConfigError("axis '" + name +
                              "': give either the list or the range, "
                              "not both");
        return kv.get_double_list(list_key);
    }
    if (!kv.has(start_key))
        throw ConfigError("axis '" + name + "': need " + list_key + "= or " +
                          start_key + "/" + name + "_stop/" + name +
                          "_steps");
    return linspace(kv.get_double(start_key), kv.get_double(name + "_stop"),
                    kv.get_int(name + "_steps"));
}

/// 17 significant digits through std::to_chars: locale-free and enough to
/// round-trip any double, so golden CSV files detect numeric drift.
inline std::string csv_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v,
                                   std::chars_format::general, 17);
    if (res.ec != std::errc{})
        throw NumericalError("csv_number: formatting failed");
    return std::string(buf, res.ptr);
}

inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

// ---------------------------------------------------------------------------
// worker pool
// ---------------------------------------------------------------------------

/// One sweep row: either the finished CSV line or the error that stopped
/// it.  Rows are returned in sweep order regardless of which worker
/// finished first.
struct RowOutcome {
    std::string line;
    std::string error;
    bool ok() const { return error.empty(); }
};

inline std::vector<RowOutcome> compute_rows(
    std::size_t count, int jobs,
    const std::function<std::string(std::size_t)>& row_fn) {
    std::vector<RowOutcome> rows(count);
    auto run_one = [&](std::size_t i) {
        try {
            rows[i].line = row_fn(i);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    };
    const int workers =
        static_cast<int>(std::min<std::size_t>(
            static_cast<std::size_t>(jobs), std::max<std::size_t>(count, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run_one(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                run_one(i);
            }
        });
    for (auto& t : pool) t.join();
    return rows;
}

/// Writes header + successful rows; failed rows go to the log with their
/// sweep position.  Returns kOk, or kNumerical if any row failed.
inline int emit_csv(const std::string& out_path, const std::string& header,
                    const std::vector<RowOutcome>& rows, std::ostream& log) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + out_path + "'");
    out << header << "\n";
    int failures = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].ok()) {
            out << rows[i].line << "\n";
        } else {
            ++failures;
            log << "row " << i << " failed: " << rows[i].error << "\n";
        }
    }
    out.flush();
    if (!out)
        throw ConfigError("short write to output file '" + out_path + "'");
    if (failures != 0) {
        log << failures << " of " << rows.size() << " sweep rows failed\n";
        return exit_code::kNumerical;
    }
    return exit_code::kOk;
}

// ---------------------------------------------------------------------------
// capture subcommand
// ---------------------------------------------------------------------------

inline int run_capture(const RunOptions& opt, std::ostream& log) {
    const ScenarioConfig sc = load_scenario(opt, "capture");
    const int N = sc.profile.N();
    const std::vector<int> m_list = sc.kv.get_int_list("m_list");
    for (int m : m_list)
        if (m < 1 || m > N - 1)
            throw ConfigError("m_list: every m must satisfy 1 <= m <= N-1");
    const std::vector<double> T_values = axis_from_config(sc.kv, "T");
    for (double T : T_values)
        if (!(T >= 0.0 && T <= 1.0))
            throw ConfigError("T values must lie in [0, 1]");
    const bool with_mc = sc.kv.get_bool("with_mc", false);

    const std::size_t count = m_list.size() * T_values.size();
    auto row_fn = [&](std::size_t i) {
        const int m = m_list[i / T_values.size()];
        const double T = T_values[i % T_values.size()];
        std::string line = csv_number(T) + "," + std::to_string(m) + "," +
                           csv_number(capture_probability_closed(
                               sc.profile, m, T)) +
                           "," +
                           csv_number(capture_probability_numeric(
                               sc.profile, m, T, sc.quad));
        if (with_mc) {
            const OracleEstimate est = mc_capture(sc.profile, m, T, sc.mc);
            line += "," + csv_number(est.value) + "," +
                    csv_number(est.std_error);
        }
        return line;
    };
    const auto rows = compute_rows(count, sc.jobs, row_fn);
    std::string header = "T,m,P_capture_closed,P_capture_numeric";
    if (with_mc) header += ",MC_estimate,MC_se";
    return emit_csv(opt.out_path, header, rows, log);
}

// ---------------------------------------------------------------------------
// outage subcommand
// ---------------------------------------------------------------------------

inline int run_outage(const RunOptions& opt, std::ostream& log) {
    const ScenarioConfig sc = load_scenario(opt, "outage");
    const int N = sc.profile.N();
    const std::vector<int> m_list = sc.kv.get_int_list("m_list");
    for (int m : m_list)
        if (m < 1 || m > N - 1)
            throw ConfigError("m_list: every m must satisfy 1 <= m <= N-1");
    const std::vector<double> T_values = axis_from_config(sc.kv, "T");
    const std::vector<double> alpha_values = axis_from_config(sc.kv, "alpha");
    for (double T : T_values)
        if (T < 0.0) throw ConfigError("T values must be nonnegative");
    for (double a : alpha_values)
        if (a < 0.0) throw ConfigError("alpha values must be nonnegative");
    const bool with_mc = sc.kv.get_bool("with_mc", false);

    const std::size_t per_m = T_values.size() * alpha_values.size();
    const std::size_t count = m_list.size() * per_m;
    auto row_fn = [&](std::size_t i) {
        const int m = m_list[i / per_m];
        const double T = T_values[(i % per_m) / alpha_values.size()];
        const double alpha = alpha_values[i % alpha_values.size()];
        std::string line = csv_number(T) + "," + csv_number(alpha) + "," +
                           std::to_string(m) + "," +
                           csv_number(outage_probability(sc.profile, m, T,
                                                          alpha, sc.quad));
        if (with_mc) {
            const OracleEstimate est =
                mc_outage(sc.profile, m, T, alpha, sc.mc);
            line += "," + csv_number(est.value) + "," +
                    csv_number(est.std_error);
        }
        return line;
    };
    const auto rows = compute_rows(count, sc.jobs, row_fn);
    std::string header = "T,alpha,m,P_outage";
    if (with_mc) header += ",MC_estimate,MC_se";
    return emit_csv(opt.out_path, header, rows, log);
}

// ---------------------------------------------------------------------------
// pdf subcommand
// ---------------------------------------------------------------------------

inline int run_pdf(const RunOptions& opt, std::ostream& log) {
    const ScenarioConfig sc = load_scenario(opt, "pdf");
    PartialSumSpec spec;
    spec.mode = parse_mode(sc.kv.get_string("mode"));
    spec.m = sc.kv.get_int("m", 0);
    spec.Ns = sc.kv.get_int("Ns", 0);
    validate_spec(spec, sc.profile.N());
    const JointDensityResult density =
        make_joint_density(sc.profile, spec, sc.quad);

    if (density.dimension == 1) {
        const std::vector<double> grid = axis_from_config(sc.kv, "z");
        auto row_fn = [&](std::size_t i) {
            const double z = grid[i];
            return csv_number(z) + "," + csv_number(density.density({z}));
        };
        const auto rows = compute_rows(grid.size(), sc.jobs, row_fn);
        return emit_csv(opt.out_path, "z,density", rows, log);
    }

    const std::vector<double> g1 = axis_from_config(sc.kv, "z1");
    const std::vector<double> g2 = axis_from_config(sc.kv, "z2");
    auto row_fn = [&](std::size_t i) {
        const double z1 = g1[i / g2.size()];
        const double z2 = g2[i % g2.size()];
        return csv_number(z1) + "," + csv_number(z2) + "," +
               csv_number(density.density({z1, z2}));
    };
    const auto rows = compute_rows(g1.size() * g2.size(), sc.jobs, row_fn);
    return emit_csv(opt.out_path, "z1,z2,density", rows, log);
}

// ---------------------------------------------------------------------------
// validate subcommand
// ---------------------------------------------------------------------------

/// One validation check outcome.
struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

namespace detail {

/// Closed-form kernels against their defining integrals on a small grid,
/// plus the window/prefix/suffix interrelation.
inline CheckResult check_kernels(const ScenarioConfig&) {
    const double avgs[] = {0.5, 1.25, 2.0};
    const double zs[] = {0.4, 1.0, 2.2};
    const double lambdas[] = {-1.5, -0.7, -0.1};
    // The quadrature oracle must run well below the comparison tolerance,
    // or its own truncation error would eat the whole budget.
    QuadratureConfig tight;
    tight.abs_tol = 1e-13;
    tight.rel_tol = 1e-11;
    double worst = 0.0, worst_rel = 0.0;
    for (double gb : avgs) {
        const ExponentialDistribution dist(gb);
        for (double z : zs)
            for (double l : lambdas) {
                const double cq = kernel_c(dist, z, l, gb, tight);
                const double eq = kernel_e(dist, z, l, gb, tight);
                const double mq =
                    kernel_mu(dist, 0.5 * z, 2.0 * z, l, gb, tight);
                const double cc = kernel_c_exp(gb, z, l);
                const double ec = kernel_e_exp(gb, z, l);
                const double mcl = kernel_mu_exp(gb, 0.5 * z, 2.0 * z, l);
                worst_rel = std::max(
                    {worst_rel, std::abs(cc - cq) / std::abs(cc),
                     std::abs(ec - eq) / std::abs(ec),
                     std::abs(mcl - mq) / std::abs(mcl)});
                const double inter =
                    std::abs(kernel_mu_exp(gb, 0.5 * z, 2.0 * z, l) -
                             (kernel_c_exp(gb, 2.0 * z, l) -
                              kernel_c_exp(gb, 0.5 * z, l)));
                worst = std::max(worst, inter);
            }
    }
    CheckResult out{"kernels", worst_rel <= 1e-8 && worst <= 1e-10, ""};
    std::ostringstream os;
    os << "closed vs quadrature max rel " << worst_rel
       << "; interrelation max abs " << worst;
    out.detail = os.str();
    return out;
}

/// Product expansions against direct kernel products at random points.
inline CheckResult check_expansions(const ScenarioConfig& sc) {
    SplitMix64 rng = SplitMix64::split(sc.mc.seed, 17);
    const auto& avgs = sc.profile.averages();
    const int max_size = std::min<int>(4, static_cast<int>(avgs.size()));
    double worst = 0.0;
    for (int k = 1; k <= max_size; ++k) {
        const std::vector<double> sub(avgs.begin(), avgs.begin() + k);
        for (int trial = 0; trial < 25; ++trial) {
            const double z = 0.2 + 2.8 * rng.next_double();
            const double zb = z + 0.1 + 2.0 * rng.next_double();
            const double l = -2.0 * rng.next_double() - 1e-3;
            double pc = 1.0, pe = 1.0, pm = 1.0;
            for (double gb : sub) {
                pc *= kernel_c_exp(gb, z, l);
                pe *= kernel_e_exp(gb, z, l);
                pm *= kernel_mu_exp(gb, z, zb, l);
            }
            worst = std::max(
                {worst,
                 std::abs(prod_c_expansion(sub, z, l) - pc) / std::abs(pc),
                 std::abs(prod_e_expansion(sub, z, l) - pe) / std::abs(pe),
                 std::abs(prod_mu_expansion(sub, z, zb, l) - pm) /
                     std::abs(pm)});
        }
    }
    CheckResult out{"expansions", worst <= 1e-9, ""};
    std::ostringstream os;
    os << "summation forms vs direct products, max rel " << worst;
    out.detail = os.str();
    return out;
}

/// Total-sum density against the independent hypoexponential closed form.
inline CheckResult check_total_sum(const ScenarioConfig& sc) {
    const TotalSumDensity density(sc.profile);
    std::vector<double> rates;
    for (double gb : sc.profile.averages()) rates.push_back(1.0 / gb);
    double sum_avg = 0.0;
    for (double gb : sc.profile.averages()) sum_avg += gb;
    double worst = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double z = 3.0 * sum_avg * i / 50.0;
        const double a = density.pdf(z);
        const double b = hypoexp_pdf(rates, z);
        worst = std::max(worst, std::abs(a - b) /
                                    std::max(std::abs(b), 1e-300));
    }
    const double mass = integrate_semi_infinite(
        [&](double z) { return density.pdf(z); }, 0.0, sum_avg, sc.quad);
    CheckResult out{"total_sum",
                    worst <= 1e-8 && std::abs(mass - 1.0) <= 1e-6, ""};
    std::ostringstream os;
    os << "vs hypoexponential max rel " << worst << "; mass " << mass;
    out.detail = os.str();
    return out;
}

/// Capture probability: closed vs numeric, both vs Monte Carlo.
inline CheckResult check_capture(const ScenarioConfig& sc) {
    const int N = sc.profile.N();
    std::vector<int> ms = {1};
    if (N >= 3) ms.push_back(N - 1);
    double worst_rel = 0.0, worst_dev = 0.0;
    for (int m : ms)
        for (double T : {0.3, 0.6, 0.9}) {
            const double closed =
                capture_probability_closed(sc.profile, m, T);
            const double numeric =
                capture_probability_numeric(sc.profile, m, T, sc.quad);
            worst_rel = std::max(worst_rel, std::abs(closed - numeric) /
                                                std::max(closed, 1e-12));
            const OracleEstimate est = mc_capture(sc.profile, m, T, sc.mc);
            if (est.std_error > 0.0)
                worst_dev = std::max(
                    worst_dev, std::abs(est.value - closed) / est.std_error);
        }
    CheckResult out{"capture", worst_rel <= 1e-4 && worst_dev <= 4.0, ""};
    std::ostringstream os;
    os << "closed vs numeric max rel " << worst_rel
       << "; vs Monte Carlo worst dev " << worst_dev << " s.e.";
    out.detail = os.str();
    return out;
}

/// Outage probability against Monte Carlo.
inline CheckResult check_outage(const ScenarioConfig& sc) {
    const int N = sc.profile.N();
    const int m = std::min(2, N - 1);
    double worst_dev = 0.0;
    for (double T : {0.3, 0.6})
        for (double alpha : {0.0, 1.0}) {
            const double numeric =
                outage_probability(sc.profile, m, T, alpha, sc.quad);
            const OracleEstimate est =
                mc_outage(sc.profile, m, T, alpha, sc.mc);
            if (est.std_error > 0.0)
                worst_dev = std::max(
                    worst_dev, std::abs(est.value - numeric) / est.std_error);
        }
    CheckResult out{"outage", worst_dev <= 4.0, ""};
    std::ostringstream os;
    os << "numeric vs Monte Carlo worst dev " << worst_dev << " s.e. (m="
       << m << ")";
    out.detail = os.str();
    return out;
}

/// Joint density against a Monte Carlo histogram.  Uses the scenario's
/// mode/m/Ns when given, else the head/tail split at m = min(2, N-1).
inline CheckResult check_joint_mc(const ScenarioConfig& sc) {
    PartialSumSpec spec;
    if (sc.kv.has("mode")) {
        spec.mode = parse_mode(sc.kv.get_string("mode"));
        spec.m = sc.kv.get_int("m", 0);
        spec.Ns = sc.kv.get_int("Ns", 0);
    } else {
        spec.mode = PartialSumMode::AllHeadTail;
        spec.m = std::min(2, sc.profile.N() - 1);
    }
    validate_spec(spec, sc.profile.N());
    const std::size_t bins = spec_dimension(spec) == 1 ? 20 : 10;
    const HistogramSpec hs =
        auto_histogram_edges(sc.profile, spec, bins, sc.mc.seed);
    const HistogramComparison cmp =
        compare_density_to_histogram(sc.profile, spec, hs, sc.mc);
    CheckResult out{"joint_mc", cmp.passed(), ""};
    std::ostringstream os;
    os << mode_name(spec.mode) << ": " << cmp.describe();
    out.detail = os.str();
    return out;
}

} // namespace detail

inline const std::vector<std::string>& default_validate_checks() {
    static const std::vector<std::string> names = {
        "kernels", "expansions", "total_sum", "capture", "outage",
        "joint_mc"};
    return names;
}

inline CheckResult run_one_check(const std::string& name,
                                 const ScenarioConfig& sc) {
    if (name == "kernels") return detail::check_kernels(sc);
    if (name == "expansions") return detail::check_expansions(sc);
    if (name == "total_sum") return detail::check_total_sum(sc);
    if (name == "capture") return detail::check_capture(sc);
    if (name == "outage") return detail::check_outage(sc);
    if (name == "joint_mc") return detail::check_joint_mc(sc);
    throw ConfigError("unknown validation check '" + name + "'");
}

inline int run_validate(const RunOptions& opt, std::ostream& log) {
    const ScenarioConfig sc = load_scenario(opt, "validate");
    const std::vector<std::string> checks =
        sc.kv.has("checks") ? sc.kv.get_string_list("checks")
                            : default_validate_checks();
    std::vector<CheckResult> results;
    results.reserve(checks.size());
    for (const auto& name : checks) {
        log << "running check '" << name << "'...\n";
        results.push_back(run_one_check(name, sc));
        log << "  " << (results.back().passed ? "PASS" : "FAIL") << ": "
            << results.back().detail << "\n";
    }
    std::ofstream out(opt.out_path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open output file '" + opt.out_path + "'");
    out << "check,result,detail\n";
    bool all_passed = true;
    for (const auto& r : results) {
        out << r.name << "," << (r.passed ? "PASS" : "FAIL") << ","
            << csv_quote(r.detail) << "\n";
        all_passed = all_passed && r.passed;
    }
    out.flush();
    if (!out)
        throw ConfigError("short write to output file '" + opt.out_path +
                          "'");
    return all_passed ? exit_code::kOk : exit_code::kValidation;
}

} // namespace ordstat
