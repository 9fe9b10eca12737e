// SPDX-License-Identifier: MIT
//
// Config parsing, sweep assembly, CSV formatting, the worker pool, and the
// in-process subcommand runners.

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ordstat/cli.hpp"
#include "ordstat/common.hpp"

using namespace ordstat;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

/// Temp-directory fixture: files written under a unique directory that is
/// removed when the test ends.
struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() /
              fs::path("ordstat_test_" +
                       std::to_string(::getpid()) + "_" +
                       std::to_string(counter()++));
        fs::create_directories(dir);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        out << text;
        return p;
    }
};

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

}  // namespace

TEST_CASE("key=value parsing: comments, trimming, and first-equals split") {
    std::istringstream in(
        "# a comment\n"
        "\n"
        "  averages = 1.0, 0.5 \n"
        "formula=a=b\n"
        "flag=true\n");
    const KeyValueConfig kv = KeyValueConfig::parse(in);
    REQUIRE(kv.has("averages"));
    REQUIRE(kv.get_double_list("averages") == std::vector<double>{1.0, 0.5});
    // only the first '=' separates key from value
    REQUIRE(kv.get_string("formula") == "a=b");
    REQUIRE(kv.get_bool("flag", false));
    REQUIRE_FALSE(kv.has("missing"));
    REQUIRE(kv.get_string("missing", "fallback") == "fallback");
    REQUIRE(kv.get_double("missing", 2.5) == 2.5);
}

TEST_CASE("key=value parsing rejects malformed input") {
    {
        std::istringstream in("a=1\na=2\n");
        REQUIRE_THROWS_AS(KeyValueConfig::parse(in), ConfigError);
    }
    {
        std::istringstream in("no equals sign\n");
        REQUIRE_THROWS_AS(KeyValueConfig::parse(in), ConfigError);
    }
    {
        std::istringstream in("=value\n");
        REQUIRE_THROWS_AS(KeyValueConfig::parse(in), ConfigError);
    }
    REQUIRE_THROWS_AS(KeyValueConfig::load("/nonexistent/path.cfg"),
                      ConfigError);
}

TEST_CASE("typed getters parse strictly") {
    std::istringstream in(
        "d=1.5\n"
        "i=42\n"
        "u=7\n"
        "b1=yes\n"
        "b0=off\n"
        "bad_d=1.5x\n"
        "bad_i=4.2\n"
        "bad_b=maybe\n"
        "ints=1,2,3\n"
        "holey=1,,3\n");
    const KeyValueConfig kv = KeyValueConfig::parse(in);
    REQUIRE(kv.get_double("d") == 1.5);
    REQUIRE(kv.get_int("i") == 42);
    REQUIRE(kv.get_u64("u", 0) == 7);
    REQUIRE(kv.get_bool("b1", false));
    REQUIRE_FALSE(kv.get_bool("b0", true));
    REQUIRE(kv.get_int_list("ints") == std::vector<int>{1, 2, 3});
    REQUIRE_THROWS_AS(kv.get_double("bad_d"), ConfigError);
    REQUIRE_THROWS_AS(kv.get_int("bad_i"), ConfigError);
    REQUIRE_THROWS_AS(kv.get_bool("bad_b", false), ConfigError);
    REQUIRE_THROWS_AS(kv.get_u64("bad_i", 0), ConfigError);
    REQUIRE_THROWS_AS(kv.get_string_list("holey"), ConfigError);
    REQUIRE_THROWS_AS(kv.get_string("absent"), ConfigError);
}

TEST_CASE("CSV numbers round-trip doubles exactly") {
    REQUIRE(csv_number(0.1) == "0.10000000000000001");
    REQUIRE(csv_number(1.0) == "1");
    REQUIRE(csv_number(0.0) == "0");
    for (double v : {3.141592653589793, -2.2250738585072014e-308, 123456.789,
                     0.62556725624900822}) {
        const std::string s = csv_number(v);
        REQUIRE(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("CSV quoting doubles embedded quotes") {
    REQUIRE(csv_quote("plain") == "\"plain\"");
    REQUIRE(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("linspace endpoints are exact") {
    const auto g = linspace(0.0, 1.0, 5);
    REQUIRE(g.size() == 5);
    REQUIRE(g.front() == 0.0);
    REQUIRE(g.back() == 1.0);
    REQUIRE(g[2] == Approx(0.5));
    REQUIRE(linspace(2.0, 9.0, 1) == std::vector<double>{2.0});
    REQUIRE_THROWS_AS(linspace(0.0, 1.0, 0), ConfigError);
    REQUIRE_THROWS_AS(linspace(1.0, 0.0, 3), ConfigError);
}

TEST_CASE("axes come from a list or a range, never both") {
    {
        std::istringstream in("T_list=0.1,0.2\n");
        const auto axis =
            axis_from_config(KeyValueConfig::parse(in), "T");
        REQUIRE(axis == std::vector<double>{0.1, 0.2});
    }
    {
        std::istringstream in("T_start=0\nT_stop=1\nT_steps=3\n");
        const auto axis =
            axis_from_config(KeyValueConfig::parse(in), "T");
        REQUIRE(axis.size() == 3);
        REQUIRE(axis[1] == Approx(0.5));
    }
    {
        std::istringstream in("T_list=0.1\nT_start=0\nT_stop=1\nT_steps=3\n");
        REQUIRE_THROWS_AS(
            axis_from_config(KeyValueConfig::parse(in), "T"), ConfigError);
    }
    {
        std::istringstream in("other=1\n");
        REQUIRE_THROWS_AS(
            axis_from_config(KeyValueConfig::parse(in), "T"), ConfigError);
    }
}

TEST_CASE("profiles come from explicit averages or the decay triple") {
    {
        std::istringstream in("averages=1.0,0.5\n");
        const FadingProfile p = profile_from_config(KeyValueConfig::parse(in));
        REQUIRE(p.N() == 2);
        REQUIRE(p.average(2) == 0.5);
    }
    {
        std::istringstream in("mip_gamma1=1.0\nmip_delta=0.5\nn=3\n");
        const FadingProfile p = profile_from_config(KeyValueConfig::parse(in));
        REQUIRE(p.N() == 3);
        REQUIRE(p.average(2) == Approx(0.6065306597126334));
    }
    {
        std::istringstream in("averages=1.0,0.5\nmip_gamma1=1.0\n");
        REQUIRE_THROWS_AS(profile_from_config(KeyValueConfig::parse(in)),
                          ConfigError);
    }
    {
        std::istringstream in("mip_gamma1=1.0\nn=3\n");
        REQUIRE_THROWS_AS(profile_from_config(KeyValueConfig::parse(in)),
                          ConfigError);
    }
}

TEST_CASE("worker count: flag beats environment beats config key") {
    std::istringstream in("jobs=3\n");
    const KeyValueConfig kv = KeyValueConfig::parse(in);
    ::unsetenv("ORDSTAT_JOBS");
    REQUIRE(resolve_jobs(std::nullopt, kv) == 3);
    REQUIRE(resolve_jobs(5, kv) == 5);
    ::setenv("ORDSTAT_JOBS", "7", 1);
    REQUIRE(resolve_jobs(std::nullopt, kv) == 7);
    REQUIRE(resolve_jobs(2, kv) == 2);
    ::setenv("ORDSTAT_JOBS", "junk", 1);
    REQUIRE_THROWS_AS(resolve_jobs(std::nullopt, kv), ConfigError);
    ::unsetenv("ORDSTAT_JOBS");
    REQUIRE_THROWS_AS(resolve_jobs(0, kv), ConfigError);
    REQUIRE_THROWS_AS(resolve_jobs(5000, kv), ConfigError);
    std::istringstream none("x=1\n");
    REQUIRE(resolve_jobs(std::nullopt, KeyValueConfig::parse(none)) == 1);
}

TEST_CASE("worker pool preserves sweep order and captures row errors") {
    const auto rows = compute_rows(20, 4, [](std::size_t i) {
        if (i == 7) throw NumericalError("row seven exploded");
        return "row " + std::to_string(i);
    });
    REQUIRE(rows.size() == 20);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 7) {
            REQUIRE_FALSE(rows[i].ok());
            REQUIRE(rows[i].error == "row seven exploded");
        } else {
            REQUIRE(rows[i].ok());
            REQUIRE(rows[i].line == "row " + std::to_string(i));
        }
    }

    TempDir tmp;
    std::ostringstream log;
    const int rc = emit_csv((tmp.dir / "out.csv").string(), "h", rows, log);
    REQUIRE(rc == exit_code::kNumerical);
    REQUIRE(log.str().find("row 7 failed: row seven exploded") !=
            std::string::npos);
    // the CSV still contains the successful rows
    REQUIRE(read_lines(tmp.dir / "out.csv").size() == 20);  // header + 19
}

TEST_CASE("scenario loading: computation tag and seed override") {
    TempDir tmp;
    const auto cfg = tmp.write("c.cfg",
                               "computation=capture\n"
                               "averages=1.0,0.5\n"
                               "mc_seed=11\n"
                               "mc_trials=5000\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "o.csv").string();
    ::unsetenv("ORDSTAT_JOBS");

    const ScenarioConfig sc = load_scenario(opt, "capture");
    REQUIRE(sc.computation == "capture");
    REQUIRE(sc.mc.seed == 11);
    REQUIRE(sc.mc.trials == 5000);
    REQUIRE(sc.profile.N() == 2);
    REQUIRE(sc.jobs == 1);

    RunOptions seeded = opt;
    seeded.seed = 999;
    REQUIRE(load_scenario(seeded, "capture").mc.seed == 999);

    REQUIRE_THROWS_AS(load_scenario(opt, "outage"), ConfigError);
}

TEST_CASE("capture runner writes the sweep with exact endpoint rows") {
    TempDir tmp;
    const auto cfg = tmp.write("cap.cfg",
                               "averages=1.0,0.5\n"
                               "m_list=1\n"
                               // 0.75 sits strictly above the certain-capture
                               // region T <= m/N = 0.5
                               "T_list=0,0.75,1\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "cap.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE(run_capture(opt, log) == exit_code::kOk);

    const auto lines = read_lines(tmp.dir / "cap.csv");
    REQUIRE(lines.size() == 4);
    REQUIRE(lines[0] == "T,m,P_capture_closed,P_capture_numeric");
    const auto row0 = split_csv(lines[1]);
    REQUIRE(row0[0] == "0");
    REQUIRE(row0[1] == "1");
    REQUIRE(row0[2] == "1");  // certain capture at T = 0, exactly
    REQUIRE(row0[3] == "1");
    const auto row2 = split_csv(lines[3]);
    REQUIRE(row2[0] == "1");
    REQUIRE(row2[2] == "0");  // impossible capture at T = 1, exactly
    REQUIRE(row2[3] == "0");
    // interior row: both routes agree to the printed precision displayed
    const auto row1 = split_csv(lines[2]);
    const double closed = std::strtod(row1[2].c_str(), nullptr);
    const double numeric = std::strtod(row1[3].c_str(), nullptr);
    REQUIRE(closed == Approx(numeric).epsilon(1e-6));
    REQUIRE(closed > 0.0);
    REQUIRE(closed < 1.0);
}

TEST_CASE("capture runner appends Monte Carlo columns on request") {
    TempDir tmp;
    const auto cfg = tmp.write("cap.cfg",
                               "averages=1.0,0.5\n"
                               "m_list=1\n"
                               "T_list=0.75\n"
                               "with_mc=true\n"
                               "mc_trials=20000\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "cap.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE(run_capture(opt, log) == exit_code::kOk);
    const auto lines = read_lines(tmp.dir / "cap.csv");
    REQUIRE(lines[0] ==
            "T,m,P_capture_closed,P_capture_numeric,MC_estimate,MC_se");
    const auto row = split_csv(lines[1]);
    REQUIRE(row.size() == 6);
    const double closed = std::strtod(row[2].c_str(), nullptr);
    const double mc = std::strtod(row[4].c_str(), nullptr);
    const double se = std::strtod(row[5].c_str(), nullptr);
    REQUIRE(se > 0.0);
    REQUIRE(std::fabs(mc - closed) <= 5.0 * se);
}

TEST_CASE("pdf runner: one-dimensional grid carries unit mass") {
    TempDir tmp;
    const auto cfg = tmp.write("pdf.cfg",
                               "averages=1.0,0.5,0.25\n"
                               "mode=all_N_total\n"
                               "z_start=0\n"
                               "z_stop=25\n"
                               "z_steps=501\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "pdf.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE(run_pdf(opt, log) == exit_code::kOk);

    const auto lines = read_lines(tmp.dir / "pdf.csv");
    REQUIRE(lines.size() == 502);
    REQUIRE(lines[0] == "z,density");
    double mass = 0.0;
    double prev_z = 0.0, prev_f = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto row = split_csv(lines[i]);
        const double z = std::strtod(row[0].c_str(), nullptr);
        const double f = std::strtod(row[1].c_str(), nullptr);
        REQUIRE(f >= 0.0);
        if (i > 1) mass += 0.5 * (f + prev_f) * (z - prev_z);
        prev_z = z;
        prev_f = f;
    }
    REQUIRE(mass == Approx(1.0).margin(1e-3));
}

TEST_CASE("pdf runner: two-dimensional grid zeroes out-of-support cells") {
    TempDir tmp;
    const auto cfg = tmp.write("pdf.cfg",
                               "averages=1.0,0.5\n"
                               "mode=all_N_head_tail\n"
                               "m=1\n"
                               "z1_list=0.5,1.0\n"
                               "z2_list=0.25,2.0\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "pdf2.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE(run_pdf(opt, log) == exit_code::kOk);

    const auto lines = read_lines(tmp.dir / "pdf2.csv");
    REQUIRE(lines.size() == 5);
    REQUIRE(lines[0] == "z1,z2,density");
    // rows are z1-major: (0.5,0.25), (0.5,2), (1,0.25), (1,2)
    const auto in_support = split_csv(lines[1]);
    REQUIRE(std::strtod(in_support[2].c_str(), nullptr) > 0.0);
    // with two branches the head is the larger value: z2 > z1 is impossible
    const auto outside = split_csv(lines[2]);
    REQUIRE(outside[0] == "0.5");
    REQUIRE(outside[1] == "2");
    REQUIRE(outside[2] == "0");
}

TEST_CASE("pdf runner rejects a spec that does not fit the profile") {
    TempDir tmp;
    const auto cfg = tmp.write("pdf.cfg",
                               "averages=1.0,0.5\n"
                               "mode=best_Ns_pivot\n"
                               "m=1\n"
                               "Ns=3\n"
                               "z1_list=1\n"
                               "z2_list=1\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "x.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE_THROWS_AS(run_pdf(opt, log), ConfigError);
}

TEST_CASE("validate runner: fast checks pass and report as CSV") {
    TempDir tmp;
    const auto cfg = tmp.write("val.cfg",
                               "averages=1.0,0.5,0.25\n"
                               "checks=kernels,expansions,total_sum\n"
                               "mc_trials=2000\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "val.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE(run_validate(opt, log) == exit_code::kOk);

    const auto lines = read_lines(tmp.dir / "val.csv");
    REQUIRE(lines.size() == 4);
    REQUIRE(lines[0] == "check,result,detail");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto row = split_csv(lines[i]);
        REQUIRE(row[1] == "PASS");
    }
    REQUIRE(split_csv(lines[1])[0] == "kernels");
    REQUIRE(split_csv(lines[2])[0] == "expansions");
    REQUIRE(split_csv(lines[3])[0] == "total_sum");
}

TEST_CASE("validate runner rejects unknown check names") {
    TempDir tmp;
    const auto cfg = tmp.write("val.cfg",
                               "averages=1.0,0.5\n"
                               "checks=bogus\n");
    RunOptions opt;
    opt.config_path = cfg.string();
    opt.out_path = (tmp.dir / "val.csv").string();
    ::unsetenv("ORDSTAT_JOBS");
    std::ostringstream log;
    REQUIRE_THROWS_AS(run_validate(opt, log), ConfigError);
}

TEST_CASE("sweeps are byte-identical across worker counts") {
    TempDir tmp;
    const auto cfg = tmp.write("cap.cfg",
                               "averages=1.0,0.5,0.25\n"
                               "m_list=1,2\n"
                               "T_start=0.1\n"
                               "T_stop=0.9\n"
                               "T_steps=5\n");
    ::unsetenv("ORDSTAT_JOBS");
    RunOptions one;
    one.config_path = cfg.string();
    one.out_path = (tmp.dir / "one.csv").string();
    one.jobs = 1;
    RunOptions four = one;
    four.out_path = (tmp.dir / "four.csv").string();
    four.jobs = 4;
    std::ostringstream log;
    REQUIRE(run_capture(one, log) == exit_code::kOk);
    REQUIRE(run_capture(four, log) == exit_code::kOk);
    REQUIRE(read_lines(tmp.dir / "one.csv") ==
            read_lines(tmp.dir / "four.csv"));
}
