// SPDX-License-Identifier: MIT
//
// Acceptance gate.  Each invocation checks one numbered criterion and
// prints exactly one [PASS]/[FAIL] line; the exit status is 0 on pass.
// Tolerances and runtime budgets are pinned as constants below — they are
// part of the contract, not knobs.
//
//   1  exponential kernel closed forms vs direct quadrature
//   2  product expansions vs direct kernel products
//   3  nested ordered integrals vs kernel products
//   4  total-sum density vs hypoexponential oracle
//   5  joint densities vs Monte Carlo histograms
//   6  capture probability: closed form vs numeric integral vs Monte Carlo
//   7  outage probability vs Monte Carlo, with monotonicity
//   8  golden CSV regression, byte-identical reruns

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "ordstat/applications.hpp"
#include "ordstat/common.hpp"
#include "ordstat/distributions.hpp"
#include "ordstat/joint_densities.hpp"
#include "ordstat/kernels.hpp"
#include "ordstat/oracle.hpp"
#include "ordstat/quadrature.hpp"
#include "ordstat/rng.hpp"
#include "ordstat/validation.hpp"

namespace fs = std::filesystem;
using namespace ordstat;

namespace {

// ---------------------------------------------------------------------------
// pinned tolerances
// ---------------------------------------------------------------------------
constexpr double kKernelQuadRel = 1e-8;     // criterion 1: closed vs quadrature
constexpr double kKernelInterTol = 1e-10;   // criterion 1: interrelation identity
constexpr double kExpansionRel = 1e-9;      // criterion 2
constexpr double kNestedRel = 1e-6;         // criterion 3
constexpr double kTotalPdfRel = 1e-8;       // criterion 4: density agreement
constexpr double kTotalMassTol = 1e-6;      // criterion 4: normalization
constexpr double kBandSe = 3.0;             // criteria 5-7: Monte Carlo band
constexpr double kBinFraction = 0.95;       // criterion 5: bins within band
constexpr double kCaptureRouteRel = 1e-4;   // criterion 6: closed vs numeric
constexpr double kCaptureLimitTol = 1e-3;   // criterion 6: endpoint limits
constexpr double kMonotoneSlack = 1e-12;    // criteria 6-7
constexpr std::uint64_t kJointTrials = 10'000'000;
constexpr std::uint64_t kCaptureTrials = 10'000'000;
constexpr std::uint64_t kOutageTrials = 1'000'000;
constexpr std::uint64_t kSeed = 20260814;

// wall-clock budgets per criterion, seconds (index 1..8)
constexpr double kBudgetSeconds[9] = {0, 10, 10, 120, 60, 900, 600, 300, 120};

// ---------------------------------------------------------------------------
// bookkeeping
// ---------------------------------------------------------------------------
struct Gate {
    int checks = 0;
    int failed = 0;
    std::vector<std::string> details;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (ok) return;
        ++failed;
        if (details.size() < 5) details.push_back(what);
    }
};

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// criterion 1: closed-form kernels vs direct quadrature of the definitions
// ---------------------------------------------------------------------------
Gate criterion_kernels(std::string& headline) {
    Gate g;
    // Near-pure relative convergence so the reference stays accurate even
    // where the kernels are ~1e-11 small.
    QuadratureConfig tight;
    tight.abs_tol = 1e-280;
    tight.rel_tol = 1e-11;
    const double gammas[5] = {0.25, 0.6, 1.0, 1.7, 3.2};
    const double zs[5] = {0.1, 0.5, 1.0, 2.2, 4.0};
    const double lambdas[5] = {-2.0, -1.2, -0.7, -0.3, 0.0};

    for (double gb : gammas) {
        const ExponentialDistribution dist(gb);
        const double rate = 1.0 / gb;
        for (double z : zs) {
            for (double l : lambdas) {
                const double scale = 1.0 / (rate - l);
                const double c_closed = kernel_c_exp<double>(gb, z, l);
                const double c_quad = kernel_c<double>(dist, z, l, scale, tight);
                g.expect(rel_err(c_closed, c_quad) <= kKernelQuadRel,
                         "c(" + fmt(gb) + "," + fmt(z) + "," + fmt(l) +
                             "): closed " + fmt(c_closed) + " vs quad " +
                             fmt(c_quad));

                const double e_closed = kernel_e_exp<double>(gb, z, l);
                const double e_quad = kernel_e<double>(dist, z, l, scale, tight);
                g.expect(rel_err(e_closed, e_quad) <= kKernelQuadRel,
                         "e(" + fmt(gb) + "," + fmt(z) + "," + fmt(l) +
                             "): closed " + fmt(e_closed) + " vs quad " +
                             fmt(e_quad));

                const double zb = z + 1.5;
                const double mu_closed = kernel_mu_exp<double>(gb, z, zb, l);
                const double mu_quad =
                    kernel_mu<double>(dist, z, zb, l, scale, tight);
                g.expect(rel_err(mu_closed, mu_quad) <= kKernelQuadRel,
                         "mu(" + fmt(gb) + "," + fmt(z) + "," + fmt(l) +
                             "): closed " + fmt(mu_closed) + " vs quad " +
                             fmt(mu_quad));

                // interval kernel as difference of one-sided kernels
                const double via_c = kernel_c_exp<double>(gb, zb, l) - c_closed;
                const double via_e = e_closed - kernel_e_exp<double>(gb, zb, l);
                const double sc = std::max(1.0, std::abs(mu_closed));
                g.expect(std::abs(mu_closed - via_c) <= kKernelInterTol * sc,
                         "interrelation via c at (" + fmt(gb) + "," + fmt(z) +
                             "," + fmt(l) + ")");
                g.expect(std::abs(mu_closed - via_e) <= kKernelInterTol * sc,
                         "interrelation via e at (" + fmt(gb) + "," + fmt(z) +
                             "," + fmt(l) + ")");
            }
        }
    }
    headline = "closed-form kernels match direct quadrature on a 5x5x5 grid";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 2: summation expansions vs direct products of kernels
// ---------------------------------------------------------------------------
Gate criterion_expansions(std::string& headline) {
    Gate g;
    const FadingProfile base = profile_from_mip({1.2, 0.45, 5});
    SplitMix64 rng = SplitMix64::split(kSeed, 2);

    for (int n = 1; n <= 5; ++n) {
        const std::vector<double> avgs(base.averages().begin(),
                                       base.averages().begin() + n);
        double min_rate = kInf;
        for (double a : avgs) min_rate = std::min(min_rate, 1.0 / a);
        for (int pt = 0; pt < 100; ++pt) {
            const double za = 0.05 + 3.0 * rng.next_double();
            const double zb = za + 0.15 + 2.0 * rng.next_double();
            // keep lambda below every rate so the e-kernels converge
            const double l = -3.0 + (3.0 + 0.6 * min_rate) * rng.next_double();

            double c_direct = 1.0, e_direct = 1.0, mu_direct = 1.0;
            for (double a : avgs) {
                c_direct *= kernel_c_exp<double>(a, za, l);
                e_direct *= kernel_e_exp<double>(a, za, l);
                mu_direct *= kernel_mu_exp<double>(a, za, zb, l);
            }
            const double c_sum = prod_c_expansion<double>(avgs, za, l);
            const double e_sum = prod_e_expansion<double>(avgs, za, l);
            const double mu_sum = prod_mu_expansion<double>(avgs, za, zb, l);

            g.expect(rel_err(c_sum, c_direct) <= kExpansionRel,
                     "c expansion n=" + std::to_string(n) + " za=" + fmt(za) +
                         " l=" + fmt(l) + ": " + fmt(c_sum) + " vs " +
                         fmt(c_direct));
            g.expect(rel_err(e_sum, e_direct) <= kExpansionRel,
                     "e expansion n=" + std::to_string(n) + " za=" + fmt(za) +
                         " l=" + fmt(l) + ": " + fmt(e_sum) + " vs " +
                         fmt(e_direct));
            g.expect(rel_err(mu_sum, mu_direct) <= kExpansionRel,
                     "mu expansion n=" + std::to_string(n) + " za=" + fmt(za) +
                         " zb=" + fmt(zb) + " l=" + fmt(l) + ": " + fmt(mu_sum) +
                         " vs " + fmt(mu_direct));
        }
    }
    headline = "summation expansions match direct kernel products, sizes 1-5";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 3: nested ordered integrals vs kernel products
// ---------------------------------------------------------------------------
Gate criterion_nested(std::string& headline) {
    Gate g;
    const FadingProfile profile({1.0, 0.55, 1.6});
    const auto branches = profile.distributions();
    double min_rate = kInf;
    for (double a : profile.averages())
        min_rate = std::min(min_rate, 1.0 / a);
    SplitMix64 rng = SplitMix64::split(kSeed, 3);

    for (int pt = 0; pt < 20; ++pt) {
        const double u = 0.2 + 2.0 * rng.next_double();
        const double l = -2.0 + (2.0 + 0.5 * min_rate) * rng.next_double();
        const double ub = 0.2 + rng.next_double();
        const double ua = ub + 0.3 + rng.next_double();

        double c_prod = 1.0, e_prod = 1.0, mu_prod = 1.0;
        for (double a : profile.averages()) {
            c_prod *= kernel_c_exp<double>(a, u, l);
            e_prod *= kernel_e_exp<double>(a, u, l);
            mu_prod *= kernel_mu_exp<double>(a, ub, ua, l);
        }

        const double c_brute = brute_nested_c(branches, u, l);
        g.expect(rel_err(c_brute, c_prod) <= kNestedRel,
                 "nested c at u=" + fmt(u) + " l=" + fmt(l) + ": " +
                     fmt(c_brute) + " vs " + fmt(c_prod));

        const double tail_scale = 1.0 / (min_rate - std::min(l, 0.0));
        const double e_brute = brute_nested_e(branches, u, l, tail_scale);
        g.expect(rel_err(e_brute, e_prod) <= kNestedRel,
                 "nested e at u=" + fmt(u) + " l=" + fmt(l) + ": " +
                     fmt(e_brute) + " vs " + fmt(e_prod));

        const double mu_brute = brute_nested_mu(branches, ub, ua, l);
        g.expect(rel_err(mu_brute, mu_prod) <= kNestedRel,
                 "nested mu at ub=" + fmt(ub) + " ua=" + fmt(ua) + " l=" +
                     fmt(l) + ": " + fmt(mu_brute) + " vs " + fmt(mu_prod));
    }
    headline = "nested ordered integrals collapse to kernel products (N=3)";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 4: total-sum density vs hypoexponential oracle
// ---------------------------------------------------------------------------
Gate criterion_total_sum(std::string& headline) {
    Gate g;
    SplitMix64 rng = SplitMix64::split(kSeed, 4);

    for (int N = 2; N <= 4; ++N) {
        std::vector<double> avgs;
        std::vector<double> rates;
        for (int i = 0; i < N; ++i) {
            // spaced lattice with jitter: distinct by construction
            const double a = 0.5 + 0.7 * i + 0.15 * (rng.next_double() - 0.5);
            avgs.push_back(a);
            rates.push_back(1.0 / a);
        }
        const FadingProfile profile(avgs);
        const TotalSumDensity density(profile);

        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            // 100 points from the left tail to ~2x the mean total; below
            // z ~ 0.1 both residue forms cancel past double precision, so
            // a relative comparison stops being meaningful there
            const double z = 0.1 + 0.12 * k;
            const double got = density.pdf(z);
            const double want = hypoexp_pdf(rates, z);
            worst = std::max(worst, rel_err(got, want));
        }
        g.expect(worst <= kTotalPdfRel,
                 "N=" + std::to_string(N) + ": worst density deviation " +
                     fmt(worst));

        double scale = 0.0;
        for (double a : avgs) scale = std::max(scale, a);
        QuadratureConfig cfg;
        cfg.abs_tol = 1e-9;
        cfg.rel_tol = 1e-9;
        const double mass = integrate_semi_infinite(
            [&](double z) { return density.pdf(z); }, 0.0, scale, cfg);
        g.expect(std::abs(mass - 1.0) <= kTotalMassTol,
                 "N=" + std::to_string(N) + ": normalization " + fmt(mass));
    }
    headline = "total-sum density equals the hypoexponential oracle, N=2..4";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 5: joint densities vs Monte Carlo histograms
// ---------------------------------------------------------------------------
Gate criterion_joint_mc(std::string& headline) {
    Gate g;
    struct JointCase {
        const char* label;
        int N;
        PartialSumSpec spec;
    };
    const JointCase cases[] = {
        {"head/tail m=2 of all 5", 5, {PartialSumMode::AllHeadTail, 2, 0}},
        {"head/tail m=3 of all 6", 6, {PartialSumMode::AllHeadTail, 3, 0}},
        {"pivot m=3 vs rest of all 5", 5, {PartialSumMode::AllPivot, 3, 0}},
        {"total of best 3 of 5", 5, {PartialSumMode::BestTotal, 0, 3}},
        {"pivot m=1 of best 3 of 5", 5, {PartialSumMode::BestPivot, 1, 3}},
        {"pivot m=3 of best 3 of 5", 5, {PartialSumMode::BestPivot, 3, 3}},
        {"head/tail m=3 of best 4 of 5", 5,
         {PartialSumMode::BestHeadTail, 3, 4}},
        {"head/tail m=1 of best 3 of 5", 5,
         {PartialSumMode::BestHeadTail, 1, 3}},
    };

    // Bin masses only need to be accurate well below one standard error
    // (~1e-5 at 1e7 trials), so a loose quadrature keeps this fast.
    QuadratureConfig cfg;
    cfg.abs_tol = 1e-8;
    cfg.rel_tol = 1e-6;

    double worst_fraction = 1.0;
    double worst_dev = 0.0;
    for (const auto& jc : cases) {
        const FadingProfile profile = profile_from_mip({1.0, 0.5, jc.N});
        const std::size_t bins = spec_dimension(jc.spec) == 2 ? 12 : 24;
        const HistogramSpec hs =
            auto_histogram_edges(profile, jc.spec, bins, kSeed);
        McConfig mc;
        mc.trials = kJointTrials;
        mc.seed = kSeed;
        const HistogramComparison cmp = compare_density_to_histogram(
            profile, jc.spec, hs, mc, kBandSe, 20.0, cfg);
        worst_fraction = std::min(worst_fraction, cmp.fraction_within());
        worst_dev = std::max(worst_dev, cmp.worst_dev);
        g.expect(cmp.fraction_within() >= kBinFraction,
                 std::string(jc.label) + ": " + cmp.describe());
        g.expect(cmp.support_violations == 0,
                 std::string(jc.label) + ": support violations, " +
                     cmp.describe());
    }
    headline =
        "joint densities match Monte Carlo histograms (8 configurations, "
        "worst fraction " +
        fmt(worst_fraction) + ", worst dev " + fmt(worst_dev) + " s.e.)";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 6: capture probability, three routes + shape + limits
// ---------------------------------------------------------------------------
Gate criterion_capture(std::string& headline) {
    Gate g;
    const int configs[3][2] = {{3, 1}, {4, 2}, {5, 3}};

    QuadratureConfig cfg;
    cfg.abs_tol = 1e-12;
    cfg.rel_tol = 1e-10;

    for (const auto& nm : configs) {
        const int N = nm[0];
        const int m = nm[1];
        const FadingProfile profile = profile_from_mip({1.0, 0.5, N});
        const std::string tag =
            "(N=" + std::to_string(N) + ",m=" + std::to_string(m) + ") ";

        double prev = 1.0;
        for (int k = 1; k <= 20; ++k) {
            const double T = static_cast<double>(k) / 21.0;
            const double closed = capture_probability_closed(profile, m, T);
            const double numeric =
                capture_probability_numeric(profile, m, T, cfg);
            g.expect(rel_err(numeric, closed) <= kCaptureRouteRel,
                     tag + "T=" + fmt(T) + ": closed " + fmt(closed) +
                         " vs numeric " + fmt(numeric));

            McConfig mc;
            mc.trials = kCaptureTrials;
            mc.seed = kSeed;
            const OracleEstimate est = mc_capture(profile, m, T, mc);
            // standard error under the closed-form hypothesis value
            const double p = std::clamp(closed, 1e-15, 1.0 - 1e-15);
            const double se =
                std::sqrt(p * (1.0 - p) / static_cast<double>(mc.trials));
            g.expect(std::abs(est.value - closed) <= kBandSe * se,
                     tag + "T=" + fmt(T) + ": MC " + fmt(est.value) + " vs " +
                         fmt(closed) + " (se " + fmt(se) + ")");

            g.expect(closed <= prev + kMonotoneSlack,
                     tag + "not non-increasing at T=" + fmt(T));
            prev = closed;
        }

        const double near_zero = capture_probability_closed(profile, m, 1e-4);
        const double near_one =
            capture_probability_closed(profile, m, 1.0 - 1e-4);
        g.expect(near_zero >= 1.0 - kCaptureLimitTol,
                 tag + "limit at T->0: " + fmt(near_zero));
        g.expect(near_one <= kCaptureLimitTol,
                 tag + "limit at T->1: " + fmt(near_one));
    }
    headline =
        "capture probability: closed form, numeric integral and Monte Carlo "
        "agree over 20-point sweeps";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 7: outage probability vs Monte Carlo + monotonicity
// ---------------------------------------------------------------------------
Gate criterion_outage(std::string& headline) {
    Gate g;
    const FadingProfile profile = profile_from_mip({1.0, 0.5, 4});

    for (int m : {1, 2}) {
        for (double T : {0.3, 0.7}) {
            for (double alpha : {0.5, 1.5}) {
                const double p_num = outage_probability(profile, m, T, alpha);
                McConfig mc;
                mc.trials = kOutageTrials;
                mc.seed = kSeed;
                const OracleEstimate est =
                    mc_outage(profile, m, T, alpha, mc);
                const double p = std::clamp(p_num, 1e-15, 1.0 - 1e-15);
                const double se =
                    std::sqrt(p * (1.0 - p) / static_cast<double>(mc.trials));
                g.expect(std::abs(est.value - p_num) <= kBandSe * se,
                         "m=" + std::to_string(m) + " T=" + fmt(T) + " a=" +
                             fmt(alpha) + ": MC " + fmt(est.value) + " vs " +
                             fmt(p_num) + " (se " + fmt(se) + ")");
            }
        }
    }

    // monotone non-decreasing in the threshold
    double prev = -1.0;
    for (double T : {0.2, 0.35, 0.5, 0.65, 0.8}) {
        const double p = outage_probability(profile, 1, T, 1.0);
        g.expect(p + kMonotoneSlack >= prev,
                 "not non-decreasing in T at T=" + fmt(T));
        prev = p;
    }
    // monotone non-decreasing in the interference weight
    prev = -1.0;
    for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
        const double p = outage_probability(profile, 2, 0.5, alpha);
        g.expect(p + kMonotoneSlack >= prev,
                 "not non-decreasing in alpha at a=" + fmt(alpha));
        prev = p;
    }
    g.expect(outage_probability(profile, 1, 0.0, 1.0) == 0.0,
             "outage at T=0 must be exactly zero");

    headline = "outage probability matches Monte Carlo and is monotone";
    return g;
}

// ---------------------------------------------------------------------------
// criterion 8: golden CSV regression
// ---------------------------------------------------------------------------
std::string slurp(const fs::path& p, bool& ok) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        ok = false;
        return {};
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ok = true;
    return buf.str();
}

Gate criterion_golden(std::string& headline) {
    Gate g;
    const std::string binary = ORDSTAT_BINARY_PATH;
    const fs::path golden_dir = ORDSTAT_GOLDEN_DIR;
    const fs::path work =
        fs::temp_directory_path() /
        ("ordstat_golden_" + std::to_string(static_cast<long>(::getpid())));
    fs::create_directories(work);

    struct Scenario {
        const char* subcommand;
        const char* config;
        const char* committed;
    };
    const Scenario scenarios[] = {
        {"capture", "capture_golden.cfg", "capture_golden.csv"},
        {"pdf", "pdf_golden.cfg", "pdf_golden.csv"},
    };

    for (const auto& sc : scenarios) {
        const fs::path cfg = golden_dir / sc.config;
        const fs::path out1 = work / (std::string("run1_") + sc.committed);
        const fs::path out2 = work / (std::string("run2_") + sc.committed);
        for (const fs::path& out : {out1, out2}) {
            const std::string cmd = "\"" + binary + "\" " + sc.subcommand +
                                    " --config \"" + cfg.string() +
                                    "\" --out \"" + out.string() +
                                    "\" --seed 20260814 --jobs 2 "
                                    ">/dev/null 2>&1";
            const int rc = std::system(cmd.c_str());
            g.expect(rc == 0, std::string(sc.subcommand) +
                                  ": nonzero exit status " +
                                  std::to_string(rc));
        }
        bool ok1 = false, ok2 = false, ok3 = false;
        const std::string a = slurp(out1, ok1);
        const std::string b = slurp(out2, ok2);
        const std::string c = slurp(golden_dir / sc.committed, ok3);
        g.expect(ok1 && ok2, std::string(sc.subcommand) + ": output missing");
        g.expect(ok3, std::string(sc.subcommand) +
                          ": committed golden file missing");
        g.expect(ok1 && ok2 && a == b,
                 std::string(sc.subcommand) + ": reruns differ");
        g.expect(ok1 && ok3 && a == c,
                 std::string(sc.subcommand) +
                     ": output differs from committed golden file");
    }
    fs::remove_all(work);
    headline = "golden CSV outputs are byte-identical across reruns and "
               "match the committed files";
    return g;
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1-8>\n";
        return 2;
    }
    const int crit = std::atoi(argv[1]);
    if (crit < 1 || crit > 8) {
        std::cerr << "usage: acceptance <criterion 1-8>\n";
        return 2;
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::string headline;
    Gate g;
    try {
        switch (crit) {
            case 1: g = criterion_kernels(headline); break;
            case 2: g = criterion_expansions(headline); break;
            case 3: g = criterion_nested(headline); break;
            case 4: g = criterion_total_sum(headline); break;
            case 5: g = criterion_joint_mc(headline); break;
            case 6: g = criterion_capture(headline); break;
            case 7: g = criterion_outage(headline); break;
            case 8: g = criterion_golden(headline); break;
        }
    } catch (const std::exception& e) {
        std::cout << "[FAIL] criterion " << crit
                  << ": unexpected exception: " << e.what() << "\n";
        return 1;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    g.expect(elapsed <= kBudgetSeconds[crit],
             "runtime " + fmt(elapsed) + " s exceeds budget " +
                 fmt(kBudgetSeconds[crit]) + " s");

    if (g.failed == 0) {
        std::cout << "[PASS] criterion " << crit << ": " << headline << " ("
                  << g.checks << " checks, " << fmt(elapsed) << " s)\n";
        return 0;
    }
    std::cout << "[FAIL] criterion " << crit << ": " << g.failed << "/"
              << g.checks << " checks failed";
    for (const auto& d : g.details) std::cout << "\n       " << d;
    std::cout << "\n";
    return 1;
}
