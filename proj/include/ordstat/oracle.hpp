// SPDX-License-Identifier: MIT
//
// Independent cross-validation oracles.
//
// Everything in this header deliberately avoids the closed-form machinery
// of the main evaluators: Monte Carlo estimates come from sorting raw
// branch draws, and the brute-force integrals evaluate sums over explicit
// orderings of directly nested adaptive quadratures.  Agreement between
// these oracles and the closed forms is the library's primary correctness
// evidence, so the two routes must never share evaluation code.
//
// Monte Carlo runs are sharded: shard s draws from an RNG derived as
// split(seed, s), and shard tallies are integers combined in shard order,
// so results are bit-reproducible for a fixed (seed, shards, trials)
// triple regardless of how the shards are scheduled.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <vector>

#include "ordstat/common.hpp"
#include "ordstat/distributions.hpp"
#include "ordstat/quadrature.hpp"
#include "ordstat/rng.hpp"

namespace ordstat {

/// A Monte Carlo estimate with its standard error.
struct OracleEstimate {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

/// Monte Carlo budget and reproducibility knobs.
struct McConfig {
    std::uint64_t trials = 1000000;
    std::uint64_t seed = 20260814;
    int shards = 16;
};

inline void validate_mc(const McConfig& mc) {
    if (mc.trials < 1000)
        throw ConfigError("McConfig: at least 1000 trials required");
    if (mc.shards < 1) throw ConfigError("McConfig: shards must be positive");
}

/// One draw of all branch gains, sorted in descending order.
inline std::vector<double> sample_ordered(const FadingProfile& profile,
                                          SplitMix64& rng) {
    std::vector<double> u(static_cast<std::size_t>(profile.N()));
    for (int l = 1; l <= profile.N(); ++l) {
        const double x = rng.next_double();
        u[static_cast<std::size_t>(l - 1)] =
            -profile.average(l) * std::log1p(-x);
    }
    std::sort(u.begin(), u.end(), std::greater<double>());
    return u;
}

namespace detail {

/// Sharded count of trials satisfying a predicate of the ordered draw.
inline OracleEstimate mc_event(const FadingProfile& profile,
                               const std::function<bool(const std::vector<double>&)>& event,
                               const McConfig& mc) {
    validate_mc(mc);
    std::uint64_t hits = 0;
    std::uint64_t done = 0;
    const std::uint64_t base = mc.trials / static_cast<std::uint64_t>(mc.shards);
    const std::uint64_t rem = mc.trials % static_cast<std::uint64_t>(mc.shards);
    for (int s = 0; s < mc.shards; ++s) {
        SplitMix64 rng = SplitMix64::split(mc.seed, static_cast<std::uint64_t>(s));
        const std::uint64_t n =
            base + (static_cast<std::uint64_t>(s) < rem ? 1 : 0);
        std::uint64_t local = 0;
        for (std::uint64_t t = 0; t < n; ++t)
            if (event(sample_ordered(profile, rng))) ++local;
        hits += local;
        done += n;
    }
    OracleEstimate est;
    est.trials = done;
    est.value = static_cast<double>(hits) / static_cast<double>(done);
    est.std_error =
        std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(done));
    return est;
}

} // namespace detail

/// Probability that the m strongest branches hold at least the fraction T
/// of the total combined gain, by direct simulation.
inline OracleEstimate mc_capture(const FadingProfile& profile, int m, double T,
                                 const McConfig& mc) {
    const int N = profile.N();
    if (m < 1 || m > N - 1)
        throw ConfigError("mc_capture: m must satisfy 1 <= m <= N-1");
    if (!(T >= 0.0 && T <= 1.0))
        throw ConfigError("mc_capture: T must lie in [0, 1]");
    return detail::mc_event(
        profile,
        [m, T](const std::vector<double>& u) {
            double head = 0.0, total = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                total += u[i];
                if (static_cast<int>(i) < m) head += u[i];
            }
            return head >= T * total;
        },
        mc);
}

/// Probability that the combined gain of the m strongest branches falls
/// below T * (1 + alpha * remaining gain), by direct simulation.
inline OracleEstimate mc_outage(const FadingProfile& profile, int m, double T,
                                double alpha, const McConfig& mc) {
    const int N = profile.N();
    if (m < 1 || m > N - 1)
        throw ConfigError("mc_outage: m must satisfy 1 <= m <= N-1");
    if (T < 0.0 || alpha < 0.0)
        throw ConfigError("mc_outage: T and alpha must be nonnegative");
    return detail::mc_event(
        profile,
        [m, T, alpha](const std::vector<double>& u) {
            double head = 0.0, rest = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i)
                (static_cast<int>(i) < m ? head : rest) += u[i];
            return head < T * (1.0 + alpha * rest);
        },
        mc);
}

/// Regular-grid histogram request: one ascending edge list per dimension.
struct HistogramSpec {
    std::vector<std::vector<double>> edges;
};

/// Histogram of mapped ordered draws.  counts is row-major over the bins;
/// draws falling outside the grid are tallied in `outside`.
struct HistogramResult {
    std::vector<std::size_t> shape;
    std::vector<std::uint64_t> counts;
    std::uint64_t outside = 0;
    std::uint64_t trials = 0;

    std::size_t flat_index(const std::vector<std::size_t>& bin) const {
        std::size_t idx = 0;
        for (std::size_t d = 0; d < shape.size(); ++d) idx = idx * shape[d] + bin[d];
        return idx;
    }
};

/// Histogram the image of the ordered draw under `map` (for example the
/// pair (u_1+...+u_{m}, u_{m+1}+...+u_N)).  Deterministic for fixed
/// (seed, shards, trials).
inline HistogramResult mc_joint_histogram(
    const FadingProfile& profile,
    const std::function<std::vector<double>(const std::vector<double>&)>& map,
    const HistogramSpec& spec, const McConfig& mc) {
    validate_mc(mc);
    if (spec.edges.empty())
        throw ConfigError("mc_joint_histogram: at least one dimension required");
    HistogramResult out;
    std::size_t total_bins = 1;
    for (const auto& e : spec.edges) {
        if (e.size() < 2 || !std::is_sorted(e.begin(), e.end()))
            throw ConfigError("mc_joint_histogram: edges must be ascending with >= 2 entries");
        out.shape.push_back(e.size() - 1);
        total_bins *= e.size() - 1;
    }
    out.counts.assign(total_bins, 0);

    const std::uint64_t base = mc.trials / static_cast<std::uint64_t>(mc.shards);
    const std::uint64_t rem = mc.trials % static_cast<std::uint64_t>(mc.shards);
    std::vector<std::uint64_t> local(total_bins);
    std::vector<std::size_t> bin(spec.edges.size());
    for (int s = 0; s < mc.shards; ++s) {
        SplitMix64 rng = SplitMix64::split(mc.seed, static_cast<std::uint64_t>(s));
        const std::uint64_t n =
            base + (static_cast<std::uint64_t>(s) < rem ? 1 : 0);
        std::fill(local.begin(), local.end(), 0);
        std::uint64_t local_outside = 0;
        for (std::uint64_t t = 0; t < n; ++t) {
            const std::vector<double> z = map(sample_ordered(profile, rng));
            bool inside = z.size() == spec.edges.size();
            for (std::size_t d = 0; inside && d < z.size(); ++d) {
                const auto& e = spec.edges[d];
                if (z[d] < e.front() || z[d] >= e.back()) {
                    inside = false;
                    break;
                }
                const auto it = std::upper_bound(e.begin(), e.end(), z[d]);
                bin[d] = static_cast<std::size_t>(it - e.begin()) - 1;
            }
            if (inside)
                ++local[out.flat_index(bin)];
            else
                ++local_outside;
        }
        for (std::size_t i = 0; i < total_bins; ++i) out.counts[i] += local[i];
        out.outside += local_outside;
        out.trials += n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Brute-force nested integrals (quadrature oracles)
// ---------------------------------------------------------------------------

/// Density of a sum of independent exponentials with distinct rates,
/// in the textbook residue form.  This is a separate evaluation route from
/// the partial-fraction tables used by the main evaluators.
inline double hypoexp_pdf(const std::vector<double>& rates, double z) {
    if (rates.empty()) throw ConfigError("hypoexp_pdf: empty rate list");
    if (z < 0.0) return 0.0;
    KahanAccumulator acc;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < rates.size(); ++j)
            if (j != i) w *= rates[j] / (rates[j] - rates[i]);
        acc.add(w * rates[i] * std::exp(-rates[i] * z));
    }
    return acc.sum_denoised();
}

namespace detail {

using BranchList = std::vector<std::shared_ptr<const Distribution>>;

template <class LevelIntegral>
double sum_over_orderings(std::size_t count, LevelIntegral&& nested) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    KahanAccumulator acc;
    do {
        acc.add(nested(order));
    } while (std::next_permutation(order.begin(), order.end()));
    return acc.sum();
}

} // namespace detail

/// Sum over branch orderings of the downward-nested integrals
///   int_0^u dx1 p(x1) e^{l x1} int_0^{x1} dx2 ... ,
/// which collapses to the product of c-kernels over the set.
inline double brute_nested_c(const detail::BranchList& branches, double u,
                             double lambda, const QuadratureConfig& cfg = {}) {
    if (branches.empty()) throw ConfigError("brute_nested_c: empty branch list");
    return detail::sum_over_orderings(
        branches.size(), [&](const std::vector<std::size_t>& order) {
            std::function<double(std::size_t, double)> rec =
                [&](std::size_t level, double upper) -> double {
                auto f = [&, level](double x) {
                    double v = branches[order[level]]->pdf(x) * std::exp(lambda * x);
                    if (level + 1 < order.size()) v *= rec(level + 1, x);
                    return v;
                };
                return integrate(f, 0.0, upper, cfg);
            };
            return rec(0, u);
        });
}

/// Sum over branch orderings of the upward-nested integrals
///   int_u^inf dx1 p(x1) e^{l x1} int_{x1}^inf dx2 ... ,
/// which collapses to the product of e-kernels over the set.
inline double brute_nested_e(const detail::BranchList& branches, double u,
                             double lambda, double tail_scale,
                             const QuadratureConfig& cfg = {}) {
    if (branches.empty()) throw ConfigError("brute_nested_e: empty branch list");
    return detail::sum_over_orderings(
        branches.size(), [&](const std::vector<std::size_t>& order) {
            std::function<double(std::size_t, double)> rec =
                [&](std::size_t level, double lower) -> double {
                auto f = [&, level](double x) {
                    double v = branches[order[level]]->pdf(x) * std::exp(lambda * x);
                    if (level + 1 < order.size()) v *= rec(level + 1, x);
                    return v;
                };
                return integrate_semi_infinite(f, lower, tail_scale, cfg);
            };
            return rec(0, u);
        });
}

/// Sum over branch orderings of the interval-nested integrals
///   int_ub^ua dx1 p(x1) e^{l x1} int_{x1}^{ua} dx2 ... ,
/// which collapses to the product of mu-kernels over the set.
inline double brute_nested_mu(const detail::BranchList& branches, double ub,
                              double ua, double lambda,
                              const QuadratureConfig& cfg = {}) {
    if (branches.empty()) throw ConfigError("brute_nested_mu: empty branch list");
    return detail::sum_over_orderings(
        branches.size(), [&](const std::vector<std::size_t>& order) {
            std::function<double(std::size_t, double)> rec =
                [&](std::size_t level, double lower) -> double {
                auto f = [&, level](double x) {
                    double v = branches[order[level]]->pdf(x) * std::exp(lambda * x);
                    if (level + 1 < order.size()) v *= rec(level + 1, x);
                    return v;
                };
                return integrate(f, lower, ua, cfg);
            };
            return rec(0, ub);
        });
}

/// Joint MGF of per-position exponents over the ordered draw, by explicit
/// integration over the ordered region u_1 >= u_2 >= ... >= u_N >= 0:
/// `weights[l-1]` multiplies u_l in the exponent.  Every assignment of
/// branches to positions is integrated separately and summed.  Intended
/// for small N; cost grows as N! times a 10^N-ish quadrature.
inline double brute_mgf_ordered(const FadingProfile& profile,
                                const std::vector<double>& weights,
                                const QuadratureConfig& cfg = {}) {
    const int N = profile.N();
    if (static_cast<int>(weights.size()) != N)
        throw ConfigError("brute_mgf_ordered: one weight per position required");
    double wpos = 0.0;
    for (double w : weights) wpos += std::max(0.0, w);
    double gb_max = 0.0;
    for (double gb : profile.averages()) gb_max = std::max(gb_max, gb);
    if (wpos >= 1.0 / gb_max)
        throw ConfigError("brute_mgf_ordered: weights outside convergence region");
    const double scale =
        (wpos == 0.0) ? gb_max : std::max(gb_max, 1.0 / (1.0 / gb_max - wpos));
    const auto branches = profile.distributions();
    return detail::sum_over_orderings(
        branches.size(), [&](const std::vector<std::size_t>& order) {
            std::function<double(std::size_t, double)> rec =
                [&](std::size_t level, double upper) -> double {
                auto f = [&, level](double x) {
                    double v = branches[order[level]]->pdf(x) *
                               std::exp(weights[level] * x);
                    if (level + 1 < order.size()) v *= rec(level + 1, x);
                    return v;
                };
                if (level == 0) return integrate_semi_infinite(f, 0.0, scale, cfg);
                return integrate(f, 0.0, upper, cfg);
            };
            return rec(0, kInf);
        });
}

} // namespace ordstat
