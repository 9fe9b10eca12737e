// SPDX-License-Identifier: MIT
//
// Statistical comparison of closed-form joint densities against Monte
// Carlo histograms.
//
// The comparison works on bin probabilities rather than density values:
// the closed-form mass of each histogram bin is obtained by (adaptive)
// quadrature of the density over the bin, and is then required to sit
// within a few multinomial standard errors of the empirical bin fraction.
// Bins wholly outside the analytic support must receive zero counts —
// that checks the support predicate itself, not just the density values.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ordstat/joint_densities.hpp"
#include "ordstat/oracle.hpp"
#include "ordstat/quadrature.hpp"
#include "ordstat/rng.hpp"

namespace ordstat {

/// Maps an ordered draw u_1 >= ... >= u_N to the partial-sum vector whose
/// density `make_joint_density` evaluates for the same spec.
inline std::function<std::vector<double>(const std::vector<double>&)>
partial_sum_map(const PartialSumSpec& spec, int N) {
    validate_spec(spec, N);
    const int m = spec.m;
    const int Ns = spec.Ns;
    switch (spec.mode) {
        case PartialSumMode::AllTotal:
            return [N](const std::vector<double>& u) {
                double s = 0.0;
                for (int i = 0; i < N; ++i) s += u[i];
                return std::vector<double>{s};
            };
        case PartialSumMode::AllHeadTail:
            return [N, m](const std::vector<double>& u) {
                double head = 0.0, tail = 0.0;
                for (int i = 0; i < N; ++i) (i < m ? head : tail) += u[i];
                return std::vector<double>{head, tail};
            };
        case PartialSumMode::AllPivot:
            return [N, m](const std::vector<double>& u) {
                double rest = 0.0;
                for (int i = 0; i < N; ++i)
                    if (i != m - 1) rest += u[i];
                return std::vector<double>{u[m - 1], rest};
            };
        case PartialSumMode::BestTotal:
            return [Ns](const std::vector<double>& u) {
                double s = 0.0;
                for (int i = 0; i < Ns; ++i) s += u[i];
                return std::vector<double>{s};
            };
        case PartialSumMode::BestPivot:
            return [Ns, m](const std::vector<double>& u) {
                double rest = 0.0;
                for (int i = 0; i < Ns; ++i)
                    if (i != m - 1) rest += u[i];
                return std::vector<double>{u[m - 1], rest};
            };
        case PartialSumMode::BestHeadTail:
            return [Ns, m](const std::vector<double>& u) {
                double head = 0.0, tail = 0.0;
                for (int i = 0; i < Ns; ++i) (i < m ? head : tail) += u[i];
                return std::vector<double>{head, tail};
            };
    }
    throw ConfigError("partial_sum_map: unknown mode");
}

namespace detail {

/// Round up to two significant digits, so pilot-derived grid limits stay
/// stable against tiny sampling perturbations.
inline double round_up_2sig(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)) - 1.0);
    return std::ceil(v / mag) * mag;
}

} // namespace detail

/// Regular histogram edges sized from a deterministic pilot sample: each
/// axis spans [0, ~99th percentile], rounded up to two significant digits.
inline HistogramSpec auto_histogram_edges(const FadingProfile& profile,
                                          const PartialSumSpec& spec,
                                          std::size_t bins_per_dim,
                                          std::uint64_t seed = 20260814,
                                          std::size_t pilot = 20000) {
    if (bins_per_dim < 2)
        throw ConfigError("auto_histogram_edges: need at least 2 bins");
    const auto map = partial_sum_map(spec, profile.N());
    const int dim = spec_dimension(spec);
    SplitMix64 rng = SplitMix64::split(seed, 0x9e3779b9u);
    std::vector<std::vector<double>> samples(static_cast<std::size_t>(dim));
    for (std::size_t t = 0; t < pilot; ++t) {
        const auto z = map(sample_ordered(profile, rng));
        for (int d = 0; d < dim; ++d)
            samples[static_cast<std::size_t>(d)].push_back(
                z[static_cast<std::size_t>(d)]);
    }
    HistogramSpec out;
    for (auto& s : samples) {
        std::sort(s.begin(), s.end());
        const double q99 = s[static_cast<std::size_t>(0.99 * (s.size() - 1))];
        const double top = detail::round_up_2sig(q99);
        std::vector<double> edges(bins_per_dim + 1);
        for (std::size_t i = 0; i <= bins_per_dim; ++i)
            edges[i] = top * static_cast<double>(i) /
                       static_cast<double>(bins_per_dim);
        out.edges.push_back(std::move(edges));
    }
    return out;
}

/// Closed-form probability mass of one histogram bin, by quadrature of the
/// density over the box.  The density returns exact zero outside its
/// support, so the adaptive subdivision localises any support kink inside
/// the box.
inline double bin_mass(const JointDensityResult& density,
                       const std::vector<double>& lo,
                       const std::vector<double>& hi,
                       const QuadratureConfig& cfg) {
    if (density.dimension == 1) {
        return integrate(
            [&](double x) { return density.density({x}); }, lo[0], hi[0], cfg);
    }
    if (density.dimension == 2) {
        QuadratureConfig inner_cfg = cfg;
        inner_cfg.abs_tol *= 0.1;
        auto outer = [&](double x) {
            return integrate([&](double y) { return density.density({x, y}); },
                             lo[1], hi[1], inner_cfg);
        };
        return integrate(outer, lo[0], hi[0], cfg);
    }
    throw ConfigError("bin_mass: dimension must be 1 or 2");
}

/// Outcome of comparing one histogram against closed-form bin masses.
struct HistogramComparison {
    std::uint64_t trials = 0;
    std::size_t bins_compared = 0;       ///< bins with non-negligible mass
    std::size_t bins_within = 0;         ///< of those, within the s.e. band
    std::size_t empty_required = 0;      ///< bins wholly outside the support
    std::size_t support_violations = 0;  ///< of those, with nonzero counts
    double worst_dev = 0.0;              ///< worst |p_hat - p| / s.e. seen
    double mass_covered = 0.0;           ///< total closed-form mass compared

    double fraction_within() const {
        return bins_compared == 0
                   ? 1.0
                   : static_cast<double>(bins_within) /
                         static_cast<double>(bins_compared);
    }
    bool passed(double min_fraction = 0.95) const {
        return fraction_within() >= min_fraction && support_violations == 0;
    }
    std::string describe() const {
        std::ostringstream os;
        os << bins_within << "/" << bins_compared
           << " bins within band (worst dev " << worst_dev << " s.e.), "
           << support_violations << "/" << empty_required
           << " support violations, mass covered " << mass_covered;
        return os.str();
    }
};

/// Compares the closed-form density for `spec` against a Monte Carlo
/// histogram of `mc.trials` ordered draws.  A bin enters the s.e.
/// comparison when its closed-form mass predicts at least `min_expected`
/// counts; it must be empty when the support predicate rejects a probe
/// grid over the whole box and the closed-form mass is negligible.
inline HistogramComparison compare_density_to_histogram(
    const FadingProfile& profile, const PartialSumSpec& spec,
    const HistogramSpec& hs, const McConfig& mc, double band_se = 3.0,
    double min_expected = 20.0, QuadratureConfig cfg = {}) {
    const auto density = make_joint_density(profile, spec);
    const auto map = partial_sum_map(spec, profile.N());
    const HistogramResult hist = mc_joint_histogram(profile, map, hs, mc);
    const int dim = density.dimension;
    if (static_cast<int>(hs.edges.size()) != dim)
        throw ConfigError("compare_density_to_histogram: grid arity mismatch");

    HistogramComparison out;
    out.trials = hist.trials;
    const double n = static_cast<double>(hist.trials);

    std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
    const std::size_t total_bins = hist.counts.size();
    for (std::size_t flat = 0; flat < total_bins; ++flat) {
        std::vector<double> lo(static_cast<std::size_t>(dim));
        std::vector<double> hi(static_cast<std::size_t>(dim));
        for (int d = 0; d < dim; ++d) {
            const auto& e = hs.edges[static_cast<std::size_t>(d)];
            lo[static_cast<std::size_t>(d)] = e[idx[static_cast<std::size_t>(d)]];
            hi[static_cast<std::size_t>(d)] = e[idx[static_cast<std::size_t>(d)] + 1];
        }

        // Probe the support predicate on a 5^dim lattice including corners.
        bool any_support = false;
        const int probes = 5;
        std::vector<double> pt(static_cast<std::size_t>(dim));
        const std::size_t lattice =
            static_cast<std::size_t>(std::pow(probes, dim));
        for (std::size_t q = 0; q < lattice && !any_support; ++q) {
            std::size_t rem = q;
            for (int d = 0; d < dim; ++d) {
                const int step = static_cast<int>(rem % probes);
                rem /= probes;
                pt[static_cast<std::size_t>(d)] =
                    lo[static_cast<std::size_t>(d)] +
                    (hi[static_cast<std::size_t>(d)] -
                     lo[static_cast<std::size_t>(d)]) *
                        step / (probes - 1);
            }
            any_support = density.support(pt);
        }

        const double mass = bin_mass(density, lo, hi, cfg);
        const std::uint64_t count = hist.counts[flat];
        if (!any_support && mass < 1e-12) {
            ++out.empty_required;
            if (count != 0) ++out.support_violations;
        } else if (mass * n >= min_expected) {
            ++out.bins_compared;
            out.mass_covered += mass;
            const double se = std::sqrt(mass * (1.0 - mass) / n);
            const double dev =
                std::abs(static_cast<double>(count) / n - mass) / se;
            out.worst_dev = std::max(out.worst_dev, dev);
            if (dev <= band_se) ++out.bins_within;
        }

        for (int d = dim - 1; d >= 0; --d) {
            if (++idx[static_cast<std::size_t>(d)] <
                hs.edges[static_cast<std::size_t>(d)].size() - 1)
                break;
            idx[static_cast<std::size_t>(d)] = 0;
        }
    }
    return out;
}

} // namespace ordstat
