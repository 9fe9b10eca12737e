// SPDX-License-Identifier: MIT
//
// Random-variable abstraction and the exponential family.
//
// All analytical machinery in this library is parameterized by per-branch
// distributions of the unordered variables.  The generic numeric paths only
// require a pdf, a cdf and a sampler; closed-form evaluation is provided
// for exponential branches, described collectively by a FadingProfile (the
// vector of per-branch averages).

#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ordstat/common.hpp"
#include "ordstat/rng.hpp"

namespace ordstat {

/// Minimal abstract nonnegative random variable: density, distribution
/// function and an inverse-CDF sampler.  Immutable after construction and
/// shareable across threads.
class Distribution {
public:
    virtual ~Distribution() = default;
    virtual double pdf(double x) const = 0;
    virtual double cdf(double x) const = 0;
    virtual double sample(SplitMix64& rng) const = 0;
};

/// Density of the exponential law with mean gamma_bar:
/// (1/gamma_bar) * exp(-x/gamma_bar) for x >= 0, zero for x < 0.
inline double exponential_pdf(double x, double gamma_bar) {
    if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
        throw ConfigError("exponential_pdf: average must be positive, got " +
                          std::to_string(gamma_bar));
    if (x < 0.0) return 0.0;
    return std::exp(-x / gamma_bar) / gamma_bar;
}

/// Distribution function of the exponential law with mean gamma_bar:
/// 1 - exp(-x/gamma_bar) for x >= 0, zero for x < 0.
inline double exponential_cdf(double x, double gamma_bar) {
    if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
        throw ConfigError("exponential_cdf: average must be positive, got " +
                          std::to_string(gamma_bar));
    if (x < 0.0) return 0.0;
    return -std::expm1(-x / gamma_bar);
}

/// Exponential branch with mean gamma_bar.  Sampling uses the inverse CDF
/// -gamma_bar * ln(1 - u), which keeps results bit-reproducible given the
/// portable uniform stream.
class ExponentialDistribution final : public Distribution {
public:
    explicit ExponentialDistribution(double gamma_bar) : gamma_bar_(gamma_bar) {
        if (!(gamma_bar > 0.0) || !std::isfinite(gamma_bar))
            throw ConfigError("ExponentialDistribution: average must be positive");
    }

    double pdf(double x) const override { return exponential_pdf(x, gamma_bar_); }
    double cdf(double x) const override { return exponential_cdf(x, gamma_bar_); }
    double sample(SplitMix64& rng) const override {
        // u in [0,1) so 1-u in (0,1]; log1p(-u) is exact near u = 0.
        return -gamma_bar_ * std::log1p(-rng.next_double());
    }

    double gamma_bar() const { return gamma_bar_; }

private:
    double gamma_bar_;
};

/// The vector of per-branch averages.  Partial-fraction expansions assume
/// simple poles, i.e. pairwise distinct averages; near-coincident profiles
/// are rejected at construction rather than silently regularized.
class FadingProfile {
public:
    static constexpr double kDefaultSeparation = 1e-6;

    explicit FadingProfile(std::vector<double> averages,
                           double min_relative_separation = kDefaultSeparation)
        : averages_(std::move(averages)) {
        if (averages_.empty())
            throw ConfigError("FadingProfile: needs at least one branch");
        for (std::size_t i = 0; i < averages_.size(); ++i) {
            if (!(averages_[i] > 0.0) || !std::isfinite(averages_[i]))
                throw ConfigError("FadingProfile: average #" +
                                  std::to_string(i + 1) +
                                  " must be positive and finite");
        }
        for (std::size_t i = 0; i < averages_.size(); ++i) {
            for (std::size_t j = i + 1; j < averages_.size(); ++j) {
                const double scale = std::max(averages_[i], averages_[j]);
                if (std::abs(averages_[i] - averages_[j]) <
                    min_relative_separation * scale) {
                    throw ConfigError(
                        "FadingProfile: averages #" + std::to_string(i + 1) +
                        " and #" + std::to_string(j + 1) + " (" +
                        std::to_string(averages_[i]) + ", " +
                        std::to_string(averages_[j]) +
                        ") closer than the minimum relative separation");
                }
            }
        }
    }

    int N() const { return static_cast<int>(averages_.size()); }
    const std::vector<double>& averages() const { return averages_; }

    /// Average of branch idx (1-based, matching the index-set convention).
    double average(int idx) const {
        if (idx < 1 || idx > N())
            throw ConfigError("FadingProfile: branch index " +
                              std::to_string(idx) + " out of range 1.." +
                              std::to_string(N()));
        return averages_[static_cast<std::size_t>(idx - 1)];
    }

    /// Rate (inverse average) of branch idx, 1-based.
    double rate(int idx) const { return 1.0 / average(idx); }

    /// The branch distributions as generic objects (for oracles and the
    /// generic kernel path).
    std::vector<std::shared_ptr<const Distribution>> distributions() const {
        std::vector<std::shared_ptr<const Distribution>> out;
        out.reserve(averages_.size());
        for (double g : averages_)
            out.push_back(std::make_shared<ExponentialDistribution>(g));
        return out;
    }

private:
    std::vector<double> averages_;
};

/// Exponentially decaying multipath intensity profile: branch l has average
/// gamma1 * exp(-delta * (l-1)).
struct MipSpec {
    double gamma1;
    double delta;
    int N;
};

/// Expand a MIP specification into an explicit profile.  delta = 0 with
/// N > 1 produces identical averages and is rejected by the profile
/// distinctness invariant.
inline FadingProfile profile_from_mip(const MipSpec& spec) {
    if (spec.N < 1) throw ConfigError("profile_from_mip: N must be >= 1");
    if (spec.delta < 0.0) throw ConfigError("profile_from_mip: delta must be >= 0");
    std::vector<double> averages(static_cast<std::size_t>(spec.N));
    for (int l = 1; l <= spec.N; ++l)
        averages[static_cast<std::size_t>(l - 1)] =
            spec.gamma1 * std::exp(-spec.delta * static_cast<double>(l - 1));
    return FadingProfile(std::move(averages));
}

} // namespace ordstat
