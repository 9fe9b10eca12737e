// SPDX-License-Identifier: MIT
//
// Integral kernels for ordered-variable analysis, their closed forms for
// exponentially distributed branches, partial-fraction machinery, and the
// closed product expansions used by the joint-density evaluators.
//
// The three kernels attached to a branch density p(x) are
//
//   c(z, lambda)        = int_0^z      p(x) exp(lambda*x) dx
//   e(z, lambda)        = int_z^inf    p(x) exp(lambda*x) dx
//   mu(za, zb, lambda)  = int_za^zb    p(x) exp(lambda*x) dx
//
// so that mu(za, zb) = c(zb) - c(za) = e(za) - e(zb), and c(inf) is the
// branch MGF.  For an exponential branch with mean gb (rate r = 1/gb):
//
//   c(z, lambda)  = [1 - exp((lambda - r) z)] / (1 - gb*lambda)
//   e(z, lambda)  = exp((lambda - r) z)       / (1 - gb*lambda)
//   mu(za, zb)    = [exp((lambda-r) za) - exp((lambda-r) zb)] / (1 - gb*lambda)
//
// Products of kernels over a set of branches expand, via the partial
// fractions of 1/prod_l(1 - gb_l*lambda), into short sums of simple-pole
// terms; those expansions are what the inverse-transform evaluators consume.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "ordstat/combinatorics.hpp"
#include "ordstat/common.hpp"
#include "ordstat/distributions.hpp"
#include "ordstat/laplace.hpp"
#include "ordstat/quadrature.hpp"

namespace ordstat {

namespace detail {
inline double real_part(double v) { return v; }
inline double real_part(const std::complex<double>& v) { return v.real(); }
} // namespace detail

// ---------------------------------------------------------------------------
// Generic kernels (any branch density, adaptive quadrature)
// ---------------------------------------------------------------------------

/// c(z, lambda) for an arbitrary branch density, by adaptive quadrature.
/// `tail_scale` bounds the integrand's decay length and controls the
/// change of variables when z is infinite.
template <class Scalar>
Scalar kernel_c(const Distribution& dist, double z, Scalar lambda,
                double tail_scale, const QuadratureConfig& cfg = {}) {
    auto f = [&dist, lambda](double x) -> Scalar {
        return dist.pdf(x) * std::exp(lambda * x);
    };
    if (std::isinf(z)) {
        if (detail::real_part(lambda) > 0.0 && tail_scale <= 0.0)
            throw ConfigError("kernel_c: positive lambda needs a tail scale");
        return integrate_semi_infinite(f, 0.0, tail_scale, cfg);
    }
    if (z <= 0.0) return Scalar{};
    return integrate(f, 0.0, z, cfg);
}

/// e(z, lambda) for an arbitrary branch density, by adaptive quadrature.
template <class Scalar>
Scalar kernel_e(const Distribution& dist, double z, Scalar lambda,
                double tail_scale, const QuadratureConfig& cfg = {}) {
    auto f = [&dist, lambda](double x) -> Scalar {
        return dist.pdf(x) * std::exp(lambda * x);
    };
    return integrate_semi_infinite(f, std::max(z, 0.0), tail_scale, cfg);
}

/// mu(za, zb, lambda) for an arbitrary branch density, by adaptive
/// quadrature.  zb may be infinite.
template <class Scalar>
Scalar kernel_mu(const Distribution& dist, double za, double zb, Scalar lambda,
                 double tail_scale, const QuadratureConfig& cfg = {}) {
    if (std::isinf(zb)) return kernel_e(dist, za, lambda, tail_scale, cfg);
    auto f = [&dist, lambda](double x) -> Scalar {
        return dist.pdf(x) * std::exp(lambda * x);
    };
    if (zb <= za) return Scalar{};
    return integrate(f, std::max(za, 0.0), zb, cfg);
}

// ---------------------------------------------------------------------------
// Closed forms for exponential branches
// ---------------------------------------------------------------------------

/// c(z, lambda) for an exponential branch with mean gamma_bar.
template <class Scalar>
Scalar kernel_c_exp(double gamma_bar, double z, Scalar lambda) {
    if (gamma_bar <= 0.0) throw ConfigError("kernel_c_exp: mean must be positive");
    const double rate = 1.0 / gamma_bar;
    const Scalar denom = 1.0 - gamma_bar * lambda;
    if (z <= 0.0) return Scalar{};
    if (std::isinf(z)) {
        if (detail::real_part(lambda) >= rate)
            throw ConfigError("kernel_c_exp: lambda outside convergence region");
        return Scalar(1.0) / denom;
    }
    return (Scalar(1.0) - std::exp((lambda - rate) * z)) / denom;
}

/// e(z, lambda) for an exponential branch with mean gamma_bar.
template <class Scalar>
Scalar kernel_e_exp(double gamma_bar, double z, Scalar lambda) {
    if (gamma_bar <= 0.0) throw ConfigError("kernel_e_exp: mean must be positive");
    const double rate = 1.0 / gamma_bar;
    if (detail::real_part(lambda) >= rate)
        throw ConfigError("kernel_e_exp: lambda outside convergence region");
    const Scalar denom = 1.0 - gamma_bar * lambda;
    return std::exp((lambda - rate) * std::max(z, 0.0)) / denom;
}

/// mu(za, zb, lambda) for an exponential branch with mean gamma_bar;
/// zb may be infinite.
template <class Scalar>
Scalar kernel_mu_exp(double gamma_bar, double za, double zb, Scalar lambda) {
    if (gamma_bar <= 0.0) throw ConfigError("kernel_mu_exp: mean must be positive");
    if (std::isinf(zb)) return kernel_e_exp(gamma_bar, za, lambda);
    if (zb <= za) return Scalar{};
    const double rate = 1.0 / gamma_bar;
    const Scalar denom = 1.0 - gamma_bar * lambda;
    return (std::exp((lambda - rate) * std::max(za, 0.0)) -
            std::exp((lambda - rate) * zb)) /
           denom;
}

// ---------------------------------------------------------------------------
// Partial fractions of 1 / prod_l (1 - gamma_bar_l * lambda)
// ---------------------------------------------------------------------------

/// Derivative of F(x) = prod_l (x - r_l) from the elementary symmetric
/// functions of the rates, each assembled by explicit enumeration of the
/// index tuples n1 < n2 < ... < nl:
///
///   F'(x) = n x^{n-1} + sum_{l=1}^{n-1} (n-l) x^{n-1-l} (-1)^l e_l(r)
inline double coeff_F_prime(const std::vector<double>& rates, double x) {
    const int n = static_cast<int>(rates.size());
    if (n == 0) throw ConfigError("coeff_F_prime: empty rate list");
    if (n == 1) return 1.0;
    KahanAccumulator acc;
    acc.add(n * std::pow(x, n - 1));
    for (int l = 1; l <= n - 1; ++l) {
        KahanAccumulator sym;
        for (const auto& tuple : enumerate_nested(1, n, l)) {
            double prod = 1.0;
            for (int idx : tuple.indices) prod *= rates[idx - 1];
            sym.add(prod);
        }
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        acc.add((n - l) * std::pow(x, n - 1 - l) * sign * sym.sum());
    }
    return acc.sum();
}

/// Coefficients C_k of the partial-fraction identity
///
///   1 / prod_l (1 - gamma_bar_l lambda) = sum_k C_k / (lambda - r_k)
///
/// with r_k = 1/gamma_bar_k and C_k = 1 / [prod_l (-gamma_bar_l) F'(r_k)].
/// The means must be pairwise distinct; near-coincident means make the
/// decomposition ill-conditioned and are rejected.
inline std::vector<double> partial_fraction_coeffs(
    const std::vector<double>& averages) {
    const std::size_t n = averages.size();
    if (n == 0) throw ConfigError("partial_fraction_coeffs: empty mean list");
    std::vector<double> rates(n);
    double neg_prod = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(averages[i] > 0.0))
            throw ConfigError("partial_fraction_coeffs: means must be positive");
        rates[i] = 1.0 / averages[i];
        neg_prod *= -averages[i];
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sep = std::abs(rates[i] - rates[j]);
            const double mag = std::max(rates[i], rates[j]);
            if (sep <= FadingProfile::kDefaultSeparation * mag)
                throw IllConditionedError(
                    "partial_fraction_coeffs: rates " + std::to_string(rates[i]) +
                    " and " + std::to_string(rates[j]) + " nearly coincide");
        }
    std::vector<double> coeffs(n);
    for (std::size_t k = 0; k < n; ++k)
        coeffs[k] = 1.0 / (neg_prod * coeff_F_prime(rates, rates[k]));
    return coeffs;
}

// ---------------------------------------------------------------------------
// Closed product expansions
// ---------------------------------------------------------------------------

namespace detail {

/// One (coefficient, shift) pair of the bracket factor
///   1 + sum_{l=1}^{n} exp(l*d*lambda) (-1)^l sum_{n1<...<nl} exp(-d*R_tuple)
/// shared by the c- and mu-product expansions (d = za and d = zb - za
/// respectively).  The l = 0 entry is the leading 1.
struct BracketEntry {
    double coeff;
    double shift;
};

inline std::vector<BracketEntry> expansion_bracket(
    const std::vector<double>& rates, double d) {
    const int n = static_cast<int>(rates.size());
    std::vector<BracketEntry> entries;
    entries.push_back(BracketEntry{1.0, 0.0});
    for (int l = 1; l <= n; ++l) {
        const double sign = (l % 2 == 0) ? 1.0 : -1.0;
        for (const auto& tuple : enumerate_nested(1, n, l)) {
            double rate_sum = 0.0;
            for (int idx : tuple.indices) rate_sum += rates[idx - 1];
            entries.push_back(BracketEntry{sign * std::exp(-d * rate_sum),
                                           static_cast<double>(l) * d});
        }
    }
    return entries;
}

inline std::vector<double> rates_of(const std::vector<double>& averages) {
    std::vector<double> rates(averages.size());
    for (std::size_t i = 0; i < averages.size(); ++i) {
        if (!(averages[i] > 0.0))
            throw ConfigError("kernel product: means must be positive");
        rates[i] = 1.0 / averages[i];
    }
    return rates;
}

} // namespace detail

/// Closed expansion of prod_l c_l(za, lambda) over exponential branches.
template <class Scalar>
Scalar prod_c_expansion(const std::vector<double>& averages, double za,
                        Scalar lambda) {
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    Scalar pf{};
    for (std::size_t k = 0; k < rates.size(); ++k)
        pf += coeffs[k] / (lambda - rates[k]);
    Scalar bracket{};
    for (const auto& entry : detail::expansion_bracket(rates, za))
        bracket += entry.coeff * std::exp(lambda * entry.shift);
    return pf * bracket;
}

/// Closed expansion of prod_l e_l(za, lambda) over exponential branches.
template <class Scalar>
Scalar prod_e_expansion(const std::vector<double>& averages, double za,
                        Scalar lambda) {
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    double rate_sum = 0.0;
    for (double r : rates) rate_sum += r;
    Scalar pf{};
    for (std::size_t k = 0; k < rates.size(); ++k)
        pf += coeffs[k] / (lambda - rates[k]);
    const double n = static_cast<double>(averages.size());
    return pf * std::exp(-za * rate_sum) * std::exp(lambda * (n * za));
}

/// Closed expansion of prod_l mu_l(za, zb, lambda) over exponential branches.
template <class Scalar>
Scalar prod_mu_expansion(const std::vector<double>& averages, double za,
                         double zb, Scalar lambda) {
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    double rate_sum = 0.0;
    for (double r : rates) rate_sum += r;
    Scalar pf{};
    for (std::size_t k = 0; k < rates.size(); ++k)
        pf += coeffs[k] / (lambda - rates[k]);
    Scalar bracket{};
    for (const auto& entry : detail::expansion_bracket(rates, zb - za))
        bracket += entry.coeff * std::exp(lambda * entry.shift);
    const double n = static_cast<double>(averages.size());
    return pf * std::exp(-za * rate_sum) * std::exp(lambda * (n * za)) * bracket;
}

/// prod_l P_l(u) = prod_l (1 - exp(-u r_l)): probability that every branch
/// in the set falls below u.  Evaluated directly (no expansion needed).
inline double prod_cdf(const std::vector<double>& averages, double u) {
    double prod = 1.0;
    for (double gb : averages) {
        if (!(gb > 0.0)) throw ConfigError("prod_cdf: means must be positive");
        prod *= -std::expm1(-u / gb);
    }
    return (u > 0.0) ? prod : 0.0;
}

// ---------------------------------------------------------------------------
// Term-sum builders (transform-domain versions of the expansions)
// ---------------------------------------------------------------------------

/// prod_l c_l(za, lambda) as a sum of simple-pole terms in lambda.
/// An empty branch set yields the multiplicative identity.
inline LaplaceTermSum c_product_terms(const std::vector<double>& averages,
                                      double za) {
    if (averages.empty()) return LaplaceTermSum::one();
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    const auto bracket = detail::expansion_bracket(rates, za);
    LaplaceTermSum out;
    for (std::size_t k = 0; k < rates.size(); ++k)
        for (const auto& entry : bracket)
            out.add(PoleTerm{coeffs[k] * entry.coeff, rates[k], entry.shift});
    return out;
}

/// prod_l e_l(za, lambda) as a sum of simple-pole terms in lambda.
inline LaplaceTermSum e_product_terms(const std::vector<double>& averages,
                                      double za) {
    if (averages.empty()) return LaplaceTermSum::one();
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    double rate_sum = 0.0;
    for (double r : rates) rate_sum += r;
    const double n = static_cast<double>(averages.size());
    const double front = std::exp(-za * rate_sum);
    LaplaceTermSum out;
    for (std::size_t k = 0; k < rates.size(); ++k)
        out.add(PoleTerm{coeffs[k] * front, rates[k], n * za});
    return out;
}

/// prod_l mu_l(za, zb, lambda) as a sum of simple-pole terms in lambda.
inline LaplaceTermSum mu_product_terms(const std::vector<double>& averages,
                                       double za, double zb) {
    if (averages.empty()) return LaplaceTermSum::one();
    const auto rates = detail::rates_of(averages);
    const auto coeffs = partial_fraction_coeffs(averages);
    double rate_sum = 0.0;
    for (double r : rates) rate_sum += r;
    const double n = static_cast<double>(averages.size());
    const double front = std::exp(-za * rate_sum);
    const auto bracket = detail::expansion_bracket(rates, zb - za);
    LaplaceTermSum out;
    for (std::size_t k = 0; k < rates.size(); ++k)
        for (const auto& entry : bracket)
            out.add(PoleTerm{coeffs[k] * front * entry.coeff, rates[k],
                             n * za + entry.shift});
    return out;
}

// ---------------------------------------------------------------------------
// Kernel sets (uniform interface for closed-form vs. quadrature evaluation)
// ---------------------------------------------------------------------------

/// Closed-form kernels over the exponential branches of a profile.
/// Branch indices are 1-based, matching the profile.
class ExponentialKernels {
  public:
    explicit ExponentialKernels(const FadingProfile& profile)
        : profile_(&profile) {}

    template <class Scalar>
    Scalar c(int branch, double z, Scalar lambda) const {
        return kernel_c_exp(profile_->average(branch), z, lambda);
    }
    template <class Scalar>
    Scalar e(int branch, double z, Scalar lambda) const {
        return kernel_e_exp(profile_->average(branch), z, lambda);
    }
    template <class Scalar>
    Scalar mu(int branch, double za, double zb, Scalar lambda) const {
        return kernel_mu_exp(profile_->average(branch), za, zb, lambda);
    }
    double pdf(int branch, double x) const {
        return exponential_pdf(x, profile_->average(branch));
    }
    double cdf(int branch, double x) const {
        return exponential_cdf(x, profile_->average(branch));
    }
    const FadingProfile& profile() const { return *profile_; }

  private:
    const FadingProfile* profile_;
};

/// Quadrature-backed kernels over the same profile: an independent
/// evaluation route used to cross-check the closed forms.
class QuadratureKernels {
  public:
    explicit QuadratureKernels(const FadingProfile& profile,
                               QuadratureConfig cfg = {})
        : profile_(&profile), cfg_(cfg) {}

    template <class Scalar>
    Scalar c(int branch, double z, Scalar lambda) const {
        return kernel_c(dist(branch), z, lambda, tail_scale(branch, lambda), cfg_);
    }
    template <class Scalar>
    Scalar e(int branch, double z, Scalar lambda) const {
        return kernel_e(dist(branch), z, lambda, tail_scale(branch, lambda), cfg_);
    }
    template <class Scalar>
    Scalar mu(int branch, double za, double zb, Scalar lambda) const {
        return kernel_mu(dist(branch), za, zb, lambda, tail_scale(branch, lambda),
                         cfg_);
    }
    double pdf(int branch, double x) const { return dist(branch).pdf(x); }
    double cdf(int branch, double x) const { return dist(branch).cdf(x); }
    const FadingProfile& profile() const { return *profile_; }

  private:
    const Distribution& dist(int branch) const {
        return *profile_->distributions()[static_cast<std::size_t>(branch - 1)];
    }
    template <class Scalar>
    double tail_scale(int branch, Scalar lambda) const {
        const double gb = profile_->average(branch);
        const double re = detail::real_part(lambda);
        if (re <= 0.0) return gb;
        const double net = 1.0 / gb - re;
        if (net <= 0.0)
            throw ConfigError("QuadratureKernels: lambda outside convergence region");
        return 1.0 / net;
    }
    const FadingProfile* profile_;
    QuadratureConfig cfg_;
};

} // namespace ordstat
