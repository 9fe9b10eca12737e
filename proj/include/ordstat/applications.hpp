// SPDX-License-Identifier: MIT
//
// Receiver-level quantities built on the ordered-sum densities: the capture
// probability of a partial combiner and the outage probability under
// self-interference from the uncombined paths.
//
// Capture probability: the chance that the m strongest of N branches carry
// at least the fraction T of the total combined gain,
//
//   P_cap = Pr[ Z1 >= T (Z1 + Z2) ] = Pr[ Z2 <= T' Z1 ],  T' = (1-T)/T,
//
// with Z1 the head sum and Z2 the tail sum.  Integrating the closed-form
// joint density over the wedge z2 <= T' z1 gives a finite sum of elementary
// double integrals.  Each is evaluated here in two algebraically equal
// layouts:
//
//  * a "literal" layout that mirrors the finite-difference structure
//    (F(0) - F(g)) / g of the inner integrals, which is readable but
//    catastrophically cancellative as g -> 0, and
//  * a "stable" layout in which the division by g has been carried out
//    symbolically, leaving only products of strictly positive denominators.
//
// The stable layout is the production path; the literal one is kept for
// cross-checking because it matches the defining integrals term by term.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ordstat/common.hpp"
#include "ordstat/distributions.hpp"
#include "ordstat/joint_densities.hpp"
#include "ordstat/quadrature.hpp"

namespace ordstat {

namespace capture_parts {

// In all six parts: rk/rq are head/tail partial-fraction pole rates, Tp is
// T' = (1-T)/T, m the head size, h the tail tuple length, beta and g the
// exponent slopes of the pivot integral.  The defining double integrals are
// (with phi_a(b) = int_0^b exp(-a u) du):
//
//   (I1 - I2(beta)) / beta = int_0^inf dz1 int_0^{T' z1} dz2
//        exp(-rk z1) exp(-rq z2) phi_beta(z1 / m)
//   (I3 - I4(g)) / g = int_0^inf dz1 int_0^{min(T', h/m) z1} dz2
//        exp(-rk z1) exp(-rq z2) phi_g(z2 / h)
//   (I5 - I6(g)) / g = [T' > h/m] int_0^inf dz1 int_{h z1 / m}^{T' z1} dz2
//        exp(-rk z1) exp(-rq z2) phi_g(z1 / m)

/// True when the z2 range extends past the slope h/m, activating the
/// I5/I6 pair.  Evaluated in the exact form T (h + m) <= m.
inline bool upper_region_active(double T, int m, int h) {
    return T * (h + m) <= m;
}

inline double I1(double rk, double rq, double Tp) {
    return (1.0 / rq) * (1.0 / rk - 1.0 / (rk + Tp * rq));
}

inline double I2(double rk, double rq, double Tp, int m, double beta) {
    return (1.0 / rq) *
           (m / (beta + m * rk) - m / (beta + m * rk + m * Tp * rq));
}

inline double I3(double rk, double rq, double Tp, int m, int h) {
    const double B = std::min(Tp, static_cast<double>(h) / m);
    return (1.0 / rq) * (1.0 / rk - 1.0 / (rk + B * rq));
}

inline double I4(double rk, double rq, double Tp, int m, int h, double g) {
    const double B = std::min(Tp, static_cast<double>(h) / m);
    const double beta4 = g + h * rq;
    return (h / beta4) * (1.0 / rk - 1.0 / (rk + B * beta4 / h));
}

inline double I5(double rk, double rq, double Tp, int m, int h) {
    return (1.0 / rq) * (1.0 / (rk + (h * rq) / m) - 1.0 / (rk + Tp * rq));
}

inline double I6(double rk, double rq, double Tp, int m, int h, double g) {
    return (1.0 / rq) *
           (m / (m * rk + h * rq + g) - m / (m * rk + m * Tp * rq + g));
}

/// Stable value of (I1 - I2(beta)) / beta.
inline double pair12_stable(double rk, double rq, double Tp, int m,
                            double beta) {
    const double D1 = rk;
    const double D2 = rk + Tp * rq;
    const double E1 = D1 + beta / m;
    const double E2 = D2 + beta / m;
    return Tp * ((D1 + D2) / m + beta / (static_cast<double>(m) * m)) /
           (D1 * D2 * E1 * E2);
}

/// Stable value of (I3 - I4(g)) / g.
inline double pair34_stable(double rk, double rq, double Tp, int m, int h,
                            double g) {
    const double B = std::min(Tp, static_cast<double>(h) / m);
    const double D = rk + B * rq;
    return (B * B / (h * rk)) / (D * (D + B * g / h));
}

/// Stable value of (I5 - I6(g)) / g (caller applies the region gate).
inline double pair56_stable(double rk, double rq, double Tp, int m, int h,
                            double g) {
    const double D3 = rk + (h * rq) / m;
    const double D4 = rk + (h * rq + g) / m;
    const double D5 = rk + Tp * rq;
    const double D6 = rk + Tp * rq + g / m;
    return (1.0 / (m * rq)) * (1.0 / (D3 * D4) - 1.0 / (D5 * D6));
}

} // namespace capture_parts

namespace detail {

inline void validate_capture_args(const FadingProfile& profile, int m,
                                  double T) {
    if (m < 1 || m > profile.N() - 1)
        throw ConfigError("capture probability: m must satisfy 1 <= m <= N-1");
    if (!(T >= 0.0 && T <= 1.0))
        throw ConfigError("capture probability: T must lie in [0, 1]");
}

/// The endpoints are exact: the head fraction lies in (0, 1) almost
/// surely, so T = 0 is always captured and T = 1 never is.  Returns the
/// exact probability, or a negative sentinel for interior T.
inline double capture_boundary_value(double T) {
    if (T == 0.0) return 1.0;
    if (T >= 1.0) return 0.0;
    return -1.0;
}

/// Clamp tiny numerical excursions outside [0, 1]; anything larger is a
/// genuine defect and must surface as an error, not be hidden.
inline double clamp_probability(double p, const char* what) {
    constexpr double slack = 1e-8;
    if (p < -slack || p > 1.0 + slack)
        throw NumericalError(std::string(what) + ": value " +
                             std::to_string(p) + " outside [0, 1]");
    return std::min(1.0, std::max(0.0, p));
}

/// Head size 1: the pivot is the largest gain itself and the wedge
/// integral collapses to a single finite sum.
inline double capture_closed_m1(const FadingProfile& profile, double T) {
    const double Tp = (1.0 - T) / T;
    const auto blocks = build_head_tail_blocks(profile, 1);
    KahanAccumulator acc;
    for (const auto& block : blocks) {
        const double r1 = block.r_piv;
        KahanAccumulator inner;
        for (std::size_t q = 0; q < block.tail.rates.size(); ++q) {
            const double rq = block.tail.rates[q];
            double bracket = (1.0 / rq) * (1.0 / r1 - 1.0 / (r1 + Tp * rq));
            double sign = 1.0;
            for (std::size_t h1 = 0; h1 < block.tail_tuples.size(); ++h1) {
                sign = -sign;
                const int h = static_cast<int>(h1 + 1);
                if (!capture_parts::upper_region_active(T, 1, h)) continue;
                const double slope = Tp - h;
                for (double rs : block.tail_tuples[h1])
                    bracket += sign * (1.0 / rq) *
                               (1.0 / (r1 + rs) - 1.0 / (r1 + rs + slope * rq));
            }
            inner.add(block.tail.coeffs[q] * bracket);
        }
        acc.add(-r1 * inner.sum());
    }
    return acc.sum_denoised();
}

template <bool Stable>
double capture_closed_general(const FadingProfile& profile, int m, double T) {
    const double Tp = (1.0 - T) / T;
    const auto blocks = build_head_tail_blocks(profile, m);
    KahanAccumulator acc;
    for (const auto& block : blocks) {
        KahanAccumulator inner;
        for (std::size_t k = 0; k < block.head.rates.size(); ++k) {
            const double rk = block.head.rates[k];
            const double ck = block.head.coeffs[k];
            const double beta = block.beta[k];
            for (std::size_t q = 0; q < block.tail.rates.size(); ++q) {
                const double rq = block.tail.rates[q];
                const double cq = block.tail.coeffs[q];
                double bracket;
                if constexpr (Stable)
                    bracket = capture_parts::pair12_stable(rk, rq, Tp, m, beta);
                else
                    bracket = (capture_parts::I1(rk, rq, Tp) -
                               capture_parts::I2(rk, rq, Tp, m, beta)) /
                              beta;
                double sign = 1.0;
                for (std::size_t h1 = 0; h1 < block.tail_tuples.size(); ++h1) {
                    sign = -sign;
                    const int h = static_cast<int>(h1 + 1);
                    const bool upper = capture_parts::upper_region_active(T, m, h);
                    for (double rs : block.tail_tuples[h1]) {
                        const double g = beta + rs - h * rq;
                        double piece;
                        if constexpr (Stable) {
                            piece = capture_parts::pair34_stable(rk, rq, Tp, m,
                                                                 h, g);
                            if (upper)
                                piece += capture_parts::pair56_stable(rk, rq, Tp,
                                                                      m, h, g);
                        } else {
                            piece = (capture_parts::I3(rk, rq, Tp, m, h) -
                                     capture_parts::I4(rk, rq, Tp, m, h, g)) /
                                    g;
                            if (upper)
                                piece += (capture_parts::I5(rk, rq, Tp, m, h) -
                                          capture_parts::I6(rk, rq, Tp, m, h, g)) /
                                         g;
                        }
                        bracket += sign * piece;
                    }
                }
                inner.add(ck * cq * bracket);
            }
        }
        acc.add(block.r_piv * inner.sum());
    }
    return acc.sum_denoised();
}

} // namespace detail

/// Capture probability in closed form (stable layout).
inline double capture_probability_closed(const FadingProfile& profile, int m,
                                         double T) {
    detail::validate_capture_args(profile, m, T);
    if (const double b = detail::capture_boundary_value(T); b >= 0.0) return b;
    const double p = (m == 1)
                         ? detail::capture_closed_m1(profile, T)
                         : detail::capture_closed_general<true>(profile, m, T);
    return detail::clamp_probability(p, "capture_probability_closed");
}

/// Capture probability assembled from the literal six parts (m >= 2 only).
/// Kept as a cross-check; divides by beta and g, so it degrades near
/// configurations that drive those slopes to zero.
inline double capture_probability_closed_literal(const FadingProfile& profile,
                                                 int m, double T) {
    detail::validate_capture_args(profile, m, T);
    if (m < 2)
        throw ConfigError(
            "capture_probability_closed_literal: requires m >= 2");
    if (const double b = detail::capture_boundary_value(T); b >= 0.0) return b;
    const double p = detail::capture_closed_general<false>(profile, m, T);
    return detail::clamp_probability(p, "capture_probability_closed_literal");
}

/// Capture probability by direct numerical integration of the head/tail
/// joint density over the wedge z2 <= T' z1: an independent route used to
/// cross-validate the closed form.
inline double capture_probability_numeric(const FadingProfile& profile, int m,
                                          double T,
                                          const QuadratureConfig& cfg = {}) {
    detail::validate_capture_args(profile, m, T);
    if (const double b = detail::capture_boundary_value(T); b >= 0.0) return b;
    const double Tp = (1.0 - T) / T;
    const int N = profile.N();
    const double wedge = std::min(Tp, static_cast<double>(N - m) / m);
    HeadTailSumDensity density(profile, m);
    QuadratureConfig inner_cfg = cfg;
    inner_cfg.abs_tol *= 0.1;
    double scale = 0.0;
    for (double gb : profile.averages()) scale += gb;
    auto outer = [&](double z1) {
        if (z1 <= 0.0) return 0.0;
        auto inner = [&density, z1](double z2) { return density.pdf(z1, z2); };
        return integrate(inner, 0.0, wedge * z1, inner_cfg);
    };
    const double p = integrate_semi_infinite(outer, 0.0, scale, cfg);
    return detail::clamp_probability(p, "capture_probability_numeric");
}

/// Outage probability: Pr[ Z1 < T (1 + alpha Z2) ] with Z1 the combined
/// gain of the m strongest branches and Z2 the remaining gain acting as
/// self-interference.  Evaluated by numerical integration of the joint
/// density over the outage region.
inline double outage_probability(const FadingProfile& profile, int m, double T,
                                 double alpha,
                                 const QuadratureConfig& cfg = {}) {
    const int N = profile.N();
    if (m < 1 || m > N - 1)
        throw ConfigError("outage_probability: m must satisfy 1 <= m <= N-1");
    if (T < 0.0 || alpha < 0.0)
        throw ConfigError("outage_probability: T and alpha must be nonnegative");
    if (T == 0.0) return 0.0;

    HeadTailSumDensity density(profile, m);
    QuadratureConfig inner_cfg = cfg;
    inner_cfg.abs_tol *= 0.1;
    const double slope = static_cast<double>(m) / (N - m);

    // The inner z1 range [slope*z2, T(1+alpha z2)) is nonempty only while
    // slope*z2 < T(1+alpha z2); if slope > T*alpha that fails for all z2
    // beyond a finite cutoff.
    auto outer = [&](double z2) {
        const double lo = slope * z2;
        const double hi = T * (1.0 + alpha * z2);
        if (!(hi > lo)) return 0.0;
        auto inner = [&density, z2](double z1) { return density.pdf(z1, z2); };
        return integrate(inner, lo, hi, inner_cfg);
    };
    double p;
    if (slope > T * alpha) {
        const double z2_max = T / (slope - T * alpha);
        p = integrate(outer, 0.0, z2_max, cfg);
    } else {
        double scale = 0.0;
        for (double gb : profile.averages()) scale += gb;
        p = integrate_semi_infinite(outer, 0.0, scale, cfg);
    }
    return detail::clamp_probability(p, "outage_probability");
}

} // namespace ordstat
