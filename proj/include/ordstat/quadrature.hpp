// SPDX-License-Identifier: MIT
//
// Globally adaptive Gauss-Kronrod quadrature.
//
// A 7/15-point Gauss-Kronrod pair drives a worst-segment-first refinement
// loop (the classic QAG strategy).  Semi-infinite ranges are handled by the
// exponential change of variables x = a - scale*ln(1-t), which turns the
// decaying-exponential integrands of this library into smooth functions on
// [0, 1).  The integrator is templated on the value type so the same code
// integrates real densities and complex MGF integrands.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ordstat/common.hpp"

namespace ordstat {

/// Tolerances and budget for one adaptive integration.
struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_segments = 4000;
};

namespace detail {

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights on the shared nodes (odd positions).
inline constexpr double kGK15Nodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double kGK15WeightsK[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
inline constexpr double kGK15WeightsG[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

inline double norm_of(double v) { return std::abs(v); }
inline double norm_of(const std::complex<double>& v) { return std::abs(v); }

template <class Value, class F>
void gk15(F& f, double a, double b, Value& result, double& error) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    Value sum_k{};
    Value sum_g{};
    for (int i = 0; i < 8; ++i) {
        const double dx = half * kGK15Nodes[i];
        const Value fl = f(mid - dx);
        const Value fr = (i == 7) ? fl : f(mid + dx);
        const Value pair = (i == 7) ? fl : Value(fl + fr);
        sum_k += kGK15WeightsK[i] * pair;
        if (i % 2 == 1) sum_g += kGK15WeightsG[i / 2] * pair;
    }
    result = half * sum_k;
    error = norm_of(half * (sum_k - sum_g));
}

template <class Value, class F>
Value integrate_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg) {
    struct Segment {
        double a, b, error;
        Value value;
    };
    if (a == b) return Value{};

    std::vector<Segment> segments;
    segments.reserve(64);
    Segment first{a, b, 0.0, Value{}};
    gk15(f, a, b, first.value, first.error);
    segments.push_back(first);

    for (;;) {
        Value total{};
        double total_err = 0.0;
        for (const auto& s : segments) {
            total += s.value;
            total_err += s.error;
        }
        const double target =
            std::max(cfg.abs_tol, cfg.rel_tol * norm_of(total));
        if (total_err <= target) return total;
        if (static_cast<int>(segments.size()) >= cfg.max_segments)
            throw NumericalError(
                "adaptive quadrature: segment budget exhausted (residual "
                "error " + std::to_string(total_err) + ")");

        // Split the segment with the largest local error.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segments.size(); ++i)
            if (segments[i].error > segments[worst].error) worst = i;
        Segment seg = segments[worst];
        const double m = 0.5 * (seg.a + seg.b);
        if (!(m > seg.a && m < seg.b))
            throw NumericalError(
                "adaptive quadrature: interval too small to split; "
                "integrand may be singular");
        Segment left{seg.a, m, 0.0, Value{}};
        Segment right{m, seg.b, 0.0, Value{}};
        gk15(f, left.a, left.b, left.value, left.error);
        gk15(f, right.a, right.b, right.value, right.error);
        segments[worst] = left;
        segments.push_back(right);
    }
}

} // namespace detail

/// Integrate f over the finite interval [a, b].
template <class F>
auto integrate(F&& f, double a, double b,
               const QuadratureConfig& cfg = QuadratureConfig{})
    -> decltype(f(a)) {
    using Value = decltype(f(a));
    return detail::integrate_adaptive<Value>(std::forward<F>(f), a, b, cfg);
}

/// Integrate f over [a, infinity) via x = a - scale*ln(1-t).
///
/// `scale` must be at least as large as the integrand's slowest decay
/// length, otherwise the transformed integrand has an (integrable) endpoint
/// singularity that slows convergence; callers derive it from the branch
/// averages in play.
template <class F>
auto integrate_semi_infinite(F&& f, double a, double scale,
                             const QuadratureConfig& cfg = QuadratureConfig{})
    -> decltype(f(a)) {
    using Value = decltype(f(a));
    if (!(scale > 0.0)) throw ConfigError("integrate_semi_infinite: scale must be positive");
    auto g = [&f, a, scale](double t) -> Value {
        const double one_minus = 1.0 - t;
        const double x = a - scale * std::log(one_minus);
        return f(x) * (scale / one_minus);
    };
    return detail::integrate_adaptive<Value>(g, 0.0, 1.0, cfg);
}

} // namespace ordstat
