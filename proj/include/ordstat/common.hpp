// SPDX-License-Identifier: MIT
//
// Shared utilities: error types, compensated accumulation, and small
// numeric helpers used across the library.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace ordstat {

/// Raised for invalid user-supplied configuration (bad profile, bad split
/// indices, malformed scenario files, ...).  Distinct from numerical
/// failures so callers can map the two to different exit codes.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot deliver its advertised accuracy
/// (quadrature non-convergence, divergent integral, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a computation is ill-conditioned for the given inputs, e.g.
/// partial fractions over nearly coincident averages.
class IllConditionedError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Kahan-style compensated accumulator.  The alternating-sign subset sums in
/// this library suffer heavy cancellation, so plain summation can lose most
/// of its significant digits; compensated accumulation keeps the error at a
/// few ulps of the running magnitude.  `magnitude()` tracks the sum of
/// absolute values, which callers use as a noise floor for the result.
class KahanAccumulator {
public:
    void add(double x) {
        const double y = x - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
        magnitude_ += std::abs(x);
    }

    double sum() const { return sum_; }

    /// Sum of |term| over everything accumulated; an upper bound on the
    /// cancellation mass and hence a natural scale for rounding noise.
    double magnitude() const { return magnitude_; }

    /// Result with round-off noise suppressed: values smaller than a few
    /// ulps of the accumulated magnitude are indistinguishable from zero
    /// (densities evaluate to exact 0 outside their support through exactly
    /// this kind of cancellation).
    double sum_denoised() const {
        const double noise =
            8.0 * std::numeric_limits<double>::epsilon() * magnitude_;
        return std::abs(sum_) <= noise ? 0.0 : sum_;
    }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
    double magnitude_ = 0.0;
};

/// Stable evaluation of the finite exponential moment
///   phi(g, b) = integral_0^b exp(-g*u) du = (1 - exp(-g*b)) / g,
/// including the g -> 0 limit (= b).  Used wherever a truncated exponential
/// factor is integrated in closed form.
inline double exp_integral_0b(double g, double b) {
    if (b <= 0.0) return 0.0;
    const double gb = g * b;
    if (gb == 0.0) return b;
    return -std::expm1(-gb) / g;
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace ordstat
