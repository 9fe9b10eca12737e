// SPDX-License-Identifier: MIT
//
// Symbolic algebra for the rational-exponential Laplace transforms that
// arise from products of the library's integral kernels.
//
// Every transform handled here is a finite sum of terms of three shapes,
// written as functions of the MGF variable lambda (the Laplace variable is
// S = -lambda):
//
//   delta term        coeff * exp(shift*lambda)
//   simple pole       coeff * exp(shift*lambda) / (lambda - a)
//   double pole       coeff * exp(shift*lambda) / ((lambda - a)(lambda - b))
//
// Their inverse transforms are, with w = z - shift and U the unit step:
//
//   delta term        coeff * delta(w)            (a substitution directive)
//   simple pole       -coeff * exp(-a*w) * U(w)
//   double pole       coeff * (exp(-a*w) - exp(-b*w)) / (b - a) * U(w)
//
// Delta terms are never evaluated pointwise: evaluators must consume them by
// substituting the shifted argument before asking for a density value.

#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "ordstat/common.hpp"

namespace ordstat {

/// coeff * exp(shift*lambda): inverse transform is a Dirac mass at z = shift.
struct DeltaTerm {
    double coeff = 0.0;
    double shift = 0.0;
};

/// coeff * exp(shift*lambda) / (lambda - pole).
struct PoleTerm {
    double coeff = 0.0;
    double pole = 0.0;
    double shift = 0.0;
};

/// coeff * exp(shift*lambda) / ((lambda - pole_a)(lambda - pole_b)).
struct DoublePoleTerm {
    double coeff = 0.0;
    double pole_a = 0.0;
    double pole_b = 0.0;
    double shift = 0.0;
};

/// Inverse transform of a simple pole term, evaluated at z.
inline double inverse_pole(const PoleTerm& t, double z) {
    const double w = z - t.shift;
    if (w < 0.0) return 0.0;
    return -t.coeff * std::exp(-t.pole * w);
}

/// Inverse transform of a double pole term, evaluated at z.
inline double inverse_double_pole(const DoublePoleTerm& t, double z) {
    const double w = z - t.shift;
    if (w < 0.0) return 0.0;
    return t.coeff * (std::exp(-t.pole_a * w) - std::exp(-t.pole_b * w)) /
           (t.pole_b - t.pole_a);
}

/// A finite sum of delta, simple-pole, and double-pole terms.
///
/// Supports the closed product rules needed by the joint-density
/// evaluators; products that would create triple poles are rejected because
/// no evaluator in this library produces them.
class LaplaceTermSum {
  public:
    LaplaceTermSum() = default;

    /// The multiplicative identity (a single delta at the origin).
    static LaplaceTermSum one() {
        LaplaceTermSum s;
        s.deltas_.push_back(DeltaTerm{1.0, 0.0});
        return s;
    }

    void add(const DeltaTerm& t) { deltas_.push_back(t); }
    void add(const PoleTerm& t) { poles_.push_back(t); }
    void add(const DoublePoleTerm& t) { double_poles_.push_back(t); }

    const std::vector<DeltaTerm>& deltas() const { return deltas_; }
    const std::vector<PoleTerm>& poles() const { return poles_; }
    const std::vector<DoublePoleTerm>& double_poles() const {
        return double_poles_;
    }

    bool has_deltas() const { return !deltas_.empty(); }

    std::size_t term_count() const {
        return deltas_.size() + poles_.size() + double_poles_.size();
    }

    void scale(double factor) {
        for (auto& t : deltas_) t.coeff *= factor;
        for (auto& t : poles_) t.coeff *= factor;
        for (auto& t : double_poles_) t.coeff *= factor;
    }

    void append(const LaplaceTermSum& other) {
        deltas_.insert(deltas_.end(), other.deltas_.begin(), other.deltas_.end());
        poles_.insert(poles_.end(), other.poles_.begin(), other.poles_.end());
        double_poles_.insert(double_poles_.end(), other.double_poles_.begin(),
                             other.double_poles_.end());
    }

    /// Evaluate the transform itself at a (possibly complex) lambda.
    /// Used to cross-check the product rules against direct numerical
    /// multiplication.
    template <class Scalar>
    Scalar evaluate_transform(Scalar lambda) const {
        Scalar acc{};
        for (const auto& t : deltas_)
            acc += t.coeff * std::exp(lambda * t.shift);
        for (const auto& t : poles_)
            acc += t.coeff * std::exp(lambda * t.shift) / (lambda - t.pole);
        for (const auto& t : double_poles_)
            acc += t.coeff * std::exp(lambda * t.shift) /
                   ((lambda - t.pole_a) * (lambda - t.pole_b));
        return acc;
    }

    /// Evaluate the inverse transform (a plain function of z).
    /// Throws if delta terms are present: a Dirac mass has no pointwise
    /// value, and callers are required to substitute deltas away first.
    double inverse_at(double z) const {
        if (!deltas_.empty())
            throw NumericalError(
                "LaplaceTermSum::inverse_at: sum still contains delta terms; "
                "substitute them before evaluating pointwise");
        KahanAccumulator acc;
        for (const auto& t : poles_) acc.add(inverse_pole(t, z));
        for (const auto& t : double_poles_) acc.add(inverse_double_pole(t, z));
        return acc.sum_denoised();
    }

    /// Product of two term sums.  Allowed pairings: delta*delta,
    /// delta*pole, pole*pole (producing a double pole).  Any pairing that
    /// would yield three or more pole factors throws.
    friend LaplaceTermSum product(const LaplaceTermSum& lhs,
                                  const LaplaceTermSum& rhs,
                                  double pole_separation = 1e-9) {
        if (!lhs.double_poles_.empty() && !(rhs.poles_.empty() && rhs.double_poles_.empty()))
            throw NumericalError("LaplaceTermSum::product: would create a pole of order > 2");
        if (!rhs.double_poles_.empty() && !(lhs.poles_.empty() && lhs.double_poles_.empty()))
            throw NumericalError("LaplaceTermSum::product: would create a pole of order > 2");

        LaplaceTermSum out;
        for (const auto& a : lhs.deltas_) {
            for (const auto& b : rhs.deltas_)
                out.add(DeltaTerm{a.coeff * b.coeff, a.shift + b.shift});
            for (const auto& b : rhs.poles_)
                out.add(PoleTerm{a.coeff * b.coeff, b.pole, a.shift + b.shift});
            for (const auto& b : rhs.double_poles_)
                out.add(DoublePoleTerm{a.coeff * b.coeff, b.pole_a, b.pole_b,
                                       a.shift + b.shift});
        }
        for (const auto& a : lhs.poles_) {
            for (const auto& b : rhs.deltas_)
                out.add(PoleTerm{a.coeff * b.coeff, a.pole, a.shift + b.shift});
            for (const auto& b : rhs.poles_) {
                const double sep = std::abs(a.pole - b.pole);
                const double mag = std::max(std::abs(a.pole), std::abs(b.pole));
                if (sep <= pole_separation * mag)
                    throw IllConditionedError(
                        "LaplaceTermSum::product: coincident poles " +
                        std::to_string(a.pole) + " and " + std::to_string(b.pole));
                out.add(DoublePoleTerm{a.coeff * b.coeff, a.pole, b.pole,
                                       a.shift + b.shift});
            }
        }
        for (const auto& a : lhs.double_poles_)
            for (const auto& b : rhs.deltas_)
                out.add(DoublePoleTerm{a.coeff * b.coeff, a.pole_a, a.pole_b,
                                       a.shift + b.shift});
        return out;
    }

  private:
    std::vector<DeltaTerm> deltas_;
    std::vector<PoleTerm> poles_;
    std::vector<DoublePoleTerm> double_poles_;
};

} // namespace ordstat
