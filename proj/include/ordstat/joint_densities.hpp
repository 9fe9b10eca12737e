// SPDX-License-Identifier: MIT
//
// Joint densities and joint MGFs of partial sums of ordered branch gains.
//
// Branch gains u_1 >= u_2 >= ... >= u_N are the descending order statistics
// of N independent, non-identically distributed exponential variables.  The
// evaluators here produce the joint density of partial sums taken over the
// ordered list, in six shapes:
//
//   all_N_total       Z  = u_1 + ... + u_N                        (1-d)
//   all_N_head_tail   Z1 = u_1+...+u_m,  Z2 = u_{m+1}+...+u_N     (2-d)
//   all_N_pivot       Z1 = u_m,          Z2 = sum_{n != m} u_n    (2-d)
//   best_Ns_total     Z  = u_1 + ... + u_Ns                       (1-d)
//   best_Ns_pivot     Z1 = u_m,          Z2 = sum_{n<=Ns, n!=m}   (2-d)
//   best_Ns_head_tail Z1 = u_1+...+u_m,  Z2 = u_{m+1}+...+u_Ns    (2-d)
//
// Every density follows the same construction: condition on which branch
// realizes the boundary order statistic and on how the remaining branches
// split around it, write the conditional MGF as a product of c/e/mu kernels,
// expand the kernel products into simple-pole sums, and invert the transform
// term by term.  For the all-N shapes the result is fully closed-form; the
// best-Ns 2-d shapes reduce to one- or two-dimensional integrals of the
// closed-form boundary-pair densities.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ordstat/combinatorics.hpp"
#include "ordstat/common.hpp"
#include "ordstat/distributions.hpp"
#include "ordstat/kernels.hpp"
#include "ordstat/laplace.hpp"
#include "ordstat/quadrature.hpp"

namespace ordstat {

// ---------------------------------------------------------------------------
// Partial-sum specification
// ---------------------------------------------------------------------------

enum class PartialSumMode {
    AllTotal,
    AllHeadTail,
    AllPivot,
    BestTotal,
    BestPivot,
    BestHeadTail,
};

/// Which partial sums to analyze.  `m` is the split or pivot position;
/// `Ns` is the number of retained (largest) branches for the best-Ns modes.
struct PartialSumSpec {
    PartialSumMode mode = PartialSumMode::AllTotal;
    int m = 0;
    int Ns = 0;
};

inline const char* mode_name(PartialSumMode mode) {
    switch (mode) {
        case PartialSumMode::AllTotal: return "all_N_total";
        case PartialSumMode::AllHeadTail: return "all_N_head_tail";
        case PartialSumMode::AllPivot: return "all_N_pivot";
        case PartialSumMode::BestTotal: return "best_Ns_total";
        case PartialSumMode::BestPivot: return "best_Ns_pivot";
        case PartialSumMode::BestHeadTail: return "best_Ns_head_tail";
    }
    return "?";
}

inline PartialSumMode parse_mode(const std::string& name) {
    if (name == "all_N_total") return PartialSumMode::AllTotal;
    if (name == "all_N_head_tail") return PartialSumMode::AllHeadTail;
    if (name == "all_N_pivot") return PartialSumMode::AllPivot;
    if (name == "best_Ns_total") return PartialSumMode::BestTotal;
    if (name == "best_Ns_pivot") return PartialSumMode::BestPivot;
    if (name == "best_Ns_head_tail") return PartialSumMode::BestHeadTail;
    throw ConfigError("unknown partial-sum mode '" + name + "'");
}

/// Number of joint variables described by the spec (1 or 2).
inline int spec_dimension(const PartialSumSpec& spec) {
    switch (spec.mode) {
        case PartialSumMode::AllTotal:
        case PartialSumMode::BestTotal: return 1;
        default: return 2;
    }
}

/// Validate a spec against a profile size; throws ConfigError on violation.
inline void validate_spec(const PartialSumSpec& spec, int N) {
    auto fail = [&](const std::string& why) {
        throw ConfigError(std::string(mode_name(spec.mode)) + ": " + why);
    };
    switch (spec.mode) {
        case PartialSumMode::AllTotal:
            break;
        case PartialSumMode::AllHeadTail:
            if (N < 2) fail("needs at least two branches");
            if (spec.m < 1 || spec.m > N - 1)
                fail("split position m must satisfy 1 <= m <= N-1");
            break;
        case PartialSumMode::AllPivot:
            if (N < 2) fail("needs at least two branches");
            if (spec.m < 1 || spec.m > N)
                fail("pivot position m must satisfy 1 <= m <= N");
            break;
        case PartialSumMode::BestTotal:
            if (spec.Ns < 1 || spec.Ns > N)
                fail("selection size Ns must satisfy 1 <= Ns <= N");
            break;
        case PartialSumMode::BestPivot:
            if (spec.Ns < 2 || spec.Ns > N)
                fail("selection size Ns must satisfy 2 <= Ns <= N");
            if (spec.m < 1 || spec.m > spec.Ns)
                fail("pivot position m must satisfy 1 <= m <= Ns");
            break;
        case PartialSumMode::BestHeadTail:
            if (spec.Ns < 2 || spec.Ns > N)
                fail("selection size Ns must satisfy 2 <= Ns <= N");
            if (spec.m < 1 || spec.m > spec.Ns - 1)
                fail("split position m must satisfy 1 <= m <= Ns-1");
            break;
    }
    const GuardResult guard = complexity_guard(N);
    if (!guard.ok)
        throw ConfigError("profile size exceeds the enumeration budget (" +
                          std::to_string(guard.estimated_terms) +
                          " estimated terms)");
}

namespace detail {

inline std::vector<double> subset_averages(const FadingProfile& profile,
                                           const IndexSet& subset) {
    std::vector<double> out;
    out.reserve(subset.size());
    for (int idx : subset.members()) out.push_back(profile.average(idx));
    return out;
}

/// Partial-fraction table for a branch subset: coefficients C_k, rates r_k,
/// and their sum.  count == 0 encodes an empty product (identity factor).
struct PFTable {
    std::vector<double> coeffs;
    std::vector<double> rates;
    double rate_sum = 0.0;
    int count = 0;

    static PFTable build(const std::vector<double>& averages) {
        PFTable t;
        t.count = static_cast<int>(averages.size());
        if (t.count == 0) return t;
        t.coeffs = partial_fraction_coeffs(averages);
        t.rates.reserve(averages.size());
        for (double gb : averages) {
            t.rates.push_back(1.0 / gb);
            t.rate_sum += 1.0 / gb;
        }
        return t;
    }
};

/// Bracket factor of a c- or mu-product expansion: one entry per index
/// tuple, carrying the alternating sign, the tuple's rate sum, and the
/// tuple length l (the leading 1 is the l = 0 entry).
struct BracketTable {
    struct Entry {
        double sign;
        double rate_sum;
        int level;
    };
    std::vector<Entry> entries;

    static BracketTable build(const std::vector<double>& rates) {
        BracketTable b;
        b.entries.push_back(Entry{1.0, 0.0, 0});
        const int n = static_cast<int>(rates.size());
        for (int l = 1; l <= n; ++l) {
            const double sign = (l % 2 == 0) ? 1.0 : -1.0;
            for (const auto& tuple : enumerate_nested(1, n, l)) {
                double rs = 0.0;
                for (int idx : tuple.indices) rs += rates[idx - 1];
                b.entries.push_back(Entry{sign, rs, l});
            }
        }
        return b;
    }
};

/// Inverse transform of prod e over a subset anchored at u, evaluated at z:
///   -sum_k C_k exp(-u*rate_sum) exp(-r_k (z - n u)),   z >= n u.
inline double e_product_inverse(const PFTable& t, double u, double z) {
    const double w = z - t.count * u;
    if (w < 0.0) return 0.0;
    const double front = std::exp(-u * t.rate_sum);
    KahanAccumulator acc;
    for (std::size_t k = 0; k < t.rates.size(); ++k)
        acc.add(-t.coeffs[k] * front * std::exp(-t.rates[k] * w));
    return acc.sum_denoised();
}

/// Inverse transform of prod mu over a subset on (za, zb), evaluated at z.
inline double mu_product_inverse(const PFTable& t, const BracketTable& b,
                                 double za, double zb, double z) {
    const double front = std::exp(-za * t.rate_sum);
    const double d = zb - za;
    KahanAccumulator acc;
    for (std::size_t k = 0; k < t.rates.size(); ++k)
        for (const auto& entry : b.entries) {
            const double shift = t.count * za + entry.level * d;
            const double w = z - shift;
            if (w < 0.0) continue;
            const double coeff =
                t.coeffs[k] * front * entry.sign * std::exp(-d * entry.rate_sum);
            acc.add(-coeff * std::exp(-t.rates[k] * w));
        }
    return acc.sum_denoised();
}

/// Conditioning tables shared by the head/tail density and the capture
/// probability: one block per (pivot branch, head set) pair.
struct HeadTailBlock {
    double r_piv = 0.0;
    PFTable head;                  // empty when m == 1
    std::vector<double> beta;      // per head pole k: (head+pivot rate sum) - m r_k
    PFTable tail;
    std::vector<std::vector<double>> tail_tuples;  // [h-1] -> tuple rate sums
};

inline std::vector<HeadTailBlock> build_head_tail_blocks(
    const FadingProfile& profile, int m) {
    const int N = profile.N();
    std::vector<HeadTailBlock> blocks;
    const IndexSet all = IndexSet::full(N);
    for (int piv = 1; piv <= N; ++piv) {
        const IndexSet rest = all.difference(IndexSet({piv}));
        for (const IndexSet& head : enumerate_subsets(rest, m - 1)) {
            HeadTailBlock block;
            block.r_piv = profile.rate(piv);
            const IndexSet tail = rest.difference(head);
            block.tail = PFTable::build(subset_averages(profile, tail));
            block.tail_tuples.assign(static_cast<std::size_t>(N - m), {});
            for (int h = 1; h <= N - m; ++h)
                for (const IndexSet& t : enumerate_subsets(tail, h)) {
                    double rs = 0.0;
                    for (int idx : t.members()) rs += profile.rate(idx);
                    block.tail_tuples[h - 1].push_back(rs);
                }
            if (m >= 2) {
                block.head = PFTable::build(subset_averages(profile, head));
                double head_rate_sum = block.r_piv;
                for (int idx : head.members()) head_rate_sum += profile.rate(idx);
                block.beta.reserve(block.head.rates.size());
                for (double rk : block.head.rates)
                    block.beta.push_back(head_rate_sum - m * rk);
            }
            blocks.push_back(std::move(block));
        }
    }
    return blocks;
}

} // namespace detail

// ---------------------------------------------------------------------------
// all-N shapes (fully closed-form)
// ---------------------------------------------------------------------------

/// Density of the total sum u_1 + ... + u_N (order does not matter, so this
/// is the plain sum of the independent branches).
class TotalSumDensity {
  public:
    explicit TotalSumDensity(const FadingProfile& profile)
        : table_(detail::PFTable::build(profile.averages())) {}

    double pdf(double z) const {
        if (z < 0.0) return 0.0;
        KahanAccumulator acc;
        for (std::size_t k = 0; k < table_.rates.size(); ++k)
            acc.add(-table_.coeffs[k] * std::exp(-table_.rates[k] * z));
        return acc.sum_denoised();
    }

    bool in_support(double z) const { return z >= 0.0; }

  private:
    detail::PFTable table_;
};

/// Joint density of (Z1, Z2) = (u_1+...+u_m, u_{m+1}+...+u_N).
///
/// Conditioning on the branch that realizes u_m and on the head set above
/// it, the transform factorizes into e-products (head, at lambda1) and
/// c-products (tail, at lambda2) around the pivot density.  The remaining
/// integral over the pivot value is a finite sum of integrals of plain
/// exponentials, evaluated in closed form here.
class HeadTailSumDensity {
  public:
    HeadTailSumDensity(const FadingProfile& profile, int m)
        : N_(profile.N()), m_(m) {
        PartialSumSpec spec{PartialSumMode::AllHeadTail, m, 0};
        validate_spec(spec, N_);
        blocks_ = detail::build_head_tail_blocks(profile, m);
    }

    bool in_support(double z1, double z2) const {
        return z1 >= 0.0 && z2 >= 0.0 &&
               (N_ - m_) * z1 >= m_ * z2;
    }

    double pdf(double z1, double z2) const {
        if (!in_support(z1, z2)) return 0.0;
        return (m_ == 1) ? pdf_m1(z1, z2) : pdf_general(z1, z2);
    }

  private:
    // With an empty head the pivot value is pinned to z1 itself and the
    // tail inverse is evaluated at z2 with step-function gates.
    double pdf_m1(double z1, double z2) const {
        KahanAccumulator acc;
        for (const auto& block : blocks_) {
            const double piv = block.r_piv * std::exp(-z1 * block.r_piv);
            KahanAccumulator inner;
            for (std::size_t q = 0; q < block.tail.rates.size(); ++q) {
                const double cq = block.tail.coeffs[q];
                const double rq = block.tail.rates[q];
                double bracket = std::exp(-rq * z2);
                double sign = 1.0;
                for (std::size_t h1 = 0; h1 < block.tail_tuples.size(); ++h1) {
                    sign = -sign;
                    const double h = static_cast<double>(h1 + 1);
                    const double w = z2 - h * z1;
                    if (w < 0.0) continue;
                    for (double rs : block.tail_tuples[h1])
                        bracket += sign * std::exp(-z1 * rs) * std::exp(-rq * w);
                }
                inner.add(cq * bracket);
            }
            acc.add(-piv * inner.sum());
        }
        return acc.sum_denoised();
    }

    double pdf_general(double z1, double z2) const {
        const double b0 = z1 / m_;
        KahanAccumulator acc;
        for (const auto& block : blocks_) {
            KahanAccumulator inner;
            for (std::size_t k = 0; k < block.head.rates.size(); ++k) {
                const double ck = block.head.coeffs[k] *
                                  std::exp(-z1 * block.head.rates[k]);
                const double beta = block.beta[k];
                for (std::size_t q = 0; q < block.tail.rates.size(); ++q) {
                    const double cq = block.tail.coeffs[q] *
                                      std::exp(-z2 * block.tail.rates[q]);
                    const double rq = block.tail.rates[q];
                    double bracket = exp_integral_0b(beta, b0);
                    double sign = 1.0;
                    for (std::size_t h1 = 0; h1 < block.tail_tuples.size(); ++h1) {
                        sign = -sign;
                        const double h = static_cast<double>(h1 + 1);
                        const double b = std::min(b0, z2 / h);
                        for (double rs : block.tail_tuples[h1])
                            bracket += sign *
                                       exp_integral_0b(beta + rs - h * rq, b);
                    }
                    inner.add(ck * cq * bracket);
                }
            }
            acc.add(block.r_piv * inner.sum());
        }
        return acc.sum_denoised();
    }

    int N_;
    int m_;
    std::vector<detail::HeadTailBlock> blocks_;
};

/// Joint density of (Z1, Z2) = (u_m, sum of the other N-1 ordered gains).
///
/// The pivot's transform factor collapses to a point mass at Z1, and the
/// remaining head/tail products share the second transform variable, so the
/// inverse is a sum of simple- and double-pole terms evaluated at Z2.
class PivotRestDensity {
  public:
    PivotRestDensity(const FadingProfile& profile, int m)
        : N_(profile.N()), m_(m) {
        PartialSumSpec spec{PartialSumMode::AllPivot, m, 0};
        validate_spec(spec, N_);
        const IndexSet all = IndexSet::full(N_);
        for (int piv = 1; piv <= N_; ++piv) {
            const IndexSet rest = all.difference(IndexSet({piv}));
            for (const IndexSet& head : enumerate_subsets(rest, m_ - 1)) {
                Block block;
                block.r_piv = profile.rate(piv);
                block.head = detail::PFTable::build(
                    detail::subset_averages(profile, head));
                const IndexSet tail = rest.difference(head);
                block.tail = detail::PFTable::build(
                    detail::subset_averages(profile, tail));
                block.tail_bracket = detail::BracketTable::build(block.tail.rates);
                blocks_.push_back(std::move(block));
            }
        }
    }

    bool in_support(double z1, double z2) const {
        if (z1 < 0.0 || z2 < (m_ - 1) * z1) return false;
        if (m_ == 1 && z2 > (N_ - 1) * z1) return false;
        return true;
    }

    double pdf(double z1, double z2) const {
        if (!in_support(z1, z2)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_) {
            LaplaceTermSum head_terms;
            if (block.head.count == 0) {
                head_terms = LaplaceTermSum::one();
            } else {
                const double front = std::exp(-z1 * block.head.rate_sum);
                for (std::size_t k = 0; k < block.head.rates.size(); ++k)
                    head_terms.add(PoleTerm{block.head.coeffs[k] * front,
                                            block.head.rates[k],
                                            (m_ - 1) * z1});
            }
            LaplaceTermSum tail_terms;
            if (block.tail.count == 0) {
                tail_terms = LaplaceTermSum::one();
            } else {
                for (std::size_t q = 0; q < block.tail.rates.size(); ++q)
                    for (const auto& entry : block.tail_bracket.entries)
                        tail_terms.add(PoleTerm{
                            block.tail.coeffs[q] * entry.sign *
                                std::exp(-z1 * entry.rate_sum),
                            block.tail.rates[q],
                            static_cast<double>(entry.level) * z1});
            }
            const LaplaceTermSum combined = product(head_terms, tail_terms);
            acc.add(block.r_piv * std::exp(-block.r_piv * z1) *
                    combined.inverse_at(z2));
        }
        return acc.sum_denoised();
    }

  private:
    struct Block {
        double r_piv = 0.0;
        detail::PFTable head;
        detail::PFTable tail;
        detail::BracketTable tail_bracket;
    };

    int N_;
    int m_;
    std::vector<Block> blocks_;
};

// ---------------------------------------------------------------------------
// best-Ns building blocks (boundary-pair and four-variable densities)
// ---------------------------------------------------------------------------

/// Joint density of (Z1, Z2) = (u_1+...+u_{Ns-1}, u_Ns): the retained head
/// mass together with the smallest retained gain.  Conditioning on the
/// branch realizing u_Ns and on the discarded set below it pins Z2, and the
/// head product inverts at Z1.
class BestPairDensity {
  public:
    BestPairDensity(const FadingProfile& profile, int Ns)
        : Ns_(Ns) {
        PartialSumSpec spec{PartialSumMode::BestTotal, 0, Ns};
        validate_spec(spec, profile.N());
        if (Ns < 2)
            throw ConfigError("BestPairDensity: needs Ns >= 2");
        build_blocks(profile);
    }

    bool in_support(double z1, double z2) const {
        return z2 >= 0.0 && z1 >= (Ns_ - 1) * z2;
    }

    double pdf(double z1, double z2) const {
        if (!in_support(z1, z2)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_) {
            double sel = block.r_sel * std::exp(-z2 * block.r_sel);
            for (double gb : block.unsel_avgs) sel *= -std::expm1(-z2 / gb);
            acc.add(sel * detail::e_product_inverse(block.head, z2, z1));
        }
        return acc.sum_denoised();
    }

  private:
    struct Block {
        double r_sel = 0.0;
        std::vector<double> unsel_avgs;
        detail::PFTable head;
    };

    void build_blocks(const FadingProfile& profile) {
        const int N = profile.N();
        const IndexSet all = IndexSet::full(N);
        for (int sel = 1; sel <= N; ++sel) {
            const IndexSet rest = all.difference(IndexSet({sel}));
            for (const IndexSet& unsel : enumerate_subsets(rest, N - Ns_)) {
                Block block;
                block.r_sel = profile.rate(sel);
                block.unsel_avgs = detail::subset_averages(profile, unsel);
                block.head = detail::PFTable::build(
                    detail::subset_averages(profile, rest.difference(unsel)));
                blocks_.push_back(std::move(block));
            }
        }
    }

    int Ns_;
    std::vector<Block> blocks_;
};

/// Four-variable density of
///   (Z1, Z2, Z3, Z4) = (u_1+...+u_{m-1}, u_m, u_{m+1}+...+u_{Ns-1}, u_Ns)
/// over the Ns retained branches, for 1 <= m <= Ns-1.  The pivot and the
/// smallest retained gain pin Z2 and Z4; the head inverts at Z1 and the mid
/// group (between the two pivots) inverts at Z3.  When m == 1 the head
/// group is empty and Z1 degenerates to a point mass at zero; when
/// m == Ns-1 the mid group is empty and Z3 degenerates likewise.  The
/// degenerate slots are dropped rather than evaluated.
class BestQuadDensity {
  public:
    BestQuadDensity(const FadingProfile& profile, int Ns, int m)
        : Ns_(Ns), m_(m), n3_(Ns - m - 1) {
        PartialSumSpec spec{PartialSumMode::BestHeadTail, m, Ns};
        validate_spec(spec, profile.N());
        build_blocks(profile);
    }

    bool head_present() const { return m_ >= 2; }
    bool mid_present() const { return n3_ >= 1; }
    int mid_count() const { return n3_; }

    bool in_support(double z1, double z2, double z3, double z4) const {
        if (z4 < 0.0 || z2 < z4) return false;
        if (head_present() && z1 < (m_ - 1) * z2) return false;
        if (mid_present() && (z3 < n3_ * z4 || z3 > n3_ * z2)) return false;
        return true;
    }

    /// Full four-variable density (requires both groups nonempty).
    double pdf4(double z1, double z2, double z3, double z4) const {
        if (!head_present() || !mid_present())
            throw ConfigError("BestQuadDensity::pdf4: degenerate group; use the reduced form");
        if (!in_support(z1, z2, z3, z4)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_)
            acc.add(scalar_factor(block, z2, z4) *
                    detail::mu_product_inverse(block.mid, block.mid_bracket, z4,
                                               z2, z3) *
                    detail::e_product_inverse(block.head, z2, z1));
        return acc.sum_denoised();
    }

    /// m == 1: density of (Z2, Z3, Z4) with the head group absent.
    double pdf3_head_absent(double z2, double z3, double z4) const {
        if (head_present() || !mid_present())
            throw ConfigError("BestQuadDensity::pdf3_head_absent: wrong shape");
        if (!in_support(0.0, z2, z3, z4)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_)
            acc.add(scalar_factor(block, z2, z4) *
                    detail::mu_product_inverse(block.mid, block.mid_bracket, z4,
                                               z2, z3));
        return acc.sum_denoised();
    }

    /// m == Ns-1 (Ns >= 3): density of (Z1, Z2, Z4) with the mid group absent.
    double pdf3_mid_absent(double z1, double z2, double z4) const {
        if (!head_present() || mid_present())
            throw ConfigError("BestQuadDensity::pdf3_mid_absent: wrong shape");
        if (!in_support(z1, z2, 0.0, z4)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_)
            acc.add(scalar_factor(block, z2, z4) *
                    detail::e_product_inverse(block.head, z2, z1));
        return acc.sum_denoised();
    }

    /// Ns == 2, m == 1: direct density of (Z2, Z4) = (u_1, u_2).
    double pdf2_pair(double z2, double z4) const {
        if (head_present() || mid_present())
            throw ConfigError("BestQuadDensity::pdf2_pair: wrong shape");
        if (!in_support(0.0, z2, 0.0, z4)) return 0.0;
        KahanAccumulator acc;
        for (const auto& block : blocks_)
            acc.add(scalar_factor(block, z2, z4));
        return acc.sum_denoised();
    }

  private:
    struct Block {
        double r_sel = 0.0;
        std::vector<double> unsel_avgs;
        double r_piv = 0.0;
        detail::PFTable head;
        detail::PFTable mid;
        detail::BracketTable mid_bracket;
    };

    double scalar_factor(const Block& block, double z2, double z4) const {
        double f = block.r_sel * std::exp(-z4 * block.r_sel);
        for (double gb : block.unsel_avgs) f *= -std::expm1(-z4 / gb);
        return f * block.r_piv * std::exp(-z2 * block.r_piv);
    }

    void build_blocks(const FadingProfile& profile) {
        const int N = profile.N();
        const IndexSet all = IndexSet::full(N);
        for (int sel = 1; sel <= N; ++sel) {
            const IndexSet rest = all.difference(IndexSet({sel}));
            for (const IndexSet& unsel : enumerate_subsets(rest, N - Ns_)) {
                const IndexSet rem = rest.difference(unsel);
                for (int piv : rem.members()) {
                    const IndexSet pool = rem.difference(IndexSet({piv}));
                    for (const IndexSet& mid : enumerate_subsets(pool, n3_)) {
                        Block block;
                        block.r_sel = profile.rate(sel);
                        block.unsel_avgs = detail::subset_averages(profile, unsel);
                        block.r_piv = profile.rate(piv);
                        block.mid = detail::PFTable::build(
                            detail::subset_averages(profile, mid));
                        block.mid_bracket =
                            detail::BracketTable::build(block.mid.rates);
                        block.head = detail::PFTable::build(
                            detail::subset_averages(profile, pool.difference(mid)));
                        blocks_.push_back(std::move(block));
                    }
                }
            }
        }
    }

    int Ns_;
    int m_;
    int n3_;
    std::vector<Block> blocks_;
};

// ---------------------------------------------------------------------------
// best-Ns public shapes
// ---------------------------------------------------------------------------

/// Density of u_1 + ... + u_Ns, by integrating the boundary-pair density
/// over the smallest retained gain.
class BestTotalDensity {
  public:
    BestTotalDensity(const FadingProfile& profile, int Ns,
                     QuadratureConfig cfg = {})
        : Ns_(Ns), cfg_(cfg) {
        PartialSumSpec spec{PartialSumMode::BestTotal, 0, Ns};
        validate_spec(spec, profile.N());
        if (Ns_ >= 2) {
            pair_ = std::make_shared<BestPairDensity>(profile, Ns);
        } else {
            // Ns == 1: density of the largest gain, written directly.
            const int N = profile.N();
            for (int i = 1; i <= N; ++i) {
                max_rates_.push_back(profile.rate(i));
                std::vector<double> others;
                for (int j = 1; j <= N; ++j)
                    if (j != i) others.push_back(profile.average(j));
                max_other_avgs_.push_back(std::move(others));
            }
        }
    }

    bool in_support(double x) const { return x >= 0.0; }

    double pdf(double x) const {
        if (x < 0.0) return 0.0;
        if (Ns_ == 1) {
            KahanAccumulator acc;
            for (std::size_t i = 0; i < max_rates_.size(); ++i) {
                double term = max_rates_[i] * std::exp(-max_rates_[i] * x);
                for (double gb : max_other_avgs_[i]) term *= -std::expm1(-x / gb);
                acc.add(term);
            }
            return acc.sum_denoised();
        }
        if (x == 0.0) return 0.0;
        auto f = [this, x](double z2) {
            return pair_->pdf(x - z2, z2);
        };
        return integrate(f, 0.0, x / Ns_, cfg_);
    }

    const BestPairDensity& pair() const {
        if (!pair_) throw ConfigError("BestTotalDensity: no pair density for Ns == 1");
        return *pair_;
    }

  private:
    int Ns_;
    QuadratureConfig cfg_;
    std::shared_ptr<BestPairDensity> pair_;
    std::vector<double> max_rates_;
    std::vector<std::vector<double>> max_other_avgs_;
};

/// Route selector for the two equivalent reductions of the best-Ns pivot
/// density; both are kept as independent evaluation paths.
enum class PivotReductionRoute { ByMid, ByHead };

/// Likewise for the best-Ns head/tail density: eliminate the smallest
/// retained gain first, or the pivot first.
enum class HeadTailReductionRoute { ByMin, ByPivot };

/// Joint density of (Z1, Z2) = (u_m, sum of the other retained gains).
class BestPivotDensity {
  public:
    BestPivotDensity(const FadingProfile& profile, int Ns, int m,
                     QuadratureConfig cfg = {})
        : Ns_(Ns), m_(m), cfg_(cfg), inner_cfg_(cfg) {
        PartialSumSpec spec{PartialSumMode::BestPivot, m, Ns};
        validate_spec(spec, profile.N());
        inner_cfg_.abs_tol *= 0.1;
        if (m_ == Ns_) {
            pair_ = std::make_shared<BestPairDensity>(profile, Ns_);
        } else {
            quad_ = std::make_shared<BestQuadDensity>(profile, Ns_, m_);
        }
    }

    bool in_support(double x, double y) const {
        if (x < 0.0 || y < (m_ - 1) * x) return false;
        if (m_ == 1 && y >= (Ns_ - 1) * x) return false;
        return true;
    }

    double pdf(double x, double y) const {
        return pdf_via(PivotReductionRoute::ByMid, x, y);
    }

    double pdf_via(PivotReductionRoute route, double x, double y) const {
        if (!in_support(x, y)) return 0.0;
        if (m_ == Ns_) return pair_->pdf(y, x);
        if (Ns_ == 2 && m_ == 1) return quad_->pdf2_pair(x, y);
        if (m_ == 1) return reduce_m1(x, y);
        if (m_ == Ns_ - 1) return reduce_mid_absent(x, y);
        return (route == PivotReductionRoute::ByMid) ? reduce_by_mid(x, y)
                                                     : reduce_by_head(x, y);
    }

  private:
    // m == 1: Y = Z3 + Z4 over the head-absent three-variable density.
    double reduce_m1(double x, double y) const {
        const int n3 = Ns_ - 2;
        const double lo = std::max(0.0, y - n3 * x);
        const double hi = std::min(x, y / (Ns_ - 1));
        if (!(hi > lo)) return 0.0;
        auto f = [this, x, y](double z4) {
            return quad_->pdf3_head_absent(x, y - z4, z4);
        };
        return integrate(f, lo, hi, cfg_);
    }

    // m == Ns-1: Y = Z1 + Z4 over the mid-absent three-variable density.
    double reduce_mid_absent(double x, double y) const {
        const double hi = std::min(x, y - (m_ - 1) * x);
        if (!(hi > 0.0)) return 0.0;
        auto f = [this, x, y](double z4) {
            return quad_->pdf3_mid_absent(y - z4, x, z4);
        };
        return integrate(f, 0.0, hi, cfg_);
    }

    double z4_upper(double x, double y) const {
        return std::min(x, (y - (m_ - 1) * x) / (Ns_ - m_));
    }

    // Inner variable Z3 (mid sum), Z1 recovered as y - z3 - z4.
    double reduce_by_mid(double x, double y) const {
        const int n3 = Ns_ - m_ - 1;
        const double z4hi = z4_upper(x, y);
        if (!(z4hi > 0.0)) return 0.0;
        auto outer = [this, n3, x, y](double z4) {
            const double lo = n3 * z4;
            const double hi = std::min(n3 * x, y - z4 - (m_ - 1) * x);
            if (!(hi > lo)) return 0.0;
            auto inner = [this, x, y, z4](double z3) {
                return quad_->pdf4(y - z3 - z4, x, z3, z4);
            };
            return integrate(inner, lo, hi, inner_cfg_);
        };
        return integrate(outer, 0.0, z4hi, cfg_);
    }

    // Inner variable Z1 (head sum), Z3 recovered as y - z1 - z4.
    double reduce_by_head(double x, double y) const {
        const int n3 = Ns_ - m_ - 1;
        const double z4hi = z4_upper(x, y);
        if (!(z4hi > 0.0)) return 0.0;
        auto outer = [this, n3, x, y](double z4) {
            const double lo = std::max((m_ - 1) * x, y - z4 - n3 * x);
            const double hi = y - z4 - n3 * z4;
            if (!(hi > lo)) return 0.0;
            auto inner = [this, x, y, z4](double z1) {
                return quad_->pdf4(z1, x, y - z1 - z4, z4);
            };
            return integrate(inner, lo, hi, inner_cfg_);
        };
        return integrate(outer, 0.0, z4hi, cfg_);
    }

    int Ns_;
    int m_;
    QuadratureConfig cfg_;
    QuadratureConfig inner_cfg_;
    std::shared_ptr<BestPairDensity> pair_;
    std::shared_ptr<BestQuadDensity> quad_;
};

/// Joint density of (Z1, Z2) = (u_1+...+u_m, u_{m+1}+...+u_Ns).
class BestHeadTailDensity {
  public:
    BestHeadTailDensity(const FadingProfile& profile, int Ns, int m,
                        QuadratureConfig cfg = {})
        : Ns_(Ns), m_(m), cfg_(cfg), inner_cfg_(cfg) {
        PartialSumSpec spec{PartialSumMode::BestHeadTail, m, Ns};
        validate_spec(spec, profile.N());
        inner_cfg_.abs_tol *= 0.1;
        if (m_ == Ns_ - 1) {
            pair_ = std::make_shared<BestPairDensity>(profile, Ns_);
        } else {
            quad_ = std::make_shared<BestQuadDensity>(profile, Ns_, m_);
        }
    }

    /// The head averages at least as much per branch as the tail, so the
    /// density vanishes unless (Ns-m) x strictly exceeds m y.
    bool in_support(double x, double y) const {
        return x >= 0.0 && y >= 0.0 && (Ns_ - m_) * x > m_ * y;
    }

    double pdf(double x, double y) const {
        return pdf_via(HeadTailReductionRoute::ByMin, x, y);
    }

    /// Same density through either elimination order of the two pinned
    /// gains; the routes integrate different variables first and act as
    /// independent checks on each other's limits.
    double pdf_via(HeadTailReductionRoute route, double x, double y) const {
        if (!in_support(x, y)) return 0.0;
        if (m_ == Ns_ - 1) return pair_->pdf(x, y);
        if (m_ == 1) return reduce_m1(x, y);
        return route == HeadTailReductionRoute::ByMin ? reduce_by_min(x, y)
                                                      : reduce_by_pivot(x, y);
    }

  private:
    // m == 1: X = u_1 pins the pivot; Y = Z3 + Z4.
    double reduce_m1(double x, double y) const {
        const int n3 = Ns_ - 2;
        const double lo = std::max(0.0, y - n3 * x);
        const double hi = std::min(x, y / (Ns_ - 1));
        if (!(hi > lo)) return 0.0;
        auto f = [this, x, y](double z4) {
            return quad_->pdf3_head_absent(x, y - z4, z4);
        };
        return integrate(f, lo, hi, cfg_);
    }

    // 1 < m < Ns-1: X = Z1 + Z2 and Y = Z3 + Z4, smallest gain first.
    double reduce_by_min(double x, double y) const {
        const int n3 = Ns_ - m_ - 1;
        const double z4hi = std::min(y / (Ns_ - m_), x / m_);
        if (!(z4hi > 0.0)) return 0.0;
        auto outer = [this, n3, x, y](double z4) {
            const double lo = (y - z4) / n3;
            const double hi = x / m_;
            if (!(hi > lo)) return 0.0;
            auto inner = [this, x, y, z4](double z2) {
                return quad_->pdf4(x - z2, z2, y - z4, z4);
            };
            return integrate(inner, lo, hi, inner_cfg_);
        };
        return integrate(outer, 0.0, z4hi, cfg_);
    }

    // 1 < m < Ns-1, pivot first: for fixed z2 the smallest gain spans
    // [max(0, y - n3 z2), min(z2, y/(Ns-m))], nonempty once z2 exceeds
    // y/(Ns-m).
    double reduce_by_pivot(double x, double y) const {
        const int n3 = Ns_ - m_ - 1;
        const double z2lo = y / (Ns_ - m_);
        const double z2hi = x / m_;
        if (!(z2hi > z2lo)) return 0.0;
        auto outer = [this, n3, x, y](double z2) {
            const double lo = std::max(0.0, y - n3 * z2);
            const double hi = std::min(z2, y / (Ns_ - m_));
            if (!(hi > lo)) return 0.0;
            auto inner = [this, x, y, z2](double z4) {
                return quad_->pdf4(x - z2, z2, y - z4, z4);
            };
            return integrate(inner, lo, hi, inner_cfg_);
        };
        return integrate(outer, z2lo, z2hi, cfg_);
    }

    int Ns_;
    int m_;
    QuadratureConfig cfg_;
    QuadratureConfig inner_cfg_;
    std::shared_ptr<BestPairDensity> pair_;
    std::shared_ptr<BestQuadDensity> quad_;
};

// ---------------------------------------------------------------------------
// Uniform front end
// ---------------------------------------------------------------------------

/// A joint density packaged with its dimension and exact support predicate.
struct JointDensityResult {
    int dimension = 0;
    std::function<double(const std::vector<double>&)> density;
    std::function<bool(const std::vector<double>&)> support;
};

/// Build the joint density described by `spec` over `profile`.
inline JointDensityResult make_joint_density(const FadingProfile& profile,
                                             const PartialSumSpec& spec,
                                             QuadratureConfig cfg = {}) {
    validate_spec(spec, profile.N());
    JointDensityResult out;
    out.dimension = spec_dimension(spec);
    auto check_arity = [dim = out.dimension](const std::vector<double>& z) {
        if (static_cast<int>(z.size()) != dim)
            throw ConfigError("joint density: argument arity mismatch");
    };
    switch (spec.mode) {
        case PartialSumMode::AllTotal: {
            auto eval = std::make_shared<TotalSumDensity>(profile);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0]);
            };
            break;
        }
        case PartialSumMode::AllHeadTail: {
            auto eval = std::make_shared<HeadTailSumDensity>(profile, spec.m);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0], z[1]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0], z[1]);
            };
            break;
        }
        case PartialSumMode::AllPivot: {
            auto eval = std::make_shared<PivotRestDensity>(profile, spec.m);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0], z[1]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0], z[1]);
            };
            break;
        }
        case PartialSumMode::BestTotal: {
            auto eval = std::make_shared<BestTotalDensity>(profile, spec.Ns, cfg);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0]);
            };
            break;
        }
        case PartialSumMode::BestPivot: {
            auto eval =
                std::make_shared<BestPivotDensity>(profile, spec.Ns, spec.m, cfg);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0], z[1]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0], z[1]);
            };
            break;
        }
        case PartialSumMode::BestHeadTail: {
            auto eval = std::make_shared<BestHeadTailDensity>(profile, spec.Ns,
                                                              spec.m, cfg);
            out.density = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->pdf(z[0], z[1]);
            };
            out.support = [eval, check_arity](const std::vector<double>& z) {
                check_arity(z);
                return eval->in_support(z[0], z[1]);
            };
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joint MGF (independent route: kernels + direct pivot integration)
// ---------------------------------------------------------------------------

namespace detail {

template <class Scalar>
double mgf_tail_scale(const FadingProfile& profile,
                      const std::vector<Scalar>& lambdas) {
    double gb_max = 0.0;
    for (double gb : profile.averages()) gb_max = std::max(gb_max, gb);
    double pos = 0.0;
    for (const auto& l : lambdas) pos += std::max(0.0, real_part(l));
    if (pos == 0.0) return gb_max;
    const double net = 1.0 / gb_max - pos;
    if (net <= 0.0)
        throw ConfigError("joint_mgf: arguments outside the convergence region");
    return std::max(gb_max, 1.0 / net);
}

} // namespace detail

/// Joint MGF of the partial sums described by `spec`, evaluated with the
/// kernel set `ks` (closed-form or quadrature-backed).  `lambdas` must have
/// one entry per joint variable; the MGF exists for real parts below every
/// branch rate.
template <class Scalar, class KernelSet>
Scalar joint_mgf(const KernelSet& ks, const PartialSumSpec& spec,
                 const std::vector<Scalar>& lambdas,
                 const QuadratureConfig& cfg = {}) {
    const FadingProfile& profile = ks.profile();
    const int N = profile.N();
    validate_spec(spec, N);
    if (static_cast<int>(lambdas.size()) != spec_dimension(spec))
        throw ConfigError("joint_mgf: one argument per joint variable required");
    const double scale = detail::mgf_tail_scale(profile, lambdas);
    const IndexSet all = IndexSet::full(N);

    switch (spec.mode) {
        case PartialSumMode::AllTotal: {
            Scalar prod = Scalar(1.0);
            for (int l = 1; l <= N; ++l)
                prod *= ks.c(l, kInf, lambdas[0]);
            return prod;
        }
        case PartialSumMode::AllHeadTail:
        case PartialSumMode::AllPivot: {
            const bool head_tail = (spec.mode == PartialSumMode::AllHeadTail);
            const Scalar l1 = lambdas[0];
            const Scalar l2 = lambdas[1];
            Scalar acc{};
            for (int piv = 1; piv <= N; ++piv) {
                const IndexSet rest = all.difference(IndexSet({piv}));
                for (const IndexSet& head : enumerate_subsets(rest, spec.m - 1)) {
                    const IndexSet tail = rest.difference(head);
                    auto f = [&](double u) -> Scalar {
                        Scalar v = ks.pdf(piv, u) * std::exp(l1 * u);
                        for (int idx : head.members())
                            v *= ks.e(idx, u, head_tail ? l1 : l2);
                        for (int idx : tail.members()) v *= ks.c(idx, u, l2);
                        return v;
                    };
                    acc += integrate_semi_infinite(f, 0.0, scale, cfg);
                }
            }
            return acc;
        }
        case PartialSumMode::BestTotal: {
            const Scalar l = lambdas[0];
            Scalar acc{};
            for (int sel = 1; sel <= N; ++sel) {
                const IndexSet rest = all.difference(IndexSet({sel}));
                for (const IndexSet& unsel : enumerate_subsets(rest, N - spec.Ns)) {
                    const IndexSet head = rest.difference(unsel);
                    auto f = [&](double u) -> Scalar {
                        Scalar v = ks.pdf(sel, u) * std::exp(l * u);
                        for (int idx : unsel.members()) v *= ks.cdf(idx, u);
                        for (int idx : head.members()) v *= ks.e(idx, u, l);
                        return v;
                    };
                    acc += integrate_semi_infinite(f, 0.0, scale, cfg);
                }
            }
            return acc;
        }
        case PartialSumMode::BestPivot:
        case PartialSumMode::BestHeadTail: {
            const Scalar lx = lambdas[0];
            const Scalar ly = lambdas[1];
            if (spec.mode == PartialSumMode::BestPivot && spec.m == spec.Ns) {
                // Pivot is the smallest retained gain: single integral.
                Scalar acc{};
                for (int sel = 1; sel <= N; ++sel) {
                    const IndexSet rest = all.difference(IndexSet({sel}));
                    for (const IndexSet& unsel :
                         enumerate_subsets(rest, N - spec.Ns)) {
                        const IndexSet head = rest.difference(unsel);
                        auto f = [&](double u) -> Scalar {
                            Scalar v = ks.pdf(sel, u) * std::exp(lx * u);
                            for (int idx : unsel.members()) v *= ks.cdf(idx, u);
                            for (int idx : head.members()) v *= ks.e(idx, u, ly);
                            return v;
                        };
                        acc += integrate_semi_infinite(f, 0.0, scale, cfg);
                    }
                }
                return acc;
            }
            // Four-slot transform evaluated with the two public arguments
            // distributed over (head, pivot, mid, smallest).
            const bool pivot_mode = (spec.mode == PartialSumMode::BestPivot);
            const Scalar l1 = pivot_mode ? ly : lx;  // head sum
            const Scalar l2 = lx;                    // pivot u_m
            const Scalar l3 = ly;                    // mid sum
            const Scalar l4 = ly;                    // smallest retained
            const int n3 = spec.Ns - spec.m - 1;
            QuadratureConfig inner_cfg = cfg;
            inner_cfg.abs_tol *= 0.1;
            Scalar acc{};
            for (int sel = 1; sel <= N; ++sel) {
                const IndexSet rest = all.difference(IndexSet({sel}));
                for (const IndexSet& unsel : enumerate_subsets(rest, N - spec.Ns)) {
                    const IndexSet rem = rest.difference(unsel);
                    for (int piv : rem.members()) {
                        const IndexSet pool = rem.difference(IndexSet({piv}));
                        for (const IndexSet& mid : enumerate_subsets(pool, n3)) {
                            const IndexSet head = pool.difference(mid);
                            auto outer = [&](double u4) -> Scalar {
                                Scalar w = ks.pdf(sel, u4) * std::exp(l4 * u4);
                                for (int idx : unsel.members())
                                    w *= ks.cdf(idx, u4);
                                auto inner = [&, u4](double u2) -> Scalar {
                                    Scalar v = ks.pdf(piv, u2) * std::exp(l2 * u2);
                                    for (int idx : mid.members())
                                        v *= ks.mu(idx, u4, u2, l3);
                                    for (int idx : head.members())
                                        v *= ks.e(idx, u2, l1);
                                    return v;
                                };
                                return w * integrate_semi_infinite(inner, u4,
                                                                   scale,
                                                                   inner_cfg);
                            };
                            acc += integrate_semi_infinite(outer, 0.0, scale, cfg);
                        }
                    }
                }
            }
            return acc;
        }
    }
    throw ConfigError("joint_mgf: unhandled mode");
}

} // namespace ordstat
