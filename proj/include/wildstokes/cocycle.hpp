#pragma once

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wildstokes/errors.hpp"
#include "wildstokes/exponents.hpp"
#include "wildstokes/matrix.hpp"
#include "wildstokes/puiseux.hpp"

namespace wildstokes {

// Sectorial automorphism in graded block form: the (i, j) block represents
// exp(a_j - a_i) s^{-A_i} T_ij(u) s^{A_j}.  Only the T-level Laurent data is
// stored; the exponential and s^A prefactors cancel exactly in products, so
// block products are plain matrix products over C((u)).
class BlockCocycle {
public:
    BlockCocycle(std::vector<Exponent> exponents, std::vector<int> sizes,
                 std::pair<Direction, Direction> arc, long order)
        : exponents_(std::move(exponents)), sizes_(std::move(sizes)), arc_(arc), order_(order) {
        if (exponents_.size() != sizes_.size())
            throw PreconditionError("cocycle: exponents/sizes length mismatch");
        for (int s : sizes_)
            if (s < 1) throw PreconditionError("cocycle: block sizes must be positive");
    }

    static BlockCocycle identity(std::vector<Exponent> exponents, std::vector<int> sizes,
                                 std::pair<Direction, Direction> arc, long order) {
        BlockCocycle c(std::move(exponents), std::move(sizes), arc, order);
        for (int i = 0; i < c.block_count(); ++i) c.set_block(i, i, c.identity_block(i));
        return c;
    }

    int block_count() const { return static_cast<int>(exponents_.size()); }
    int size(int i) const { return sizes_[static_cast<std::size_t>(i)]; }
    long order() const { return order_; }
    const std::vector<Exponent>& exponents() const { return exponents_; }
    const std::vector<int>& sizes() const { return sizes_; }
    const std::pair<Direction, Direction>& arc() const { return arc_; }
    const std::map<std::pair<int, int>, Matrix<LaurentU>>& stored_blocks() const { return blocks_; }

    std::vector<Eigen::MatrixXcd> Gmats; // optional s^{A_i} metadata, not used in products

    bool has_block(int i, int j) const { return blocks_.count({i, j}) > 0; }

    Matrix<LaurentU> block_or_zero(int i, int j) const {
        auto it = blocks_.find({i, j});
        if (it != blocks_.end()) return it->second;
        return Matrix<LaurentU>(size(i), size(j), LaurentU::zero(order_));
    }

    Matrix<LaurentU> identity_block(int i) const {
        return Matrix<LaurentU>::identity(size(i), LaurentU::one(order_), LaurentU::zero(order_));
    }

    void set_block(int i, int j, Matrix<LaurentU> m) {
        if (m.rows() != size(i) || m.cols() != size(j))
            throw PreconditionError("cocycle: block shape mismatch");
        bool zero = true;
        for (int a = 0; a < m.rows() && zero; ++a)
            for (int b = 0; b < m.cols() && zero; ++b)
                if (!m(a, b).is_zero()) zero = false;
        if (zero)
            blocks_.erase({i, j});
        else
            blocks_[{i, j}] = std::move(m);
    }

private:
    std::vector<Exponent> exponents_;
    std::vector<int> sizes_;
    std::pair<Direction, Direction> arc_;
    long order_;
    std::map<std::pair<int, int>, Matrix<LaurentU>> blocks_;
};

namespace detail {

inline void require_same_type(const BlockCocycle& a, const BlockCocycle& b, const char* what) {
    if (a.block_count() != b.block_count() || a.sizes() != b.sizes())
        throw PreconditionError(std::string(what) + ": block structure mismatch");
    for (int i = 0; i < a.block_count(); ++i)
        if (!(a.exponents()[static_cast<std::size_t>(i)] == b.exponents()[static_cast<std::size_t>(i)]))
            throw PreconditionError(std::string(what) + ": exponent metadata mismatch");
}

inline bool block_is_identity(const Matrix<LaurentU>& m, double tol) {
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) {
            LaurentU want = (a == b) ? LaurentU::one(m(a, b).order()) : LaurentU::zero(m(a, b).order());
            if ((m(a, b) - want).valuation_above(tol) != kInfValuation) return false;
        }
    return true;
}

} // namespace detail

inline BlockCocycle cocycle_mul(const BlockCocycle& a, const BlockCocycle& b) {
    detail::require_same_type(a, b, "cocycle_mul");
    BlockCocycle out(a.exponents(), a.sizes(), a.arc(), std::min(a.order(), b.order()));
    for (int i = 0; i < a.block_count(); ++i)
        for (int j = 0; j < a.block_count(); ++j) {
            Matrix<LaurentU> acc(a.size(i), a.size(j), LaurentU::zero(out.order()));
            bool any = false;
            for (int k = 0; k < a.block_count(); ++k) {
                if (!a.has_block(i, k) || !b.has_block(k, j)) continue;
                acc = acc + a.block_or_zero(i, k) * b.block_or_zero(k, j);
                any = true;
            }
            if (any) out.set_block(i, j, std::move(acc));
        }
    return out;
}

// Inverse over truncated C((u)).  Strictly triangular deviations from the
// identity invert by the finite Neumann sum; the general case flattens to a
// scalar matrix and uses valuation-pivoted elimination.
inline BlockCocycle cocycle_invert(const BlockCocycle& tau) {
    int m = tau.block_count();
    bool unitriangular_up = true, unitriangular_down = true;
    for (int i = 0; i < m; ++i) {
        if (tau.has_block(i, i) && !detail::block_is_identity(tau.block_or_zero(i, i), 1e-13)) {
            unitriangular_up = unitriangular_down = false;
        }
        if (!tau.has_block(i, i)) unitriangular_up = unitriangular_down = false;
        for (int j = 0; j < m; ++j) {
            if (j < i && tau.has_block(i, j)) unitriangular_up = false;
            if (j > i && tau.has_block(i, j)) unitriangular_down = false;
        }
    }
    if (unitriangular_up || unitriangular_down) {
        // tau = I + E with E^m = 0: inverse is I - E + E^2 - ...
        BlockCocycle E(tau.exponents(), tau.sizes(), tau.arc(), tau.order());
        for (const auto& [key, blk] : tau.stored_blocks())
            if (key.first != key.second) E.set_block(key.first, key.second, blk);
        BlockCocycle out = BlockCocycle::identity(tau.exponents(), tau.sizes(), tau.arc(), tau.order());
        BlockCocycle power = E;
        double sign = -1.0;
        for (int k = 1; k < m; ++k) {
            for (const auto& [key, blk] : power.stored_blocks()) {
                auto cur = out.block_or_zero(key.first, key.second);
                out.set_block(key.first, key.second,
                              cur + map_matrix(blk, [&](const LaurentU& h) {
                                  return Complex(sign, 0.0) * h;
                              }));
            }
            power = cocycle_mul(power, E);
            sign = -sign;
        }
        return out;
    }

    int n = 0;
    std::vector<int> offset(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        offset[static_cast<std::size_t>(i)] = n;
        n += tau.size(i);
    }
    Matrix<LaurentU> flat(n, n, LaurentU::zero(tau.order()));
    for (const auto& [key, blk] : tau.stored_blocks())
        for (int a = 0; a < blk.rows(); ++a)
            for (int b = 0; b < blk.cols(); ++b)
                flat(offset[static_cast<std::size_t>(key.first)] + a,
                     offset[static_cast<std::size_t>(key.second)] + b) = blk(a, b);
    Matrix<LaurentU> inv = invert_series_matrix(flat); // throws NonInvertible
    BlockCocycle out(tau.exponents(), tau.sizes(), tau.arc(), tau.order());
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Matrix<LaurentU> blk(tau.size(i), tau.size(j));
            for (int a = 0; a < blk.rows(); ++a)
                for (int b = 0; b < blk.cols(); ++b)
                    blk(a, b) = inv(offset[static_cast<std::size_t>(i)] + a,
                                    offset[static_cast<std::size_t>(j)] + b);
            out.set_block(i, j, std::move(blk));
        }
    return out;
}

namespace detail {

inline void check_sorted(const BlockCocycle& tau, Parity parity, const char* what) {
    auto perm = order_exponents(tau.exponents(), parity);
    for (int i = 0; i < tau.block_count(); ++i)
        if (perm[static_cast<std::size_t>(i)] != i)
            throw UnsortedExponents(std::string(what) + ": exponents not sorted for this parity");
}

inline void check_truncation_headroom(const BlockCocycle& tau, const char* what) {
    for (const auto& [key, blk] : tau.stored_blocks())
        for (int a = 0; a < blk.rows(); ++a)
            for (int b = 0; b < blk.cols(); ++b) {
                const LaurentU& h = blk(a, b);
                if (!h.is_zero() && h.top_index() >= h.order() && std::abs(h.coeff(h.top_index())) > 0)
                    throw TruncationBoundary(std::string(what) +
                                             ": block data touches the truncation boundary; raise the order");
            }
}

} // namespace detail

// Upper-triangular factorization on an even (horizontal) overlap:
// tau = tau_plus^{-1} tau_minus, blockwise by the additive splitting at the
// per-pair thresholds, by induction on the block distance.
inline std::pair<BlockCocycle, BlockCocycle> factor_even(const BlockCocycle& tau) {
    int m = tau.block_count();
    detail::check_sorted(tau, Parity::even, "factor_even");
    detail::check_truncation_headroom(tau, "factor_even");
    for (int i = 0; i < m; ++i) {
        if (!detail::block_is_identity(tau.block_or_zero(i, i), 1e-12))
            throw NotUnitriangular("factor_even: diagonal blocks must be the identity");
        for (int j = 0; j < i; ++j)
            if (tau.has_block(i, j))
                throw NotUnitriangular("factor_even: lower blocks must vanish");
    }

    BlockCocycle plus_inv = BlockCocycle::identity(tau.exponents(), tau.sizes(), tau.arc(), tau.order());
    BlockCocycle minus = BlockCocycle::identity(tau.exponents(), tau.sizes(), tau.arc(), tau.order());
    for (int d = 1; d < m; ++d) {
        for (int i = 0; i + d < m; ++i) {
            int j = i + d;
            // tau_ij - sum_{i<k<j} (tau_+^{-1})_{ik} (tau_-)_{kj}
            Matrix<LaurentU> R = tau.block_or_zero(i, j);
            for (int k = i + 1; k < j; ++k) {
                if (!plus_inv.has_block(i, k) || !minus.has_block(k, j)) continue;
                R = R - plus_inv.block_or_zero(i, k) * minus.block_or_zero(k, j);
            }
            double A = split_threshold(tau.exponents()[static_cast<std::size_t>(i)],
                                       tau.exponents()[static_cast<std::size_t>(j)], Parity::even);
            Matrix<LaurentU> hp(R.rows(), R.cols()), hm(R.rows(), R.cols());
            for (int a = 0; a < R.rows(); ++a)
                for (int b = 0; b < R.cols(); ++b) {
                    auto [p, q] = split(R(a, b), A);
                    hp(a, b) = std::move(p);
                    hm(a, b) = std::move(q);
                }
            plus_inv.set_block(i, j, std::move(hp));
            minus.set_block(i, j, std::move(hm));
        }
    }
    return {cocycle_invert(plus_inv), minus};
}

// Block LU on an odd (vertical) overlap: T = T_R T_L^{-1} with T_L
// upper-unitriangular and T_R lower-block-triangular, by column elimination
// with principal pivots inverted over C((u)).
inline std::pair<BlockCocycle, BlockCocycle> factor_odd(const BlockCocycle& T) {
    int m = T.block_count();
    detail::check_sorted(T, Parity::odd, "factor_odd");
    detail::check_truncation_headroom(T, "factor_odd");

    BlockCocycle S(T.exponents(), T.sizes(), T.arc(), T.order());
    for (const auto& [key, blk] : T.stored_blocks()) S.set_block(key.first, key.second, blk);
    BlockCocycle L = BlockCocycle::identity(T.exponents(), T.sizes(), T.arc(), T.order());

    for (int k = 0; k + 1 < m; ++k) {
        Matrix<LaurentU> P = S.block_or_zero(k, k);
        Matrix<LaurentU> Pinv;
        try {
            Pinv = invert_series_matrix(P);
        } catch (const NonInvertible&) {
            throw SingularPrincipalMinor(k, "factor_odd: principal block " + std::to_string(k) +
                                                " not invertible within truncation");
        }
        for (int j = k + 1; j < m; ++j) {
            if (!S.has_block(k, j)) continue;
            Matrix<LaurentU> M = Pinv * S.block_or_zero(k, j);
            // column op: C_j <- C_j - C_k M, recorded in L
            for (int i = 0; i < m; ++i) {
                if (!S.has_block(i, k)) continue;
                S.set_block(i, j, S.block_or_zero(i, j) - S.block_or_zero(i, k) * M);
            }
            for (int i = 0; i < m; ++i) {
                if (!L.has_block(i, k)) continue;
                L.set_block(i, j, L.block_or_zero(i, j) - L.block_or_zero(i, k) * M);
            }
        }
    }
    try {
        (void)invert_series_matrix(S.block_or_zero(m - 1, m - 1));
    } catch (const NonInvertible&) {
        throw SingularPrincipalMinor(m - 1, "factor_odd: last principal block not invertible");
    }
    // the elimination zeroes the upper blocks exactly; drop rounding residue
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            S.set_block(i, j, Matrix<LaurentU>(S.size(i), S.size(j), LaurentU::zero(S.order())));
    // S = T * L, so T = S L^{-1} with L upper-unitriangular
    return {S, L};
}

enum class CocycleSide { upper, lower, odd_arc };

struct CocycleViolation {
    int i, j;
    long n;
    double threshold;
};

struct CocycleValidation {
    std::vector<CocycleViolation> violations;
    bool admissible() const { return violations.empty(); }
};

// Per-monomial admissibility of a cocycle's blocks: every u^n present in
// block (i, j) (deviation from the identity on the diagonal) must clear the
// threshold of the exponent pair -- strictly above on the upper side, at or
// above the vertical-arc bound on odd arcs, at or below on the lower side.
inline CocycleValidation validate_cocycle(const BlockCocycle& tau, CocycleSide side) {
    CocycleValidation rep;
    int m = tau.block_count();
    const double eps = 1e-9;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if (!tau.has_block(i, j) && i != j) continue;
            Matrix<LaurentU> blk = tau.block_or_zero(i, j);
            if (i == j) {
                for (int a = 0; a < blk.rows(); ++a) blk(a, a) = blk(a, a) - LaurentU::one(blk(a, a).order());
            }
            const Exponent& ei = tau.exponents()[static_cast<std::size_t>(i)];
            const Exponent& ej = tau.exponents()[static_cast<std::size_t>(j)];
            double A = 0.0;
            bool wrong_order = false;
            if (!(i == j || approx_equal(ei, ej))) {
                Parity par = (side == CocycleSide::odd_arc) ? Parity::odd : Parity::even;
                int L = std::lcm(ei.ramification(), ej.ramification());
                if (par == Parity::even &&
                    detail::ordering_key(ei.lifted(L), Parity::even) <
                        detail::ordering_key(ej.lifted(L), Parity::even)) {
                    // block below the diagonal of the even ordering: no
                    // u-power is admissible on either side of the overlap
                    wrong_order = true;
                } else {
                    A = split_threshold(ei, ej, par);
                }
            }
            for (int a = 0; a < blk.rows(); ++a)
                for (int b = 0; b < blk.cols(); ++b) {
                    const LaurentU& h = blk(a, b);
                    if (h.is_zero()) continue;
                    for (long n = h.valuation(); n <= h.top_index(); ++n) {
                        if (std::abs(h.coeff(n)) <= 1e-12) continue;
                        bool ok = !wrong_order;
                        if (ok) switch (side) {
                                case CocycleSide::upper: ok = static_cast<double>(n) > A + eps; break;
                                case CocycleSide::lower: ok = static_cast<double>(n) <= A + eps; break;
                                case CocycleSide::odd_arc: ok = static_cast<double>(n) >= A - eps; break;
                            }
                        if (!ok) rep.violations.push_back({i, j, n, A});
                    }
                }
        }
    return rep;
}

} // namespace wildstokes
