#pragma once

#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wildstokes/errors.hpp"
#include "wildstokes/exponents.hpp"
#include "wildstokes/matrix.hpp"
#include "wildstokes/puiseux.hpp"

namespace wildstokes {

// One summand E^a (x) R_G of a graded model: exponent a and the constant
// matrix G of the regular factor (1+s^{-1})^G.
struct GradedBlock {
    Exponent exponent;
    Eigen::MatrixXcd G;

    int size() const { return static_cast<int>(G.rows()); }
};

struct GradedModule {
    std::vector<GradedBlock> blocks;

    int rank() const {
        int r = 0;
        for (const auto& b : blocks) r += b.size();
        return r;
    }
    // Mild: no s*log(s) term in any exponent.
    bool is_mild() const {
        for (const auto& b : blocks)
            if (b.exponent.q() != 0) return false;
        return true;
    }
    bool is_wild() const { return !is_mild(); }
};

// Rank-r system: the action sends a coefficient vector f(s) to A(s) f(s+1).
class DifferenceModule {
public:
    DifferenceModule(Matrix<PuiseuxSeries> A, std::optional<std::vector<GradedBlock>> blocks = {})
        : A_(std::move(A)), blocks_(std::move(blocks)) {
        if (A_.rows() != A_.cols()) throw PreconditionError("difference module: square matrix required");
        p_ = 1;
        for (int i = 0; i < A_.rows(); ++i)
            for (int j = 0; j < A_.cols(); ++j) p_ = std::lcm(p_, A_(i, j).ramification());
        verify_invertible();
    }

    int rank() const { return A_.rows(); }
    int ramification() const { return p_; }
    const Matrix<PuiseuxSeries>& matrix() const { return A_; }
    const std::optional<std::vector<GradedBlock>>& blocks() const { return blocks_; }

    DifferenceModule lifted(int target_p) const {
        DifferenceModule m = *this;
        m.A_ = map_matrix(A_, [&](const PuiseuxSeries& f) { return f.lifted(target_p); });
        m.p_ = target_p;
        return m;
    }

    Eigen::MatrixXcd eval(Complex s0, double arg_s0) const {
        Eigen::MatrixXcd m(rank(), rank());
        for (int i = 0; i < rank(); ++i)
            for (int j = 0; j < rank(); ++j) m(i, j) = A_(i, j).eval(s0, arg_s0).value;
        return m;
    }

private:
    void verify_invertible() const {
        // nonzero leading minor within truncation
        try {
            (void)invert_series_matrix(A_);
        } catch (const NonInvertible&) {
            throw NonInvertible("difference module matrix is singular within truncation");
        }
    }

    Matrix<PuiseuxSeries> A_;
    std::optional<std::vector<GradedBlock>> blocks_;
    int p_;
};

// exp_cocycle(a) * (1+s^{-1})^G, the elementary module of a graded block.
// `order` counts in the block's own s^{-1/p} index units.
inline DifferenceModule mk_elementary(const GradedBlock& b, long order) {
    int p = b.exponent.ramification();
    PuiseuxSeries scalar = exp_cocycle(b.exponent, order);
    long base_order = (order + std::abs(b.exponent.q())) / p + 2;
    PuiseuxSeries base = PuiseuxSeries(1, 0, {{1.0, 0.0}, {1.0, 0.0}}, base_order);
    Matrix<PuiseuxSeries> reg = matrix_power(b.G, base);
    Matrix<PuiseuxSeries> A(b.size(), b.size(), scalar.zero_like());
    for (int i = 0; i < b.size(); ++i)
        for (int j = 0; j < b.size(); ++j) A(i, j) = (scalar * reg(i, j).lifted(p)).truncated(order);
    return DifferenceModule(std::move(A), std::vector<GradedBlock>{b});
}

// Block-diagonal module of a graded model; `order` counts in the lcm
// ramification's index units.
inline DifferenceModule from_graded(const GradedModule& g, long order) {
    if (g.blocks.empty()) throw PreconditionError("from_graded: empty graded module");
    int p = 1;
    for (const auto& b : g.blocks) p = std::lcm(p, b.exponent.ramification());
    int r = g.rank();
    Matrix<PuiseuxSeries> A(r, r, PuiseuxSeries::zero(p, order));
    int at = 0;
    for (const auto& b : g.blocks) {
        long ob = (order * b.exponent.ramification()) / p;
        auto elem = mk_elementary(b, ob);
        for (int i = 0; i < b.size(); ++i)
            for (int j = 0; j < b.size(); ++j)
                A(at + i, at + j) = elem.matrix()(i, j).lifted(p).truncated(order);
        at += b.size();
    }
    return DifferenceModule(std::move(A), g.blocks);
}

namespace detail {

inline std::pair<Matrix<PuiseuxSeries>, Matrix<PuiseuxSeries>> common_p(const DifferenceModule& a,
                                                                        const DifferenceModule& b) {
    int L = std::lcm(a.ramification(), b.ramification());
    return {map_matrix(a.matrix(), [&](const PuiseuxSeries& f) { return f.lifted(L); }),
            map_matrix(b.matrix(), [&](const PuiseuxSeries& f) { return f.lifted(L); })};
}

inline std::optional<std::vector<GradedBlock>> merged_blocks(const DifferenceModule& a,
                                                             const DifferenceModule& b) {
    if (!a.blocks() || !b.blocks()) return std::nullopt;
    std::vector<GradedBlock> out = *a.blocks();
    out.insert(out.end(), b.blocks()->begin(), b.blocks()->end());
    return out;
}

} // namespace detail

inline DifferenceModule direct_sum(const DifferenceModule& m1, const DifferenceModule& m2) {
    auto [a, b] = detail::common_p(m1, m2);
    int r1 = a.rows(), r2 = b.rows();
    Matrix<PuiseuxSeries> m(r1 + r2, r1 + r2, a(0, 0).zero_like());
    for (int i = 0; i < r1; ++i)
        for (int j = 0; j < r1; ++j) m(i, j) = a(i, j);
    for (int i = 0; i < r2; ++i)
        for (int j = 0; j < r2; ++j) m(r1 + i, r1 + j) = b(i, j);
    return DifferenceModule(std::move(m), detail::merged_blocks(m1, m2));
}

inline DifferenceModule tensor(const DifferenceModule& m1, const DifferenceModule& m2) {
    auto [a, b] = detail::common_p(m1, m2);
    return DifferenceModule(kronecker(a, b));
}

// Internal Hom(M1, M2): sections are r2 x r1 matrices X(s) flattened
// column-major; the action is X -> A2(s) X(s+1) A1(s)^{-1}, with matrix
// kron(A1^{-T}, A2).
inline DifferenceModule hom(const DifferenceModule& m1, const DifferenceModule& m2) {
    auto [a, b] = detail::common_p(m1, m2);
    auto ainv = invert_series_matrix(a);
    Matrix<PuiseuxSeries> ainv_t(ainv.cols(), ainv.rows());
    for (int i = 0; i < ainv.rows(); ++i)
        for (int j = 0; j < ainv.cols(); ++j) ainv_t(j, i) = ainv(i, j);
    return DifferenceModule(kronecker(ainv_t, b));
}

inline DifferenceModule trivial_module(long order = kExactOrder) {
    return DifferenceModule(Matrix<PuiseuxSeries>(1, 1, PuiseuxSeries::one(1, order)));
}

inline DifferenceModule dual(const DifferenceModule& m) {
    long ord = kInfValuation;
    for (int i = 0; i < m.rank(); ++i)
        for (int j = 0; j < m.rank(); ++j) ord = std::min(ord, m.matrix()(i, j).order());
    return hom(m, trivial_module(ord));
}

// Classification data of a rank-1 unramified module g = alpha s^{-m}(1 + ...):
// exponent a = q s log s + c s and regular part gamma with
// g = exp(a(s+1)-a(s)) (1+s^{-1})^gamma (1 + O(s^{-2})).
struct Rank1Class {
    Exponent exponent;
    Complex gamma;
};

inline Rank1Class rank1_classify(const PuiseuxSeries& g, int branch = 0) {
    if (g.is_zero()) throw ZeroInput("rank1_classify: zero series");
    if (g.ramification() != 1) throw RamifiedInput("rank1_classify: ramified input unsupported");
    long m = g.valuation();
    Complex alpha = g.leading_coeff();
    Complex g1 = g.coeff(m + 1) / alpha;
    long q = -m;
    Complex c = std::log(alpha) + Complex(0.0, 2.0 * M_PI * branch) - static_cast<double>(q);
    Complex gamma = g1 - static_cast<double>(q) / 2.0;
    return {Exponent::slog(q, c), gamma};
}

// Gauge completion: f with f(s+1)/f(s) = unit, f(infinity) = 1, for a unit
// with constant term 1 whose s^{-1}-scale slots vanish (those belong to the
// regular exponent gamma).
inline PuiseuxSeries coboundary_complete(const PuiseuxSeries& unit, long order) {
    int p = unit.ramification();
    if (unit.is_zero() || unit.valuation() != 0 || unit.coeff(0) != Complex(1.0, 0.0))
        throw PreconditionError("coboundary_complete: unit must have constant term 1");
    PuiseuxSeries target = log(unit.truncated(order + p));
    for (long n = 1; n <= std::min<long>(p, target.order()); ++n)
        if (std::abs(target.coeff(n)) > 1e-12)
            throw Obstructed("coboundary_complete: nonzero coefficient at or below the s^{-1} slot");
    // Delta(F_k x^k) = F_k x^k ((1+1/s)^{-k/p} - 1) has leading term
    // -(k/p) F_k x^{k+p}; solve the triangular system top down.
    PuiseuxSeries F = PuiseuxSeries::zero(p, order);
    PuiseuxSeries rem = target; // target - Delta(F)
    for (long k = 1; k + p <= std::min(order + p, rem.order()); ++k) {
        Complex t = rem.coeff(k + p);
        if (t == Complex(0.0, 0.0)) continue;
        Complex fk = -t * static_cast<double>(p) / static_cast<double>(k);
        PuiseuxSeries mono = PuiseuxSeries::monomial(fk, p, k, rem.order());
        F += mono;
        rem -= shift(mono) - mono;
    }
    return exp(F.truncated(order));
}

} // namespace wildstokes
