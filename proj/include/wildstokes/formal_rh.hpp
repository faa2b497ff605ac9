#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "wildstokes/diffmod.hpp"
#include "wildstokes/errors.hpp"
#include "wildstokes/matrix.hpp"
#include "wildstokes/puiseux.hpp"

namespace wildstokes {

// Conjugation B(s) F(s+1) = F(s) A(s+1) between a module A and its graded
// model B, with F sought as s^{-m/p} (F_0 + F_1 s^{-1/p} + ...), F_0 = id.
struct ConjugationProblem {
    DifferenceModule A;
    DifferenceModule B;
    long lead_power = 0; // m
    long order = 32;     // residual valuation target N, in s^{-1/p} units
};

namespace detail {

// Dense solve for one (sub)problem.  The equation is linear in the
// coefficients F_k; the unknown F_k first enters at series index
// v0 + k (v0 = m + min valuation of A, B), so imposing the coefficient
// equations at indices v0 .. N closes the system.  The full block-triangular
// system is solved at once by rank-revealing least squares: the per-order
// leading operator B_lead X - X A_lead annihilates directions whenever the
// graded leading terms coincide, and those directions are only pinned one or
// more orders later, so a strictly order-local solve has no pivot to use.
inline Matrix<PuiseuxSeries> solve_conjugation_dense(const Matrix<PuiseuxSeries>& Amat,
                                                     const Matrix<PuiseuxSeries>& Bmat, long m,
                                                     long N_target) {
    const int r = Amat.rows();
    const int L = Amat(0, 0).ramification();
    double scale = std::max({1.0, max_abs_coeff(Amat), max_abs_coeff(Bmat)});
    double noise = 1e-13 * scale;
    long vmin = std::min(min_valuation(Amat, noise), min_valuation(Bmat, noise));
    // A coefficient annihilated by the leading operator is pinned only ~L
    // levels later (the shift correction enters one full s^{-1} step down),
    // so overshoot the target when the input orders allow it.
    long avail = kInfValuation;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
            avail = std::min({avail, Amat(i, j).order(), Bmat(i, j).order()});
    long N = std::min(N_target + L + 2, avail - std::max(0L, -m));
    if (N < N_target)
        throw TruncationBoundary("solve_conjugation: input series order below target");
    long v0 = m + vmin;
    long K = N - v0; // unknowns F_0..F_K, equations at indices v0..N
    if (K < 0) throw PreconditionError("solve_conjugation: order too small for the lead power");

    Matrix<PuiseuxSeries> Ashift = map_matrix(Amat, [&](const PuiseuxSeries& f) {
        return shift(f.truncated(N + std::abs(m) + 1));
    });
    auto coeff_rows = static_cast<long>(K + 1) * r * r;

    // E(X x^{m+k})_{ij} = delta_{jb} B_{ia} sigma_{m+k} - delta_{ia} x^{m+k} A'_{bj}
    // for X = E_{ab}; columns are assembled from these two scalar families.
    std::vector<Matrix<PuiseuxSeries>> bsig(static_cast<std::size_t>(K + 1));
    std::vector<Matrix<PuiseuxSeries>> xash(static_cast<std::size_t>(K + 1));
    for (long k = 0; k <= K; ++k) {
        PuiseuxSeries mono = PuiseuxSeries::monomial({1.0, 0.0}, L, m + k, N + std::abs(m) + 1);
        PuiseuxSeries sig = shift(mono);
        bsig[static_cast<std::size_t>(k)] =
            map_matrix(Bmat, [&](const PuiseuxSeries& f) { return (f * sig).truncated(N); });
        xash[static_cast<std::size_t>(k)] =
            map_matrix(Ashift, [&](const PuiseuxSeries& f) { return (mono * f).truncated(N); });
    }

    auto column = [&](long k, int a, int b, Eigen::VectorXcd& col) {
        col.setZero(coeff_rows);
        const auto& bs = bsig[static_cast<std::size_t>(k)];
        const auto& xa = xash[static_cast<std::size_t>(k)];
        for (long J = 0; J <= K; ++J) {
            long idx = v0 + J;
            for (int i = 0; i < r; ++i) {
                // (i, b) entry picks up B_{ia} sigma_k
                col[(J * r + i) * r + b] += bs(i, a).coeff(idx);
            }
            for (int j = 0; j < r; ++j) {
                // (a, j) entry picks up -x^{m+k} A'_{bj}
                col[(J * r + a) * r + j] -= xa(b, j).coeff(idx);
            }
        }
    };

    // Right-hand side: -E(I x^m), and the level-0 consistency check for F0 = I.
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(coeff_rows);
    Eigen::VectorXcd col(coeff_rows);
    for (int a = 0; a < r; ++a) {
        column(0, a, a, col);
        rhs -= col;
    }
    double lvl0 = 0.0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) lvl0 = std::max(lvl0, std::abs(rhs[(0 * r + i) * r + j]));
    if (lvl0 > 1e-8 * scale)
        throw NormalizationFailed("solve_conjugation: F0 = id inconsistent at order 0");

    Matrix<PuiseuxSeries> F(r, r, PuiseuxSeries::zero(L, m + K));
    for (int i = 0; i < r; ++i) F(i, i) = PuiseuxSeries::monomial({1.0, 0.0}, L, m, m + K);
    if (K == 0) return F;

    Eigen::MatrixXcd M(coeff_rows, static_cast<long>(K) * r * r);
    for (long k = 1; k <= K; ++k)
        for (int a = 0; a < r; ++a)
            for (int b = 0; b < r; ++b) {
                column(k, a, b, col);
                M.col(((k - 1) * r + a) * r + b) = col;
            }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(M);
    Eigen::VectorXcd z = cod.solve(rhs);
    z += cod.solve(rhs - M * z); // one refinement step against triangular growth
    Eigen::VectorXcd res = M * z - rhs;
    for (long J = 0; J <= N_target - v0; ++J) {
        double lvl = 0.0;
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) lvl = std::max(lvl, std::abs(res[(J * r + i) * r + j]));
        if (lvl > 1e-6 * scale)
            throw ResonantOrder(J, "solve_conjugation: order-" + std::to_string(J) +
                                       " equation unsolvable (resonance or inequivalent modules)");
    }

    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            std::vector<Complex> coeffs(static_cast<std::size_t>(K + 1), Complex(0.0, 0.0));
            coeffs[0] = (i == j) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
            for (long k = 1; k <= K; ++k) coeffs[static_cast<std::size_t>(k)] = z[((k - 1) * r + i) * r + j];
            F(i, j) = PuiseuxSeries(L, m, std::move(coeffs), m + K);
        }
    return F;
}

struct BlockRange {
    int offset;
    int size;
    Exponent exponent;
};

inline std::vector<BlockRange> block_ranges(const std::vector<GradedBlock>& blocks) {
    std::vector<BlockRange> out;
    int at = 0;
    for (const auto& b : blocks) {
        out.push_back({at, b.size(), b.exponent});
        at += b.size();
    }
    return out;
}

} // namespace detail

// Solves B(s) F(s+1) = F(s) A(s+1).  When both modules carry graded block
// metadata, blocks are matched by exponent and the off-diagonal blocks of F
// between distinct exponents are identically zero.
inline Matrix<PuiseuxSeries> solve_conjugation(const ConjugationProblem& prob) {
    int L = std::lcm(prob.A.ramification(), prob.B.ramification());
    DifferenceModule A = prob.A.lifted(L), B = prob.B.lifted(L);
    if (A.rank() != B.rank()) throw PreconditionError("solve_conjugation: rank mismatch");

    if (A.blocks() && B.blocks()) {
        auto ra = detail::block_ranges(*A.blocks());
        auto rb = detail::block_ranges(*B.blocks());
        // group the A-blocks by exponent and match against B-blocks
        std::vector<int> a_used(ra.size(), 0), b_used(rb.size(), 0);
        Matrix<PuiseuxSeries> F(A.rank(), A.rank(), PuiseuxSeries::zero(L, prob.order));
        for (std::size_t i = 0; i < ra.size(); ++i) {
            if (a_used[i]) continue;
            std::vector<int> aidx, bidx;
            for (std::size_t k = i; k < ra.size(); ++k)
                if (!a_used[k] && approx_equal(ra[k].exponent, ra[i].exponent)) {
                    a_used[k] = 1;
                    for (int t = 0; t < ra[k].size; ++t) aidx.push_back(ra[k].offset + t);
                }
            for (std::size_t k = 0; k < rb.size(); ++k)
                if (!b_used[k] && approx_equal(rb[k].exponent, ra[i].exponent)) {
                    b_used[k] = 1;
                    for (int t = 0; t < rb[k].size; ++t) bidx.push_back(rb[k].offset + t);
                }
            if (aidx.size() != bidx.size())
                throw PreconditionError("solve_conjugation: graded models have mismatched exponents");
            int n = static_cast<int>(aidx.size());
            Matrix<PuiseuxSeries> Asub(n, n), Bsub(n, n);
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y) {
                    Asub(x, y) = A.matrix()(aidx[static_cast<std::size_t>(x)], aidx[static_cast<std::size_t>(y)]);
                    Bsub(x, y) = B.matrix()(bidx[static_cast<std::size_t>(x)], bidx[static_cast<std::size_t>(y)]);
                }
            auto Fsub = detail::solve_conjugation_dense(Asub, Bsub, prob.lead_power, prob.order);
            for (int x = 0; x < n; ++x)
                for (int y = 0; y < n; ++y)
                    F(bidx[static_cast<std::size_t>(x)], aidx[static_cast<std::size_t>(y)]) = Fsub(x, y);
        }
        for (int k = 0; k < static_cast<int>(rb.size()); ++k)
            if (!b_used[static_cast<std::size_t>(k)])
                throw PreconditionError("solve_conjugation: graded models have mismatched exponents");
        return F;
    }
    return detail::solve_conjugation_dense(A.matrix(), B.matrix(), prob.lead_power, prob.order);
}

// Valuation of B shift(F) - F shift(A), min over entries; kInfValuation when
// the residual vanishes within truncation.
inline long residual_valuation(const Matrix<PuiseuxSeries>& F, const DifferenceModule& A,
                               const DifferenceModule& B, double tol = 1e-9) {
    int L = std::lcm(A.ramification(), B.ramification());
    for (int i = 0; i < F.rows(); ++i)
        for (int j = 0; j < F.cols(); ++j) L = std::lcm(L, F(i, j).ramification());
    auto lift = [&](const Matrix<PuiseuxSeries>& M) {
        return map_matrix(M, [&](const PuiseuxSeries& f) { return f.lifted(L); });
    };
    auto Fl = lift(F);
    auto Al = lift(A.lifted(L).matrix());
    auto Bl = lift(B.lifted(L).matrix());
    auto Fs = map_matrix(Fl, [](const PuiseuxSeries& f) { return shift(f); });
    auto As = map_matrix(Al, [](const PuiseuxSeries& f) { return shift(f); });
    auto R = Bl * Fs - Fl * As;
    double scale = std::max(1.0, max_abs_coeff(Fl) * std::max(max_abs_coeff(Al), max_abs_coeff(Bl)));
    return min_valuation(R, tol * scale);
}

// Quadrant Q(v, k) = { v + r e^{i t} : k pi/2 < t < (k+1) pi/2 }.
struct Quadrant {
    Complex v;
    int k = 0;

    bool contains(Complex s) const {
        Complex w = s - v;
        if (w == Complex(0.0, 0.0)) return false;
        double lo = k * M_PI / 2.0, hi = (k + 1) * M_PI / 2.0;
        double a = std::arg(w);
        while (a < lo) a += 2.0 * M_PI;
        while (a - 2.0 * M_PI >= lo) a -= 2.0 * M_PI;
        return a > lo && a < hi;
    }

    // arg(s) adjusted to vary continuously over the quadrant
    double branch_arg(Complex s) const {
        double a = std::arg(s);
        double mid = (k + 0.5) * M_PI / 2.0;
        while (a < mid - M_PI) a += 2.0 * M_PI;
        while (a > mid + M_PI) a -= 2.0 * M_PI;
        return a;
    }
};

struct LiftCheckReport {
    double max_equation_residual = 0.0; // max || F(s+1) - B(s)^{-1} F(s) A(s+1) ||
    double max_bound_constant = 0.0;    // max || F(s) - Fhat^{[N]}(s) || * |s|^{N/p}
};

// Residual verification of a sampled candidate lift against the functional
// equation and the quadrant-theorem accuracy bound.
inline LiftCheckReport numeric_lift_check(const std::function<Eigen::MatrixXcd(Complex)>& F,
                                          const std::vector<Complex>& grid, const Quadrant& quadrant,
                                          const DifferenceModule& A, const DifferenceModule& B,
                                          long N, const Matrix<PuiseuxSeries>& Fhat) {
    LiftCheckReport rep;
    int L = std::lcm(A.ramification(), B.ramification());
    for (Complex s : grid) {
        if (!quadrant.contains(s) || std::abs(s) < 10.0)
            throw GridOutsideQuadrant("numeric_lift_check: grid point outside Q(v,k) or |s| < 10");
        double th = quadrant.branch_arg(s);
        double th1 = quadrant.branch_arg(s + 1.0);
        Eigen::MatrixXcd lhs = F(s + 1.0);
        Eigen::MatrixXcd Bs = B.eval(s, th);
        Eigen::MatrixXcd As1 = A.eval(s + 1.0, th1);
        Eigen::MatrixXcd rhsM = Bs.partialPivLu().solve(F(s) * As1);
        rep.max_equation_residual = std::max(rep.max_equation_residual, (lhs - rhsM).cwiseAbs().maxCoeff());

        Eigen::MatrixXcd Fh(Fhat.rows(), Fhat.cols());
        for (int i = 0; i < Fhat.rows(); ++i)
            for (int j = 0; j < Fhat.cols(); ++j) Fh(i, j) = Fhat(i, j).truncated(N).eval(s, th).value;
        double bound = (F(s) - Fh).cwiseAbs().maxCoeff() *
                       std::pow(std::abs(s), static_cast<double>(N) / L);
        rep.max_bound_constant = std::max(rep.max_bound_constant, bound);
    }
    return rep;
}

} // namespace wildstokes
