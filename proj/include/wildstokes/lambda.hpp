#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wildstokes/diffmod.hpp"
#include "wildstokes/errors.hpp"
#include "wildstokes/exponents.hpp"

namespace wildstokes {

using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;

namespace detail {

// Scaling-and-squaring matrix exponential; the matrices here are tiny.
inline MatrixXcd expm(const MatrixXcd& A) {
    int n = static_cast<int>(A.rows());
    double norm = A.cwiseAbs().sum();
    int squarings = 0;
    MatrixXcd B = A;
    while (norm > 0.5) {
        B /= 2.0;
        norm /= 2.0;
        ++squarings;
    }
    MatrixXcd result = MatrixXcd::Identity(n, n);
    MatrixXcd term = MatrixXcd::Identity(n, n);
    for (int k = 1; k <= 24; ++k) {
        term = term * B / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18) break;
    }
    for (int k = 0; k < squarings; ++k) result = result * result;
    return result;
}

} // namespace detail

// Numeric module: an evaluator for A(s) plus the graded block behind the
// fundamental solution Y(s) = exp(-a(s)) s^{-G}.
struct NumericModule {
    int rank = 1;
    std::function<MatrixXcd(Complex)> evalA;
    GradedBlock block;

    // Exact evaluator of an elementary block:
    // A(s) = exp(a(s+1) - a(s)) (1 + 1/s)^G.
    static NumericModule from_block(const GradedBlock& b) {
        NumericModule m;
        m.rank = b.size();
        m.block = b;
        m.evalA = [b](Complex s) {
            Complex da = b.exponent.eval(s + 1.0, std::arg(s + 1.0)) -
                         b.exponent.eval(s, std::arg(s));
            MatrixXcd reg = detail::expm(b.G * std::log(1.0 + 1.0 / s));
            return (std::exp(da) * reg).eval();
        };
        return m;
    }

    static NumericModule from_series(const DifferenceModule& mod, const GradedBlock& b) {
        NumericModule m;
        m.rank = mod.rank();
        m.block = b;
        m.evalA = [mod](Complex s) { return mod.eval(s, std::arg(s)); };
        return m;
    }
};

inline MatrixXcd fundamental_solution(const GradedBlock& b, Complex s, double arg_s) {
    Complex logs(std::log(std::abs(s)), arg_s);
    return std::exp(-b.exponent.eval(s, arg_s)) * detail::expm(-b.G * logs);
}

inline MatrixXcd fundamental_solution_inv(const GradedBlock& b, Complex s, double arg_s) {
    Complex logs(std::log(std::abs(s)), arg_s);
    return std::exp(b.exponent.eval(s, arg_s)) * detail::expm(b.G * logs);
}

// Piecewise-linear integration path: anchor -> s + 1/2, then straight up.
// Path points must keep their distance to the pole lattice s + Z.
struct Path {
    Complex anchor;
    double initial_height = 8.0;
    int max_doublings = 14;
    double min_pole_distance = 0.25;
    int panel_points = 16;
};

struct LambdaReport {
    VectorXcd value;
    double residual = std::numeric_limits<double>::quiet_NaN(); // |psi Lambda - Lambda - f| at s0
    double est_error = 0.0;
    long terms = 0;   // series terms or quadrature panels
    long u_twist = 0; // integral mode: the applied power of u
};

namespace detail {

inline VectorXcd lambda_series_value(const NumericModule& M,
                                     const std::function<VectorXcd(Complex)>& f, Complex s0,
                                     double tol, long max_terms, long* used) {
    VectorXcd acc = -f(s0);
    MatrixXcd prod = MatrixXcd::Identity(M.rank, M.rank);
    double prev_norm = std::numeric_limits<double>::infinity();
    int non_decreasing = 0;
    long n = 0;
    for (; n < max_terms; ++n) {
        prod = prod * M.evalA(s0 + static_cast<double>(n));
        VectorXcd term = prod * f(s0 + static_cast<double>(n + 1));
        acc -= term;
        double tn = term.cwiseAbs().maxCoeff();
        if (tn >= prev_norm) {
            if (++non_decreasing >= 50)
                throw Divergent("lambda_series: terms non-decreasing for 50 consecutive steps");
        } else {
            non_decreasing = 0;
        }
        prev_norm = tn;
        if (tn < tol * 0.01 * std::max(1.0, acc.cwiseAbs().maxCoeff())) break;
    }
    if (n >= max_terms) throw MaxTermsExceeded("lambda_series: term budget exhausted");
    if (used) *used = n + 1;
    return acc;
}

} // namespace detail

// Telescoping-series solution operator for psi Lambda - Lambda = f:
// Lambda = -f(s) - sum_n A(s)...A(s+n) f(s+n+1).  Requires decaying partial
// products (the q > 0 regime, or a contractive A).
inline LambdaReport lambda_series(const NumericModule& M, const std::function<VectorXcd(Complex)>& f,
                                  Complex s0, double tol = 1e-10, long max_terms = 100000) {
    LambdaReport rep;
    rep.value = detail::lambda_series_value(M, f, s0, tol, max_terms, &rep.terms);
    VectorXcd at_next = detail::lambda_series_value(M, f, s0 + 1.0, tol, max_terms, nullptr);
    rep.residual = (M.evalA(s0) * at_next - rep.value - f(s0)).cwiseAbs().maxCoeff();
    rep.est_error = tol;
    return rep;
}

namespace detail {

struct GaussRule {
    std::vector<double> x, w; // nodes and weights on [-1, 1]
};

inline GaussRule gauss_legendre(int n) {
    GaussRule r;
    r.x.resize(static_cast<std::size_t>(n));
    r.w.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev initial guess
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            double dp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
        }
        double dp = n * (x * p0 - p1) / (x * x - 1.0);
        r.x[static_cast<std::size_t>(i)] = x;
        r.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

// Adaptive composite Gauss-Legendre on a straight segment, vector-valued.
// Panels split while the 16- and 8-point values disagree beyond their share
// of the tolerance.
struct SegmentQuadrature {
    const GaussRule& g16;
    const GaussRule& g8;
    double tol;
    long panels = 0;

    VectorXcd integrate(const std::function<VectorXcd(Complex)>& f, Complex a, Complex b, int depth) {
        Complex mid = 0.5 * (a + b);
        Complex half = 0.5 * (b - a);
        VectorXcd v16, v8;
        for (std::size_t i = 0; i < g16.x.size(); ++i) {
            VectorXcd fv = f(mid + half * g16.x[i]);
            if (i == 0) v16 = VectorXcd::Zero(fv.size());
            v16 += g16.w[i] * fv;
        }
        for (std::size_t i = 0; i < g8.x.size(); ++i) {
            VectorXcd fv = f(mid + half * g8.x[i]);
            if (i == 0) v8 = VectorXcd::Zero(fv.size());
            v8 += g8.w[i] * fv;
        }
        v16 *= half;
        v8 *= half;
        ++panels;
        double disagree = (v16 - v8).cwiseAbs().maxCoeff();
        if (disagree <= tol * 0.25 || depth >= 28) {
            if (depth >= 28 && disagree > tol)
                throw QuadratureFailure("quadrature: panel recursion exhausted");
            return v16;
        }
        return integrate(f, a, mid, depth + 1) + integrate(f, mid, b, depth + 1);
    }
};

inline void check_pole_distance(Complex from, Complex to, Complex s0, double min_dist,
                                const char* what) {
    for (int t = 0; t <= 256; ++t) {
        Complex z = from + (to - from) * (static_cast<double>(t) / 256.0);
        Complex w = z - s0;
        double d = std::hypot(w.real() - std::nearbyint(w.real()), w.imag());
        if (d < min_dist)
            throw KernelPoleProximity(std::string(what) + ": path within " +
                                      std::to_string(min_dist) + " of the pole lattice s + Z");
    }
}

} // namespace detail

// Contour-integral solution operator (the q < 0 regime):
//   Lambda(f)(s) = -f(s) + Y(s) Int_C(s) Y(z)^{-1} f(z) / (1 - e^{2 pi i (s - z)}) dz
// along the segment anchor -> s + 1/2 followed by the vertical ray.  When
// Y^{-1} f does not yet decay along the ray it is pre-twisted by the smallest
// power u^n that makes it decay (u_twist may also be fixed by the caller).
inline LambdaReport lambda_integral(const NumericModule& M,
                                    const std::function<VectorXcd(Complex)>& f, Complex s0,
                                    const Path& path, double tol = 1e-8,
                                    std::optional<long> u_twist = std::nullopt) {
    auto Yinv_f = [&](Complex z) -> VectorXcd {
        return fundamental_solution_inv(M.block, z, std::arg(z)) * f(z);
    };
    auto u_pow = [](Complex z, long n) {
        return std::exp(Complex(0.0, 2.0 * M_PI * static_cast<double>(n)) * z);
    };

    long twist = 0;
    if (u_twist) {
        twist = *u_twist;
    } else {
        // empirical ray-decay probe at increasing heights
        Complex probe = s0 + 0.5;
        for (twist = 0; twist <= 8; ++twist) {
            double n0 = (u_pow(probe + Complex(0, 4), twist) * Yinv_f(probe + Complex(0, 4))).cwiseAbs().maxCoeff();
            double n1 = (u_pow(probe + Complex(0, 8), twist) * Yinv_f(probe + Complex(0, 8))).cwiseAbs().maxCoeff();
            double n2 = (u_pow(probe + Complex(0, 16), twist) * Yinv_f(probe + Complex(0, 16))).cwiseAbs().maxCoeff();
            if (n1 < 0.5 * n0 && n2 < 0.5 * n1) break;
        }
        if (twist > 8)
            throw PreconditionError("lambda_integral: Y^{-1} f does not decay along the ray for any twist <= 8");
    }

    long total_panels = 0;
    auto value_at = [&](Complex s) -> VectorXcd {
        Complex target = s + 0.5;
        detail::check_pole_distance(path.anchor, target, s, path.min_pole_distance, "lambda_integral");

        auto integrand = [&](Complex z) -> VectorXcd {
            Complex kernel = 1.0 / (1.0 - std::exp(Complex(0.0, 2.0 * M_PI) * (s - z)));
            return (u_pow(z, twist) * kernel) * Yinv_f(z);
        };

        static const detail::GaussRule g16 = detail::gauss_legendre(16);
        static const detail::GaussRule g8 = detail::gauss_legendre(8);
        detail::SegmentQuadrature quad{g16, g8, tol};

        VectorXcd total = quad.integrate(integrand, path.anchor, target, 0);
        // vertical ray, doubling the height until the tip is negligible
        double T = path.initial_height;
        int doublings = 0;
        while (integrand(target + Complex(0.0, T)).cwiseAbs().maxCoeff() * (1.0 + T) > tol / 8.0) {
            if (++doublings > path.max_doublings)
                throw RayTruncationTooLow("lambda_integral: integrand tail above tolerance at the ray cap");
            T *= 2.0;
        }
        double lo = 0.0, step = std::max(2.0, path.initial_height / 2.0);
        while (lo < T) {
            double hi = std::min(T, lo + step);
            total += quad.integrate(integrand, target + Complex(0.0, lo), target + Complex(0.0, hi), 0);
            lo = hi;
            step *= 2.0;
        }

        MatrixXcd Y = fundamental_solution(M.block, s, std::arg(s));
        VectorXcd twisted = -u_pow(s, twist) * f(s) + Y * total;
        total_panels += quad.panels;
        // undo the twist: Lambda(f) = u^{-n} Lambda(u^n f)
        return u_pow(s, -twist) * twisted;
    };

    LambdaReport rep;
    rep.u_twist = twist;
    rep.value = value_at(s0);
    VectorXcd next = value_at(s0 + 1.0);
    rep.residual = (M.evalA(s0) * next - rep.value - f(s0)).cwiseAbs().maxCoeff();
    rep.est_error = tol;
    rep.terms = total_panels;
    return rep;
}

// Continuation by the difference relation itself:
// Lambda(s+1) = A(s)^{-1} (Lambda(s) + f(s)).
inline VectorXcd lambda_continue(const NumericModule& M, const std::function<VectorXcd(Complex)>& f,
                                 Complex s0, VectorXcd value, long k) {
    Complex s = s0;
    for (; k > 0; --k) {
        value = M.evalA(s).partialPivLu().solve(value + f(s));
        s += 1.0;
    }
    for (; k < 0; ++k) {
        s -= 1.0;
        value = M.evalA(s) * value - f(s);
    }
    return value;
}

enum class StripSide { upper, lower };

struct GrowthReport {
    bool decaying = false;
    double rate = 0.0; // fitted slope of log|u^{+-N} h| against |Im s|
};

// Growth probe on vertical strips: fits the slope of log|u^{+-N} h(s)|
// against Im(s) in {R, 2R, 4R, 8R} across the strip, on log-magnitude data.
inline GrowthReport check_u_moderate_log(const std::function<double(Complex)>& log_abs_h,
                                         double re_lo, double re_hi, long N, StripSide side,
                                         double R = 20.0) {
    GrowthReport rep;
    rep.rate = -std::numeric_limits<double>::infinity();
    rep.decaying = true;
    for (int xi = 0; xi < 5; ++xi) {
        double x = re_lo + (re_hi - re_lo) * xi / 4.0;
        double ts[4] = {R, 2 * R, 4 * R, 8 * R};
        double gs[4];
        bool overflow = false, underflow = false;
        for (int k = 0; k < 4; ++k) {
            double y = (side == StripSide::upper) ? ts[k] : -ts[k];
            double lh = log_abs_h(Complex(x, y));
            if (std::isnan(lh)) throw EvaluationFailure("check_u_moderate: evaluator returned NaN");
            // |u^N| = e^{-2 pi N Im s} upward, |u^{-N}| = e^{+2 pi N Im s} downward
            gs[k] = lh - 2.0 * M_PI * static_cast<double>(N) * ts[k];
            if (gs[k] == std::numeric_limits<double>::infinity()) overflow = true;
            if (gs[k] == -std::numeric_limits<double>::infinity()) underflow = true;
        }
        if (overflow) {
            rep.decaying = false;
            rep.rate = std::numeric_limits<double>::infinity();
            continue;
        }
        if (underflow) {
            // the sample vanished below the floating range: decay evidence
            rep.rate = std::max(rep.rate, -std::numeric_limits<double>::infinity());
            continue;
        }
        // least-squares slope over (t, g)
        double mt = (ts[0] + ts[1] + ts[2] + ts[3]) / 4.0;
        double mg = (gs[0] + gs[1] + gs[2] + gs[3]) / 4.0;
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 4; ++k) {
            num += (ts[k] - mt) * (gs[k] - mg);
            den += (ts[k] - mt) * (ts[k] - mt);
        }
        double slope = num / den;
        rep.rate = std::max(rep.rate, slope);
        if (slope >= 0.0) rep.decaying = false;
    }
    return rep;
}

inline GrowthReport check_u_moderate(const std::function<Complex(Complex)>& h, double re_lo,
                                     double re_hi, long N, StripSide side, double R = 20.0) {
    auto log_abs = [&](Complex s) -> double {
        Complex v = h(s);
        double a = std::abs(v);
        if (std::isnan(a)) {
            // treat overflow-contaminated values as infinite magnitude
            if (std::isinf(v.real()) || std::isinf(v.imag()))
                return std::numeric_limits<double>::infinity();
            return std::numeric_limits<double>::quiet_NaN();
        }
        return std::log(a);
    };
    return check_u_moderate_log(log_abs, re_lo, re_hi, N, side, R);
}

} // namespace wildstokes
