#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "wildstokes/errors.hpp"
#include "wildstokes/puiseux.hpp"

namespace wildstokes {

// A point e^{i*theta} of the boundary circle, convention arg(s) = theta,
// stored reduced to [0, 2*pi).
struct Direction {
    double theta = 0.0;

    Direction() = default;
    explicit Direction(double t) {
        theta = std::fmod(t, 2.0 * M_PI);
        if (theta < 0.0) theta += 2.0 * M_PI;
        if (theta == 2.0 * M_PI) theta = 0.0;
    }
};

// Element q*s*log(s^{1/p}) + sum_{j=1..p} c_j s^{j/p} of the exponent
// lattice.  Kept in canonical form: p minimal for the (q, c)-support.
class Exponent {
public:
    Exponent() : p_(1), q_(0), c_(1, Complex(0.0, 0.0)) {}

    Exponent(int p, long q, std::vector<Complex> c) : p_(p), q_(q), c_(std::move(c)) {
        if (p_ < 1) throw PreconditionError("exponent: p must be >= 1");
        if (static_cast<int>(c_.size()) != p_)
            throw PreconditionError("exponent: c must have exactly p entries");
        for (Complex z : c_)
            if (!detail::is_finite(z)) throw PreconditionError("exponent: non-finite coefficient");
        canonicalize();
    }

    static Exponent zero() { return Exponent(); }
    // q*s*log(s) + c*s, the unramified case.
    static Exponent slog(long q, Complex c = Complex(0.0, 0.0)) { return Exponent(1, q, {c}); }
    static Exponent linear(Complex c) { return Exponent(1, 0, {c}); }

    int ramification() const { return p_; }
    long q() const { return q_; }
    const std::vector<Complex>& c() const { return c_; }
    Complex c_at(int j) const { return c_[static_cast<std::size_t>(j - 1)]; } // coefficient of s^{j/p}
    Complex s_coefficient() const { return c_.back(); }
    double lambda() const { return static_cast<double>(q_) / p_; }

    bool is_zero() const {
        if (q_ != 0) return false;
        for (Complex z : c_)
            if (z != Complex(0.0, 0.0)) return false;
        return true;
    }

    Exponent lifted(int target_p) const {
        if (target_p == p_) return *this;
        if (target_p % p_ != 0) throw PreconditionError("exponent lift target must be a multiple of p");
        int m = target_p / p_;
        Exponent r;
        r.p_ = target_p;
        r.q_ = q_ * m;
        r.c_.assign(static_cast<std::size_t>(target_p), Complex(0.0, 0.0));
        for (int j = 1; j <= p_; ++j) r.c_[static_cast<std::size_t>(j * m - 1)] = c_[static_cast<std::size_t>(j - 1)];
        return r;
    }

    friend Exponent operator+(const Exponent& a, const Exponent& b) { return combined(a, b, 1.0); }
    friend Exponent operator-(const Exponent& a, const Exponent& b) { return combined(a, b, -1.0); }
    friend Exponent operator-(const Exponent& a) {
        Exponent r = a;
        r.q_ = -r.q_;
        for (auto& z : r.c_) z = -z;
        return r;
    }

    friend bool operator==(const Exponent& a, const Exponent& b) {
        return a.p_ == b.p_ && a.q_ == b.q_ && a.c_ == b.c_;
    }

    friend bool approx_equal(const Exponent& a, const Exponent& b, double tol = 1e-12) {
        Exponent d = a - b;
        if (d.q_ != 0) return false;
        double scale = 0.0;
        for (Complex z : a.c_) scale = std::max(scale, std::abs(z));
        for (Complex z : b.c_) scale = std::max(scale, std::abs(z));
        for (Complex z : d.c_)
            if (std::abs(z) > tol * std::max(1.0, scale)) return false;
        return true;
    }

    Complex eval(Complex s, double arg_s) const {
        Complex logs(std::log(std::abs(s)), arg_s);
        Complex acc = (static_cast<double>(q_) / p_) * s * logs;
        for (int j = 1; j <= p_; ++j)
            acc += c_[static_cast<std::size_t>(j - 1)] *
                   std::exp(logs * (static_cast<double>(j) / p_));
        return acc;
    }

private:
    static Exponent combined(const Exponent& a, const Exponent& b, double sign) {
        int L = std::lcm(a.p_, b.p_);
        Exponent x = a.lifted(L), y = b.lifted(L);
        x.q_ += sign > 0 ? y.q_ : -y.q_;
        for (int j = 0; j < L; ++j) x.c_[static_cast<std::size_t>(j)] += sign * y.c_[static_cast<std::size_t>(j)];
        x.canonicalize();
        return x;
    }

    void canonicalize() {
        long g = p_;
        g = std::gcd(g, std::abs(q_));
        for (int j = 1; j <= p_; ++j)
            if (c_[static_cast<std::size_t>(j - 1)] != Complex(0.0, 0.0)) g = std::gcd(g, static_cast<long>(j));
        if (g <= 1) return;
        int np = static_cast<int>(p_ / g);
        std::vector<Complex> nc(static_cast<std::size_t>(np));
        for (int j = 1; j <= np; ++j) nc[static_cast<std::size_t>(j - 1)] = c_[static_cast<std::size_t>(j * g - 1)];
        p_ = np;
        q_ = q_ / g;
        c_ = std::move(nc);
    }

    int p_;
    long q_;
    std::vector<Complex> c_; // c_[j-1] multiplies s^{j/p}
};

inline Exponent shift_by_period(const Exponent& a, long n) {
    if (n == 0) return a;
    std::vector<Complex> c(static_cast<std::size_t>(a.ramification()));
    for (int j = 1; j <= a.ramification(); ++j) c[static_cast<std::size_t>(j - 1)] = a.c_at(j);
    c.back() += Complex(0.0, 2.0 * M_PI * static_cast<double>(n));
    return Exponent(a.ramification(), a.q(), std::move(c));
}

// Lexicographic record of Re a(R e^{i*theta}) as R -> infinity:
// the |s|log|s| coefficient, then |s|, then |s|^{j/p} for j = p-1 .. 1.
// Each coefficient carries the natural magnitude of its inputs so that
// "zero" can be decided relative to rounding noise.
struct GrowthSignature {
    std::vector<double> coeff;
    std::vector<double> scale;

    // -1, 0, +1 for the first significant coefficient.
    int sign(double rel_tol = 1e-11) const {
        for (std::size_t k = 0; k < coeff.size(); ++k) {
            if (std::abs(coeff[k]) > rel_tol * std::max(1e-300, scale[k]))
                return coeff[k] > 0.0 ? 1 : -1;
        }
        return 0;
    }
};

inline GrowthSignature growth_signature(const Exponent& a, Direction d) {
    double th = d.theta;
    int p = a.ramification();
    double lam = a.lambda();
    GrowthSignature sig;
    sig.coeff.reserve(static_cast<std::size_t>(p + 1));
    sig.scale.reserve(static_cast<std::size_t>(p + 1));
    sig.coeff.push_back(lam * std::cos(th));
    sig.scale.push_back(std::abs(lam));
    Complex cp = a.s_coefficient();
    sig.coeff.push_back(-lam * th * std::sin(th) + (cp * std::exp(Complex(0.0, th))).real());
    sig.scale.push_back(std::abs(lam) * th + std::abs(cp));
    for (int j = p - 1; j >= 1; --j) {
        Complex cj = a.c_at(j);
        sig.coeff.push_back((cj * std::exp(Complex(0.0, th * j / p))).real());
        sig.scale.push_back(std::abs(cj));
    }
    return sig;
}

// Re(a(R e^{i*theta})) / R evaluated stably at R = exp(log_radius); the
// fractional scales underflow to zero instead of overflowing, so this is
// usable far beyond the plain evaluation range.
inline double normalized_re_growth(const Exponent& a, double theta, double log_radius) {
    int p = a.ramification();
    double lam = a.lambda();
    double acc = lam * (std::cos(theta) * log_radius - theta * std::sin(theta));
    for (int j = 1; j <= p; ++j) {
        double cj = (a.c_at(j) * std::exp(Complex(0.0, theta * j / p))).real();
        acc += cj * std::exp(log_radius * static_cast<double>(j - p) / p);
    }
    return acc;
}

enum class Dominance { LT, LE_EQ_GE, GT, EQUAL };

inline const char* to_string(Dominance d) {
    switch (d) {
        case Dominance::LT: return "LT";
        case Dominance::LE_EQ_GE: return "LE_EQ_GE";
        case Dominance::GT: return "GT";
        case Dominance::EQUAL: return "EQUAL";
    }
    return "?";
}

// Verdict of a vs b at direction d.  LT means exp(a-b) decays rapidly there.
inline Dominance dominance_at(const Exponent& a, const Exponent& b, Direction d) {
    Exponent diff = a - b;
    if (diff.is_zero()) return Dominance::EQUAL;
    int s = growth_signature(diff, d).sign();
    if (s > 0) return Dominance::GT;
    if (s < 0) return Dominance::LT;
    return Dominance::LE_EQ_GE;
}

// Directions where the dominance verdict of (a, b) changes.  With the fixed
// branch arg(s) in [0, 2*pi), a ramified leading term may also jump across
// theta = 0; that direction is then included.
inline std::vector<Direction> stokes_directions(const Exponent& a, const Exponent& b) {
    Exponent diff = a - b;
    if (diff.is_zero()) throw IdenticalExponents("stokes_directions: identical exponents");
    std::vector<double> roots;
    if (diff.q() != 0) {
        roots = {M_PI / 2.0, 3.0 * M_PI / 2.0};
    } else {
        int p = diff.ramification();
        int j0 = 0;
        double cmax = 0.0;
        for (int j = 1; j <= p; ++j) cmax = std::max(cmax, std::abs(diff.c_at(j)));
        for (int j = p; j >= 1; --j) {
            if (std::abs(diff.c_at(j)) > 1e-14 * cmax) {
                j0 = j;
                break;
            }
        }
        Complex c = diff.c_at(j0);
        double ac = std::arg(c);
        // roots of cos(j0*theta/p + arg c) over theta in [0, 2*pi)
        for (int k = -2 * p - 2; k <= 2 * p + 2; ++k) {
            double th = (M_PI / 2.0 + k * M_PI - ac) * p / j0;
            if (th >= 0.0 && th < 2.0 * M_PI) roots.push_back(th);
        }
        if (j0 < p) {
            // branch jump of Re(c e^{i j0 theta/p}) across the wrap at theta = 0
            double f0 = (c * std::exp(Complex(0.0, 0.0))).real();
            double f1 = (c * std::exp(Complex(0.0, 2.0 * M_PI * j0 / p))).real();
            double tol = 1e-12 * std::abs(c);
            if (std::abs(f0) > tol && std::abs(f1) > tol && (f0 > 0) != (f1 > 0))
                roots.push_back(0.0);
        }
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                roots.end());
    std::vector<Direction> out;
    out.reserve(roots.size());
    for (double th : roots) out.push_back(Direction(th));
    return out;
}

enum class Parity { even, odd };

namespace detail {

// Ordering keys, largest-first lexicographic.  Values are quantized so the
// comparison is a strict weak ordering even with rounding noise.
inline std::vector<double> ordering_key(const Exponent& e, Parity parity) {
    int p = e.ramification();
    std::vector<double> key;
    key.reserve(static_cast<std::size_t>(p + 1));
    double sgn = (parity == Parity::even) ? 1.0 : -1.0;
    key.push_back(sgn * static_cast<double>(e.q()));
    key.push_back(sgn * e.s_coefficient().real());
    for (int mu = p - 1; mu >= 1; --mu) {
        if (parity == Parity::even) {
            key.push_back(e.c_at(mu).real());
        } else {
            key.push_back((std::exp(Complex(0.0, mu * M_PI / (2.0 * p))) * e.c_at(mu)).real());
        }
    }
    for (auto& k : key) k = std::nearbyint(k / 1e-9);
    return key;
}

} // namespace detail

// Stable total preorder on exponents used by the cocycle factorizations.
// All inputs are lifted to a common ramification first.
inline std::vector<int> order_exponents(const std::vector<Exponent>& list, Parity parity) {
    int L = 1;
    for (const auto& e : list) L = std::lcm(L, e.ramification());
    std::vector<std::vector<double>> keys;
    keys.reserve(list.size());
    for (const auto& e : list) keys.push_back(detail::ordering_key(e.lifted(L), parity));
    std::vector<int> perm(list.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int i, int j) { return keys[static_cast<std::size_t>(i)] > keys[static_cast<std::size_t>(j)]; });
    return perm;
}

// Laurent splitting threshold of the exponent pair.  The quantity is the
// vertical-strip decay bound: u^n exp(a_j - a_i) has log-modulus per unit
// Im(s) equal to -2 pi n - (lambda_j - lambda_i) pi/2 - Im(c_j - c_i) as
// arg(s) -> pi/2, so the cutoff is
//     A = (lambda_i - lambda_j)/4 + Im(c_i - c_j)/(2 pi),
// with powers n > A decaying on the upper quadrant and n <= A relegated to
// the epsilon-trimmed lower arcs.  Even parity additionally runs the
// ordering's case analysis: when the pair separates only at fractional
// scales (case (c)), the threshold lands on an integer and is shifted down
// by a canonical half step so the boundary monomial changes sides.
inline double split_threshold(const Exponent& ai, const Exponent& aj, Parity parity) {
    if (ai == aj || approx_equal(ai, aj)) throw IdenticalExponents("split_threshold: identical exponents");
    int L = std::lcm(ai.ramification(), aj.ramification());
    Exponent x = ai.lifted(L), y = aj.lifted(L);
    Complex ci = x.s_coefficient(), cj = y.s_coefficient();
    double A = (ci - cj).imag() / (2.0 * M_PI);
    if (parity == Parity::odd) return 0.25 * (x.lambda() - y.lambda()) + A;
    if (detail::ordering_key(x, Parity::even) < detail::ordering_key(y, Parity::even))
        throw PreconditionError("split_threshold: ai must precede aj in the even ordering");
    if (x.q() != y.q()) return static_cast<double>(x.q() - y.q()) / (4.0 * L) + A; // case (a)
    if (std::abs(ci - cj) > 1e-9 * std::max({1.0, std::abs(ci), std::abs(cj)})) return A; // case (b)
    if (std::abs(A - std::nearbyint(A)) < 1e-9) return std::nearbyint(A) - 0.5; // case (c)
    return A;
}

// Formal expansion of exp(a(s+1) - a(s)) as a Puiseux series, trusted
// through s^{-order/p}.  The leading monomial is e^{q/p + c_p} s^{q/p}.
inline PuiseuxSeries exp_cocycle(const Exponent& a, long order) {
    int p = a.ramification();
    long q = a.q();
    long work = order + std::abs(q) + p + 2;
    // (q/p) * [(s+1)log(s+1) - s log s - log s - 1], coefficients
    // (-1)^{k+1}/(k(k+1)) at s^{-k}.
    PuiseuxSeries v = PuiseuxSeries::zero(p, work);
    if (q != 0) {
        std::vector<Complex> w;
        long kmax = work / p + 1;
        for (long k = 1; k <= kmax; ++k)
            w.push_back(Complex(((k % 2 == 1) ? 1.0 : -1.0) / (static_cast<double>(k) * (k + 1)), 0.0) *
                        (static_cast<double>(q) / p));
        PuiseuxSeries base(1, 1, std::move(w), kmax);
        v = v + base.lifted(p).truncated(work);
    }
    for (int j = 1; j < p; ++j) {
        Complex cj = a.c_at(j);
        if (cj == Complex(0.0, 0.0)) continue;
        // c_j * ((s+1)^{j/p} - s^{j/p}) = c_j * s^{j/p} * ((1+1/s)^{j/p} - 1)
        double beta = static_cast<double>(j) / p;
        std::vector<Complex> bin;
        Complex b(1.0, 0.0);
        long tmax = work / p + 1;
        for (long t = 1; t <= tmax; ++t) {
            b *= (beta - static_cast<double>(t - 1)) / static_cast<double>(t);
            bin.push_back(cj * b);
        }
        PuiseuxSeries tail(1, 1, std::move(bin), tmax); // in powers of s^{-1}
        PuiseuxSeries part = tail.lifted(p) * PuiseuxSeries::monomial(Complex(1.0, 0.0), p, -j);
        v = v + part.truncated(work);
    }
    Complex lead = std::exp(Complex(static_cast<double>(q) / p, 0.0) + a.s_coefficient());
    PuiseuxSeries r = PuiseuxSeries::monomial(lead, p, -q) * exp(v);
    return r.truncated(order);
}

} // namespace wildstokes
