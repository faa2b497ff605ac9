#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "wildstokes/errors.hpp"

namespace wildstokes {

using Complex = std::complex<double>;

// Sentinel used as "valuation of the zero series" and by residual probes.
inline constexpr long kInfValuation = std::numeric_limits<long>::max() / 4;

// Neutral truncation order for exact inputs (monomials, identity matrices):
// large enough to never be the binding term of the min-rule.
inline constexpr long kExactOrder = 1L << 24;

namespace detail {

inline bool is_finite(Complex c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); }

// coeffs[k] is the coefficient of x^{v+k} in an abstract graded variable x.
struct SeriesData {
    long v = 0;
    std::vector<Complex> coeffs;
    long order = kExactOrder; // indices n <= order are trusted

    bool empty() const { return coeffs.empty(); }
    long top() const { return v + static_cast<long>(coeffs.size()) - 1; }

    void normalize() {
        while (!coeffs.empty() && top() > order) coeffs.pop_back();
        std::size_t lead = 0;
        while (lead < coeffs.size() && coeffs[lead] == Complex(0.0, 0.0)) ++lead;
        if (lead > 0) {
            coeffs.erase(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(lead));
            v += static_cast<long>(lead);
        }
        while (!coeffs.empty() && coeffs.back() == Complex(0.0, 0.0)) coeffs.pop_back();
        if (coeffs.empty()) v = 0;
    }

    Complex at(long n) const {
        if (coeffs.empty() || n < v || n > top()) return {0.0, 0.0};
        return coeffs[static_cast<std::size_t>(n - v)];
    }

    // Valuation used by the truncation min-rule: first unknown index for zero.
    long effective_valuation() const { return coeffs.empty() ? order + 1 : v; }
};

inline SeriesData add(const SeriesData& a, const SeriesData& b, double sign) {
    SeriesData r;
    r.order = std::min(a.order, b.order);
    if (a.empty() && b.empty()) return r;
    long lo = std::min(a.empty() ? b.v : a.v, b.empty() ? a.v : b.v);
    long hi = std::min(std::max(a.empty() ? lo : a.top(), b.empty() ? lo : b.top()), r.order);
    if (hi < lo) return r;
    r.v = lo;
    r.coeffs.assign(static_cast<std::size_t>(hi - lo + 1), Complex(0.0, 0.0));
    for (long n = lo; n <= hi; ++n) r.coeffs[static_cast<std::size_t>(n - lo)] = a.at(n) + sign * b.at(n);
    r.normalize();
    return r;
}

inline SeriesData mul(const SeriesData& a, const SeriesData& b) {
    SeriesData r;
    r.order = std::min({a.order + b.effective_valuation(), b.order + a.effective_valuation(),
                        kExactOrder});
    if (a.empty() || b.empty()) return r;
    long lo = a.v + b.v;
    long hi = std::min(a.top() + b.top(), r.order);
    if (hi < lo) return r;
    r.v = lo;
    r.coeffs.assign(static_cast<std::size_t>(hi - lo + 1), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        if (a.coeffs[i] == Complex(0.0, 0.0)) continue;
        long base = a.v + static_cast<long>(i) + b.v;
        std::size_t jmax = std::min(b.coeffs.size(), static_cast<std::size_t>(
                                                         std::max<long>(0, hi - base + 1)));
        for (std::size_t j = 0; j < jmax; ++j)
            r.coeffs[static_cast<std::size_t>(base - lo) + j] += a.coeffs[i] * b.coeffs[j];
    }
    r.normalize();
    return r;
}

// 1/a by the leading-coefficient recursion.  Requires a nonzero leading term.
inline SeriesData reciprocal(const SeriesData& a, const char* what) {
    if (a.empty()) throw ZeroLeadingCoefficient(std::string(what) + ": zero series");
    if (a.coeffs.size() == 1) {
        SeriesData r;
        r.v = -a.v;
        r.coeffs = {1.0 / a.coeffs.front()};
        r.order = std::min(a.order - 2 * a.v, kExactOrder);
        return r;
    }
    if (a.order >= kExactOrder / 2)
        throw PreconditionError(std::string(what) + ": truncate to a finite order first");
    SeriesData r;
    r.order = a.order - 2 * a.v;
    r.v = -a.v;
    long len = r.order - r.v + 1;
    if (len <= 0) throw TruncationBoundary(std::string(what) + ": no trusted terms left");
    r.coeffs.assign(static_cast<std::size_t>(len), Complex(0.0, 0.0));
    Complex lead = a.coeffs.front();
    r.coeffs[0] = 1.0 / lead;
    for (long k = 1; k < len; ++k) {
        Complex acc(0.0, 0.0);
        long jmax = std::min<long>(k, static_cast<long>(a.coeffs.size()) - 1);
        for (long j = 1; j <= jmax; ++j) acc += a.coeffs[static_cast<std::size_t>(j)] * r.coeffs[static_cast<std::size_t>(k - j)];
        r.coeffs[static_cast<std::size_t>(k)] = -acc / lead;
    }
    r.normalize();
    return r;
}

// exp of a series with strictly positive valuation.
inline SeriesData exp_vanishing(const SeriesData& f) {
    if (!f.empty() && f.order >= kExactOrder / 2)
        throw PreconditionError("exp: truncate to a finite order first");
    SeriesData r;
    r.order = f.order;
    r.v = 0;
    r.coeffs = {Complex(1.0, 0.0)};
    if (f.empty()) return r;
    SeriesData power = f;
    double factorial = 1.0;
    for (long k = 1; k * f.v <= f.order; ++k) {
        factorial *= static_cast<double>(k);
        SeriesData term = power;
        for (auto& c : term.coeffs) c /= factorial;
        term.order = r.order;
        r = add(r, term, 1.0);
        if (power.v + f.v > f.order) break;
        power = mul(power, f);
        if (power.empty()) break;
    }
    r.order = f.order;
    r.normalize();
    return r;
}

// log(1 + g) for g of strictly positive valuation.
inline SeriesData log1p_vanishing(const SeriesData& g) {
    if (!g.empty() && g.order >= kExactOrder / 2)
        throw PreconditionError("log: truncate to a finite order first");
    SeriesData r;
    r.order = g.order;
    if (g.empty()) return r;
    SeriesData power = g;
    for (long k = 1; k * g.v <= g.order; ++k) {
        SeriesData term = power;
        double c = (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k);
        for (auto& z : term.coeffs) z *= c;
        term.order = r.order;
        r = add(r, term, 1.0);
        if (power.v + g.v > g.order) break;
        power = mul(power, g);
        if (power.empty()) break;
    }
    r.order = g.order;
    r.normalize();
    return r;
}

} // namespace detail

// Truncated Puiseux series: sum of coeffs[k] * s^{-(v+k)/p}, trusted through
// s^{-order/p} inclusive.  Values are immutable after construction.
class PuiseuxSeries {
public:
    PuiseuxSeries() : p_(1) {}

    PuiseuxSeries(int p, long v, std::vector<Complex> coeffs, long order) : p_(p) {
        if (p < 1) throw PreconditionError("ramification index must be >= 1");
        for (Complex c : coeffs)
            if (!detail::is_finite(c)) throw PreconditionError("non-finite series coefficient");
        data_.v = v;
        data_.coeffs = std::move(coeffs);
        data_.order = order;
        if (!data_.empty() && data_.top() > order)
            throw PreconditionError("series coefficients extend beyond trusted order");
        data_.normalize();
    }

    static PuiseuxSeries zero(int p = 1, long order = kExactOrder) {
        return PuiseuxSeries(p, 0, {}, order);
    }
    static PuiseuxSeries one(int p = 1, long order = kExactOrder) {
        return constant(Complex(1.0, 0.0), p, order);
    }
    static PuiseuxSeries constant(Complex a, int p = 1, long order = kExactOrder) {
        return PuiseuxSeries(p, 0, {a}, order);
    }
    // a * s^{-n/p}
    static PuiseuxSeries monomial(Complex a, int p, long n, long order = kExactOrder) {
        return PuiseuxSeries(p, n, {a}, order);
    }

    int ramification() const { return p_; }
    long order() const { return data_.order; }
    bool is_zero() const { return data_.empty(); }
    long valuation() const { return data_.empty() ? kInfValuation : data_.v; }
    Complex coeff(long n) const { return data_.at(n); }
    Complex leading_coeff() const { return data_.empty() ? Complex(0, 0) : data_.coeffs.front(); }
    long top_index() const { return data_.empty() ? data_.order : data_.top(); }
    const std::vector<Complex>& coeffs() const { return data_.coeffs; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (Complex c : data_.coeffs) m = std::max(m, std::abs(c));
        return m;
    }

    // First index (within trust) whose coefficient exceeds tol; kInfValuation if none.
    long valuation_above(double tol) const {
        for (std::size_t k = 0; k < data_.coeffs.size(); ++k)
            if (std::abs(data_.coeffs[k]) > tol) return data_.v + static_cast<long>(k);
        return kInfValuation;
    }

    PuiseuxSeries zero_like() const { return zero(p_, data_.order); }
    PuiseuxSeries one_like() const { return one(p_, data_.order); }

    PuiseuxSeries lifted(int target_p) const {
        if (target_p == p_) return *this;
        if (target_p % p_ != 0) throw PreconditionError("lift target must be a multiple of p");
        long m = target_p / p_;
        PuiseuxSeries r;
        r.p_ = target_p;
        r.data_.v = data_.v * m;
        // Intermediate indices of a lifted series are exactly zero, so the
        // trusted range extends to the next genuine term.
        r.data_.order = std::min(data_.order * m + (m - 1), kExactOrder);
        if (!data_.empty()) {
            r.data_.coeffs.assign(static_cast<std::size_t>((data_.top() - data_.v) * m + 1),
                                  Complex(0.0, 0.0));
            for (std::size_t k = 0; k < data_.coeffs.size(); ++k)
                r.data_.coeffs[k * static_cast<std::size_t>(m)] = data_.coeffs[k];
        }
        r.data_.normalize();
        return r;
    }

    PuiseuxSeries truncated(long new_order) const {
        PuiseuxSeries r = *this;
        r.data_.order = std::min(new_order, r.data_.order);
        r.data_.normalize();
        return r;
    }

    friend PuiseuxSeries operator+(const PuiseuxSeries& a, const PuiseuxSeries& b) {
        auto [x, y] = aligned(a, b);
        return wrap(x.p_, detail::add(x.data_, y.data_, 1.0));
    }
    friend PuiseuxSeries operator-(const PuiseuxSeries& a, const PuiseuxSeries& b) {
        auto [x, y] = aligned(a, b);
        return wrap(x.p_, detail::add(x.data_, y.data_, -1.0));
    }
    friend PuiseuxSeries operator-(const PuiseuxSeries& a) {
        PuiseuxSeries r = a;
        for (auto& c : r.data_.coeffs) c = -c;
        return r;
    }
    friend PuiseuxSeries operator*(const PuiseuxSeries& a, const PuiseuxSeries& b) {
        auto [x, y] = aligned(a, b);
        return wrap(x.p_, detail::mul(x.data_, y.data_));
    }
    friend PuiseuxSeries operator*(Complex a, const PuiseuxSeries& b) {
        PuiseuxSeries r = b;
        for (auto& c : r.data_.coeffs) c *= a;
        r.data_.normalize();
        return r;
    }
    PuiseuxSeries& operator+=(const PuiseuxSeries& b) { return *this = *this + b; }
    PuiseuxSeries& operator-=(const PuiseuxSeries& b) { return *this = *this - b; }
    PuiseuxSeries& operator*=(const PuiseuxSeries& b) { return *this = *this * b; }

    friend std::pair<PuiseuxSeries, PuiseuxSeries> aligned(const PuiseuxSeries& a,
                                                           const PuiseuxSeries& b) {
        int L = std::lcm(a.p_, b.p_);
        return {a.lifted(L), b.lifted(L)};
    }

    friend PuiseuxSeries inverse(const PuiseuxSeries& a) {
        return wrap(a.p_, detail::reciprocal(a.data_, "inverse"));
    }

    // exp(f).  Requires valuation >= 0; a constant term is exponentiated exactly.
    friend PuiseuxSeries exp(const PuiseuxSeries& f) {
        if (!f.is_zero() && f.valuation() < 0)
            throw PreconditionError("exp: argument must be bounded (valuation >= 0)");
        Complex c0 = f.coeff(0);
        detail::SeriesData g = f.data_;
        if (c0 != Complex(0.0, 0.0)) {
            g.coeffs.front() = Complex(0.0, 0.0);
            g.normalize();
        }
        detail::SeriesData r = detail::exp_vanishing(g);
        if (c0 != Complex(0.0, 0.0)) {
            Complex scale = std::exp(c0);
            for (auto& c : r.coeffs) c *= scale;
        }
        return wrap(f.p_, r);
    }

    // log(f) for f with valuation 0.  The leading coefficient uses the
    // principal branch plus 2*pi*i*branch; a negative-real leading coefficient
    // must come with an explicit branch choice.
    friend PuiseuxSeries log(const PuiseuxSeries& f, std::optional<int> branch = std::nullopt) {
        if (f.is_zero()) throw ZeroLeadingCoefficient("log: zero series");
        if (f.valuation() != 0)
            throw PreconditionError("log: argument must have valuation 0");
        Complex a0 = f.leading_coeff();
        if (a0.imag() == 0.0 && a0.real() < 0.0 && !branch)
            throw BranchAmbiguity("log: negative real leading coefficient needs a branch flag");
        Complex l0 = std::log(a0) + Complex(0.0, 2.0 * M_PI * branch.value_or(0));
        detail::SeriesData g = f.data_;
        Complex inv_a0 = 1.0 / a0;
        for (auto& c : g.coeffs) c *= inv_a0;
        g.coeffs.front() = Complex(0.0, 0.0);
        g.normalize();
        detail::SeriesData r = detail::log1p_vanishing(g);
        detail::SeriesData con;
        con.coeffs = {l0};
        con.order = r.order;
        return wrap(f.p_, detail::add(r, con, 1.0));
    }

    friend PuiseuxSeries shift(const PuiseuxSeries& f) { return f.substituted(+1.0); }
    friend PuiseuxSeries unshift(const PuiseuxSeries& f) { return f.substituted(-1.0); }

    struct Eval {
        Complex value;
        double last_term; // magnitude of the last included term
    };

    // Partial sum at s0 with arg(s0) fixed by the caller (branch of s^{1/p}).
    Eval eval(Complex s0, double arg_s0) const {
        Complex x = std::exp(-(std::log(std::abs(s0)) + Complex(0.0, arg_s0)) /
                             static_cast<double>(p_));
        Complex acc(0.0, 0.0);
        double last = 0.0;
        if (!data_.empty()) {
            Complex xv = std::pow(x, Complex(static_cast<double>(data_.v), 0.0));
            for (std::size_t k = 0; k < data_.coeffs.size(); ++k) {
                Complex term = data_.coeffs[k] * xv;
                acc += term;
                if (data_.coeffs[k] != Complex(0.0, 0.0)) last = std::abs(term);
                xv *= x;
            }
        }
        return {acc, last};
    }

    Complex eval_value(Complex s0) const { return eval(s0, std::arg(s0)).value; }

private:
    static PuiseuxSeries wrap(int p, detail::SeriesData d) {
        PuiseuxSeries r;
        r.p_ = p;
        r.data_ = std::move(d);
        return r;
    }

    // f(s) -> f(s + dir): substitutes s^{-1/p} -> s^{-1/p}(1 + dir*s^{-1})^{-1/p},
    // monomial by monomial via the binomial recurrence (no exp/log, no branch
    // issues since the inner factor has constant term 1).
    PuiseuxSeries substituted(double dir) const {
        detail::SeriesData r;
        r.order = data_.order;
        if (data_.empty()) return wrap(p_, r);
        if (data_.order >= kExactOrder / 2) {
            if (data_.v == 0 && data_.coeffs.size() == 1) return *this; // constants are fixed
            throw PreconditionError("shift: truncate to a finite order first");
        }
        r.v = data_.v;
        long len = r.order - r.v + 1;
        if (len <= 0) return wrap(p_, r);
        r.coeffs.assign(static_cast<std::size_t>(len), Complex(0.0, 0.0));
        for (std::size_t k = 0; k < data_.coeffs.size(); ++k) {
            Complex c = data_.coeffs[k];
            if (c == Complex(0.0, 0.0)) continue;
            long n = data_.v + static_cast<long>(k);
            double beta = -static_cast<double>(n) / static_cast<double>(p_);
            Complex binom(1.0, 0.0);
            for (long t = 0; n + t * p_ <= r.order; ++t) {
                if (t > 0) binom *= dir * (beta - static_cast<double>(t - 1)) / static_cast<double>(t);
                r.coeffs[static_cast<std::size_t>(n + t * p_ - r.v)] += c * binom;
            }
        }
        r.normalize();
        return wrap(p_, r);
    }

    int p_;
    detail::SeriesData data_;
};

// Truncated Laurent series in u: sum of coeffs[k] * u^{v+k}, trusted through
// u^{order} inclusive.
class LaurentU {
public:
    LaurentU() = default;

    LaurentU(long v, std::vector<Complex> coeffs, long order) {
        for (Complex c : coeffs)
            if (!detail::is_finite(c)) throw PreconditionError("non-finite series coefficient");
        data_.v = v;
        data_.coeffs = std::move(coeffs);
        data_.order = order;
        if (!data_.empty() && data_.top() > order)
            throw PreconditionError("series coefficients extend beyond trusted order");
        data_.normalize();
    }

    static LaurentU zero(long order = kExactOrder) { return LaurentU(0, {}, order); }
    static LaurentU one(long order = kExactOrder) { return LaurentU(0, {Complex(1.0, 0.0)}, order); }
    static LaurentU monomial(Complex a, long n, long order = kExactOrder) {
        return LaurentU(n, {a}, order);
    }

    long order() const { return data_.order; }
    bool is_zero() const { return data_.empty(); }
    long valuation() const { return data_.empty() ? kInfValuation : data_.v; }
    long top_index() const { return data_.empty() ? data_.order : data_.top(); }
    Complex coeff(long n) const { return data_.at(n); }
    Complex leading_coeff() const { return data_.empty() ? Complex(0, 0) : data_.coeffs.front(); }
    const std::vector<Complex>& coeffs() const { return data_.coeffs; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (Complex c : data_.coeffs) m = std::max(m, std::abs(c));
        return m;
    }

    long valuation_above(double tol) const {
        for (std::size_t k = 0; k < data_.coeffs.size(); ++k)
            if (std::abs(data_.coeffs[k]) > tol) return data_.v + static_cast<long>(k);
        return kInfValuation;
    }

    LaurentU zero_like() const { return zero(data_.order); }
    LaurentU one_like() const { return one(data_.order); }
    LaurentU truncated(long new_order) const {
        LaurentU r = *this;
        r.data_.order = std::min(new_order, r.data_.order);
        r.data_.normalize();
        return r;
    }

    friend LaurentU operator+(const LaurentU& a, const LaurentU& b) {
        return wrap(detail::add(a.data_, b.data_, 1.0));
    }
    friend LaurentU operator-(const LaurentU& a, const LaurentU& b) {
        return wrap(detail::add(a.data_, b.data_, -1.0));
    }
    friend LaurentU operator-(const LaurentU& a) {
        LaurentU r = a;
        for (auto& c : r.data_.coeffs) c = -c;
        return r;
    }
    friend LaurentU operator*(const LaurentU& a, const LaurentU& b) {
        return wrap(detail::mul(a.data_, b.data_));
    }
    friend LaurentU operator*(Complex a, const LaurentU& b) {
        LaurentU r = b;
        for (auto& c : r.data_.coeffs) c *= a;
        r.data_.normalize();
        return r;
    }
    LaurentU& operator+=(const LaurentU& b) { return *this = *this + b; }
    LaurentU& operator-=(const LaurentU& b) { return *this = *this - b; }
    LaurentU& operator*=(const LaurentU& b) { return *this = *this * b; }

    friend LaurentU inverse(const LaurentU& a) {
        return wrap(detail::reciprocal(a.data_, "inverse"));
    }

    Complex eval_value(Complex u0) const {
        Complex acc(0.0, 0.0);
        if (!data_.empty()) {
            Complex uv = std::pow(u0, Complex(static_cast<double>(data_.v), 0.0));
            for (std::size_t k = 0; k < data_.coeffs.size(); ++k) {
                acc += data_.coeffs[k] * uv;
                uv *= u0;
            }
        }
        return acc;
    }

    // log-sum-exp upper bound for log|h(u)| given log|u|; immune to overflow.
    double log_abs_bound(double log_abs_u) const {
        if (data_.empty()) return -std::numeric_limits<double>::infinity();
        double m = -std::numeric_limits<double>::infinity();
        std::vector<double> terms;
        terms.reserve(data_.coeffs.size());
        for (std::size_t k = 0; k < data_.coeffs.size(); ++k) {
            double a = std::abs(data_.coeffs[k]);
            if (a == 0.0) continue;
            double t = std::log(a) + static_cast<double>(data_.v + static_cast<long>(k)) * log_abs_u;
            terms.push_back(t);
            m = std::max(m, t);
        }
        if (terms.empty()) return -std::numeric_limits<double>::infinity();
        double acc = 0.0;
        for (double t : terms) acc += std::exp(t - m);
        return m + std::log(acc);
    }

private:
    static LaurentU wrap(detail::SeriesData d) {
        LaurentU r;
        r.data_ = std::move(d);
        return r;
    }

    detail::SeriesData data_;
};

// h = h_plus + h_minus with h_plus carrying the powers n > threshold.
inline std::pair<LaurentU, LaurentU> split(const LaurentU& h, double threshold) {
    std::vector<Complex> plus, minus;
    long v = h.is_zero() ? 0 : h.valuation();
    long top = h.is_zero() ? v - 1 : h.top_index();
    long first_plus = kInfValuation, first_minus = kInfValuation;
    for (long n = v; n <= top; ++n) {
        Complex c = h.coeff(n);
        if (static_cast<double>(n) > threshold) {
            if (c != Complex(0.0, 0.0) && first_plus == kInfValuation) first_plus = n;
            if (first_plus != kInfValuation) plus.push_back(c);
        } else {
            if (c != Complex(0.0, 0.0) && first_minus == kInfValuation) first_minus = n;
            if (first_minus != kInfValuation) minus.push_back(c);
        }
    }
    LaurentU hp = (first_plus == kInfValuation) ? LaurentU::zero(h.order())
                                                : LaurentU(first_plus, std::move(plus), h.order());
    LaurentU hm = (first_minus == kInfValuation) ? LaurentU::zero(h.order())
                                                 : LaurentU(first_minus, std::move(minus), h.order());
    return {hp, hm};
}

} // namespace wildstokes
