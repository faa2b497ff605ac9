#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wildstokes/errors.hpp"
#include "wildstokes/puiseux.hpp"

namespace wildstokes {

// Dense matrix over an arbitrary coefficient ring T.  T{} must be the
// additive identity.  Used for matrices of truncated series; numeric
// matrices use Eigen directly.
template <typename T>
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols) {}
    Matrix(int rows, int cols, const T& fill)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    static Matrix identity(int n, const T& one, const T& zero) {
        Matrix m(n, n, zero);
        for (int i = 0; i < n; ++i) m(i, i) = one;
        return m;
    }

    void swap_rows(int a, int b) {
        if (a == b) return;
        for (int j = 0; j < cols_; ++j) std::swap((*this)(a, j), (*this)(b, j));
    }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        Matrix r(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = a.data_[k] + b.data_[k];
        return r;
    }
    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        Matrix r(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = a.data_[k] - b.data_[k];
        return r;
    }
    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        Matrix r(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                for (int j = 0; j < b.cols_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }
    friend Matrix operator*(const T& s, const Matrix& a) {
        Matrix r(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k) r.data_[k] = s * a.data_[k];
        return r;
    }

    friend Matrix kronecker(const Matrix& a, const Matrix& b) {
        Matrix r(a.rows_ * b.rows_, a.cols_ * b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int j = 0; j < a.cols_; ++j)
                for (int k = 0; k < b.rows_; ++k)
                    for (int l = 0; l < b.cols_; ++l)
                        r(i * b.rows_ + k, j * b.cols_ + l) = a(i, j) * b(k, l);
        return r;
    }

private:
    int rows_, cols_;
    std::vector<T> data_;
};

template <typename T, typename F>
Matrix<T> map_matrix(const Matrix<T>& a, F&& f) {
    Matrix<T> r(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) r(i, j) = f(a(i, j));
    return r;
}

template <typename T>
double max_abs_coeff(const Matrix<T>& a) {
    double m = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) m = std::max(m, a(i, j).max_abs_coeff());
    return m;
}

// Smallest valuation above the noise floor across all entries.
template <typename T>
long min_valuation(const Matrix<T>& a, double tol = 0.0) {
    long v = kInfValuation;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) v = std::min(v, a(i, j).valuation_above(tol));
    return v;
}

// f^G = exp(G log f) for a series with constant term 1.  The sum is exact
// when G is nilpotent and otherwise truncates at the trusted order.
inline Matrix<PuiseuxSeries> matrix_power(const Eigen::MatrixXcd& G, const PuiseuxSeries& f) {
    if (G.rows() != G.cols()) throw PreconditionError("matrix_power: G must be square");
    if (f.is_zero() || f.valuation() != 0 || f.coeff(0) != Complex(1.0, 0.0))
        throw PreconditionError("matrix_power: series must have constant term 1");
    int r = static_cast<int>(G.rows());
    Matrix<PuiseuxSeries> out(r, r, f.zero_like());
    for (int i = 0; i < r; ++i) out(i, i) = f.one_like();
    PuiseuxSeries lg = log(f);
    if (lg.is_zero()) return out;
    Eigen::MatrixXcd Gk = Eigen::MatrixXcd::Identity(r, r);
    PuiseuxSeries powk = f.one_like();
    double factorial = 1.0;
    long w = lg.valuation();
    for (long k = 1; k * w <= f.order(); ++k) {
        Gk = Gk * G;
        if (Gk.cwiseAbs().maxCoeff() == 0.0) break;
        powk = powk * lg;
        factorial *= static_cast<double>(k);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                Complex g = Gk(i, j) / factorial;
                if (g != Complex(0.0, 0.0)) out(i, j) += g * powk;
            }
    }
    return out;
}

// Gauss-Jordan inversion over a truncated series field (PuiseuxSeries or
// LaurentU).  Pivots are chosen by minimal valuation within each column;
// entries below the noise floor do not qualify, so a column without a usable
// pivot means the matrix is singular within truncation.
template <typename T>
Matrix<T> invert_series_matrix(const Matrix<T>& a) {
    if (a.rows() != a.cols()) throw PreconditionError("invert: matrix must be square");
    int n = a.rows();
    if (n == 0) return a;
    double noise = 1e-13 * std::max(1.0, max_abs_coeff(a));
    const T zero = a(0, 0).zero_like();
    const T one = a(0, 0).one_like();
    Matrix<T> m = a;
    Matrix<T> inv = Matrix<T>::identity(n, one, zero);
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        long best = kInfValuation;
        for (int r = col; r < n; ++r) {
            long v = m(r, col).valuation_above(noise);
            if (v < best) {
                best = v;
                pivot = r;
            }
        }
        if (pivot < 0) throw NonInvertible("matrix singular within truncation");
        m.swap_rows(col, pivot);
        inv.swap_rows(col, pivot);
        T piv_inv = inverse(m(col, col));
        for (int j = 0; j < n; ++j) {
            m(col, j) = piv_inv * m(col, j);
            inv(col, j) = piv_inv * inv(col, j);
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            T factor = m(r, col);
            if (factor.valuation_above(noise) == kInfValuation) continue;
            for (int j = 0; j < n; ++j) {
                m(r, j) = m(r, j) - factor * m(col, j);
                inv(r, j) = inv(r, j) - factor * inv(col, j);
            }
        }
    }
    return inv;
}

} // namespace wildstokes
