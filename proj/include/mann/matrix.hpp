#ifndef MANN_MATRIX_HPP
#define MANN_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "mann/errors.hpp"

namespace mann {

/// Dense row-major matrix of doubles. Carrier for images, covariances
/// and network weights.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (rows == 0 || cols == 0)
            throw parameter_error("Matrix: dimensions must be positive, got " +
                                  shape_str(rows, cols));
    }

    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (rows == 0 || cols == 0)
            throw parameter_error("Matrix: dimensions must be positive, got " +
                                  shape_str(rows, cols));
        if (data_.size() != rows * cols)
            throw shape_error("Matrix: data length " + std::to_string(data_.size()) +
                              " does not match shape " + shape_str(rows, cols));
    }

    /// Construct from nested initializer-like rows (used heavily in tests).
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty() || rows[0].empty())
            throw parameter_error("Matrix::from_rows: empty input");
        Matrix m(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw shape_error("Matrix::from_rows: ragged row " + std::to_string(i));
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    std::string shape() const { return shape_str(rows_, cols_); }

    static std::string shape_str(std::size_t r, std::size_t c) {
        return std::to_string(r) + "x" + std::to_string(c);
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw shape_error("mat_mul: inner dimensions disagree, " + a.shape() +
                          " vs " + b.shape());
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            out(j, i) = a(i, j);
    return out;
}

inline Matrix mat_add(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw shape_error("mat_add: shapes disagree, " + a.shape() + " vs " + b.shape());
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

inline Matrix mat_sub(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw shape_error("mat_sub: shapes disagree, " + a.shape() + " vs " + b.shape());
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

inline Matrix mat_scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

inline double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

inline double trace(const Matrix& a) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
    return t;
}

/// Eigendecomposition of a symmetric matrix. `values` sorted descending,
/// column j of `vectors` pairs with values[j].
struct EigenDecomposition {
    std::vector<double> values;
    Matrix vectors;
};

/// Symmetric eigensolver: cyclic Jacobi with row-cyclic sweep order.
/// Deterministic for identical input. Eigenvalues sorted non-increasing,
/// each eigenvector's largest-magnitude entry made non-negative.
inline EigenDecomposition jacobi_eigh(const Matrix& s, double tol = 1e-12) {
    if (s.rows() != s.cols())
        throw shape_error("jacobi_eigh: matrix not square, " + s.shape());
    if (tol <= 0.0)
        throw parameter_error("jacobi_eigh: tol must be positive");
    const std::size_t n = s.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(s(i, j) - s(j, i)) > 1e-9)
                throw shape_error("jacobi_eigh: matrix asymmetric at (" +
                                  std::to_string(i) + "," + std::to_string(j) +
                                  "), |a_ij - a_ji| = " +
                                  std::to_string(std::abs(s(i, j) - s(j, i))));

    Matrix a = s;
    Matrix v = Matrix::identity(n);

    auto off_diag_max = [&]() {
        double m = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                m = std::max(m, std::abs(a(p, q)));
        return m;
    };

    const int max_sweeps = 100;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        if (off_diag_max() <= tol) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol * 1e-3) continue;
                const double theta = 0.5 * (a(q, q) - a(p, p)) / apq;
                double t;
                if (std::abs(theta) > 1e12) {
                    t = 0.5 / theta;
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep == max_sweeps && off_diag_max() > tol)
        throw convergence_error("jacobi_eigh: no convergence after " +
                                std::to_string(max_sweeps) +
                                " sweeps, off-diagonal max " +
                                std::to_string(off_diag_max()));

    // Sort descending by eigenvalue; stable so equal eigenvalues keep
    // their sweep order and the result stays deterministic.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src);
        // Sign convention: first entry of largest magnitude made non-negative.
        std::size_t imax = 0;
        double vmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(v(i, src)) > vmax) {
                vmax = std::abs(v(i, src));
                imax = i;
            }
        }
        const double sign = v(imax, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

} // namespace mann

#endif
