#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "agebench/kernels.hpp"

namespace agebench::la {

/**
 * Minimal dense row-major matrix for the small systems in this project
 * (filter covariances, ARMA state spaces, OLS normal equations).
 */
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Mat identity(std::size_t n) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline Mat mul(const Mat& a, const Mat& b) {
    if (a.cols != b.rows) throw std::invalid_argument("mat mul: shape mismatch");
    Mat c(a.rows, b.cols);
    kernels::matmul_serial(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols, b.cols);
    return c;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat add(const Mat& a, const Mat& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw std::invalid_argument("mat add: shape");
    Mat c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

inline void symmetrize(Mat& p) {
    for (std::size_t i = 0; i < p.rows; ++i)
        for (std::size_t j = i + 1; j < p.cols; ++j) {
            const double v = 0.5 * (p(i, j) + p(j, i));
            p(i, j) = v;
            p(j, i) = v;
        }
}

/**
 * Lower-triangular Cholesky factor of a PSD matrix. Zero pivots are allowed
 * (rank-deficient PSD input); a negative pivot beyond tolerance throws.
 */
inline Mat cholesky(const Mat& a, double tol = 1e-12) {
    if (a.rows != a.cols) throw std::invalid_argument("cholesky: not square");
    const std::size_t n = a.rows;
    Mat l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d < -tol) throw std::runtime_error("cholesky: matrix not PSD");
        l(j, j) = d > 0.0 ? std::sqrt(d) : 0.0;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (l(j, j) > 0.0)
                l(i, j) = s / l(j, j);
            else if (std::abs(s) <= tol)
                l(i, j) = 0.0;
            else
                throw std::runtime_error("cholesky: matrix not PSD");
        }
    }
    return l;
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Mat a, std::vector<double> b) {
    if (a.rows != a.cols || a.rows != b.size()) throw std::invalid_argument("solve: shape");
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a(i, col)) > std::abs(a(piv, col))) piv = i;
        if (std::abs(a(piv, col)) < 1e-300) throw std::runtime_error("solve: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t i = col + 1; i < n; ++i) {
            const double f = a(i, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(i, j) -= f * a(col, j);
            b[i] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

/// Smallest eigenvalue of a symmetric matrix via cyclic Jacobi rotations.
inline double min_eigenvalue_sym(Mat a, int sweeps = 50) {
    const std::size_t n = a.rows;
    for (int s = 0; s < sweeps; ++s) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
                const double c = std::cos(theta), t = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - t * akq;
                    a(k, q) = t * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - t * aqk;
                    a(q, k) = t * apk + c * aqk;
                }
            }
    }
    double mn = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) mn = std::min(mn, a(i, i));
    return mn;
}

}  // namespace agebench::la
