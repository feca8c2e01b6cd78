#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace varjet {

// Dense row-major matrix over double or complex<double>. Small sizes only
// (a few hundred rows at most), so no blocking or pivg tricks beyond partial
// pivoting.
template <class S>
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = S(1);
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    S& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    const S& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    S* data() { return a_.data(); }
    const S* data() const { return a_.data(); }

    Mat operator*(const Mat& o) const {
        if (cols_ != o.rows_) throw std::invalid_argument("matrix product dimension mismatch");
        Mat r(rows_, o.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                S v = (*this)(i, k);
                if (v == S(0)) continue;
                for (int j = 0; j < o.cols_; ++j) r(i, j) += v * o(k, j);
            }
        return r;
    }

    Mat operator+(const Mat& o) const {
        check_same_shape(o);
        Mat r = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] += o.a_[i];
        return r;
    }

    Mat operator-(const Mat& o) const {
        check_same_shape(o);
        Mat r = *this;
        for (std::size_t i = 0; i < a_.size(); ++i) r.a_[i] -= o.a_[i];
        return r;
    }

    Mat& operator+=(const Mat& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }

    Mat operator*(S s) const {
        Mat r = *this;
        for (auto& v : r.a_) v *= s;
        return r;
    }

    Mat transposed() const {
        Mat r(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
        return r;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : a_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    void check_same_shape(const Mat& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch");
    }

    int rows_ = 0, cols_ = 0;
    std::vector<S> a_;
};

using MatD = Mat<double>;
using MatC = Mat<std::complex<double>>;

struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// LU with partial pivoting, in place. perm holds row swaps.
template <class S>
struct Lu {
    Mat<S> lu;
    std::vector<int> perm;

    explicit Lu(Mat<S> m) : lu(std::move(m)) {
        int n = lu.rows();
        if (n != lu.cols()) throw std::invalid_argument("LU of non-square matrix");
        perm.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        for (int c = 0; c < n; ++c) {
            int piv = c;
            double best = std::abs(lu(c, c));
            for (int r = c + 1; r < n; ++r) {
                double v = std::abs(lu(r, c));
                if (v > best) {
                    best = v;
                    piv = r;
                }
            }
            if (best == 0.0) throw SingularMatrixError("singular matrix in LU factorization");
            if (piv != c) {
                for (int j = 0; j < n; ++j) std::swap(lu(c, j), lu(piv, j));
                std::swap(perm[static_cast<std::size_t>(c)], perm[static_cast<std::size_t>(piv)]);
            }
            for (int r = c + 1; r < n; ++r) {
                S f = lu(r, c) / lu(c, c);
                lu(r, c) = f;
                for (int j = c + 1; j < n; ++j) lu(r, j) -= f * lu(c, j);
            }
        }
    }

    std::vector<S> solve(const std::vector<S>& b) const {
        int n = lu.rows();
        std::vector<S> x(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) x[static_cast<std::size_t>(i)] -= lu(i, j) * x[static_cast<std::size_t>(j)];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[static_cast<std::size_t>(i)] -= lu(i, j) * x[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(i)] /= lu(i, i);
        }
        return x;
    }

    Mat<S> solve(const Mat<S>& b) const {
        int n = lu.rows();
        Mat<S> x(n, b.cols());
        std::vector<S> col(static_cast<std::size_t>(n));
        for (int j = 0; j < b.cols(); ++j) {
            for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = b(i, j);
            auto sol = solve(col);
            for (int i = 0; i < n; ++i) x(i, j) = sol[static_cast<std::size_t>(i)];
        }
        return x;
    }
};

template <class S>
Mat<S> inverse(const Mat<S>& m) {
    Lu<S> lu(m);
    return lu.solve(Mat<S>::identity(m.rows()));
}

// Minimum-norm solution of the underdetermined system M x = r via the normal
// equations M M^T lambda = r, x = M^T lambda. Returns the solution; residual
// reported through *residual_inf when non-null.
inline std::vector<double> min_norm_solve(const MatD& m, const std::vector<double>& r,
                                          double* residual_inf = nullptr) {
    MatD g = m * m.transposed();
    std::vector<double> x(static_cast<std::size_t>(m.cols()), 0.0);
    std::vector<double> lambda;
    try {
        Lu<double> lu(g);
        lambda = lu.solve(r);
    } catch (const SingularMatrixError&) {
        // rank-deficient: fall back to a tiny diagonal shift so the caller can
        // observe the residual instead of an exception
        double shift = 1e-13 * std::max(1.0, g.max_abs());
        for (int i = 0; i < g.rows(); ++i) g(i, i) += shift;
        Lu<double> lu(g);
        lambda = lu.solve(r);
    }
    for (int j = 0; j < m.cols(); ++j) {
        double s = 0.0;
        for (int i = 0; i < m.rows(); ++i) s += m(i, j) * lambda[static_cast<std::size_t>(i)];
        x[static_cast<std::size_t>(j)] = s;
    }
    if (residual_inf) {
        double res = 0.0;
        for (int i = 0; i < m.rows(); ++i) {
            double s = -r[static_cast<std::size_t>(i)];
            for (int j = 0; j < m.cols(); ++j) s += m(i, j) * x[static_cast<std::size_t>(j)];
            res = std::max(res, std::abs(s));
        }
        *residual_inf = res;
    }
    return x;
}

// Numerical rank by Gaussian elimination with full pivoting.
inline int matrix_rank(MatD m, double tol_rel = 1e-10) {
    int rank = 0;
    double scale = m.max_abs();
    if (scale == 0.0) return 0;
    double tol = tol_rel * scale;
    int rows = m.rows(), cols = m.cols();
    std::vector<bool> used_row(static_cast<std::size_t>(rows), false);
    for (int step = 0; step < std::min(rows, cols); ++step) {
        int pr = -1, pc = -1;
        double best = tol;
        for (int i = 0; i < rows; ++i) {
            if (used_row[static_cast<std::size_t>(i)]) continue;
            for (int j = 0; j < cols; ++j)
                if (std::abs(m(i, j)) > best) {
                    best = std::abs(m(i, j));
                    pr = i;
                    pc = j;
                }
        }
        if (pr < 0) break;
        ++rank;
        used_row[static_cast<std::size_t>(pr)] = true;
        for (int i = 0; i < rows; ++i) {
            if (i == pr || used_row[static_cast<std::size_t>(i)]) continue;
            double f = m(i, pc) / m(pr, pc);
            if (f == 0.0) continue;
            for (int j = 0; j < cols; ++j) m(i, j) -= f * m(pr, j);
        }
    }
    return rank;
}

}  // namespace varjet
