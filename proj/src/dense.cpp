#include "dpcg/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpcg {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

DenseMatrix DenseMatrix::from_sparse(const SparseMatrix& A) {
    DenseMatrix D(A.n, A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            D(i, A.col_idx[k]) = A.values[k];
    return D;
}

Vector DenseMatrix::col(std::size_t j) const {
    Vector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

Vector DenseMatrix::row(std::size_t i) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                  data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
}

void DenseMatrix::set_col(std::size_t j, const Vector& v) {
    if (v.size() != rows_) throw std::invalid_argument("set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix T(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) T(j, i) = (*this)(i, j);
    return T;
}

DenseMatrix DenseMatrix::mult(const DenseMatrix& B) const {
    if (cols_ != B.rows()) throw std::invalid_argument("DenseMatrix::mult: dimension mismatch");
    DenseMatrix C(rows_, B.cols());
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = (*this)(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
        }
    return C;
}

Vector DenseMatrix::mult(const Vector& x) const {
    if (x.size() != cols_) throw std::invalid_argument("DenseMatrix::mult: vector length mismatch");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vector DenseMatrix::mult_transpose(const Vector& x) const {
    if (x.size() != rows_) throw std::invalid_argument("mult_transpose: vector length mismatch");
    Vector y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < cols_; ++j) y[j] += (*this)(i, j) * xi;
    }
    return y;
}

double DenseMatrix::frobenius() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

double DenseMatrix::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("subtract: dimension mismatch");
    DenseMatrix C(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) C(i, j) = A(i, j) - B(i, j);
    return C;
}

QrResult dense_qr(const DenseMatrix& B, double drop_tol) {
    const std::size_t m = B.rows();
    const std::size_t k = B.cols();
    if (m < 1) throw std::invalid_argument("dense_qr: empty matrix");

    DenseMatrix work = B;  // reduced in place
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::vector<Vector> reflectors;  // Householder vectors, one per step
    const std::size_t steps = std::min(m, k);

    // Running squared column norms, recomputed from the trailing block each
    // step to avoid cancellation drift.
    for (std::size_t s = 0; s < steps; ++s) {
        std::size_t pivot = s;
        double best = -1.0;
        double nrm_s = 0.0;
        for (std::size_t j = s; j < k; ++j) {
            double nrm = 0.0;
            for (std::size_t i = s; i < m; ++i) nrm += work(i, j) * work(i, j);
            if (j == s) nrm_s = nrm;
            if (nrm > best) {
                best = nrm;
                pivot = j;
            }
        }
        // Keep the natural column order on near-ties so already-orthonormal
        // input reproduces itself exactly.
        if (nrm_s >= best * (1.0 - 1e-12)) {
            pivot = s;
            best = nrm_s;
        }
        if (pivot != s) {
            for (std::size_t i = 0; i < m; ++i) std::swap(work(i, s), work(i, pivot));
            std::swap(perm[s], perm[pivot]);
        }

        // Householder vector for column s below the diagonal.
        double xnorm = std::sqrt(best);
        Vector v(m - s, 0.0);
        if (xnorm > 0.0) {
            const double x0 = work(s, s);
            const double alpha = (x0 >= 0.0) ? -xnorm : xnorm;
            v[0] = x0 - alpha;
            for (std::size_t i = s + 1; i < m; ++i) v[i - s] = work(i, s);
            double vnorm = 0.0;
            for (double t : v) vnorm += t * t;
            if (vnorm > 0.0) {
                const double inv = 1.0 / std::sqrt(vnorm);
                for (double& t : v) t *= inv;
                // Apply I - 2 v v^T to the trailing block.
                for (std::size_t j = s; j < k; ++j) {
                    double dotv = 0.0;
                    for (std::size_t i = s; i < m; ++i) dotv += v[i - s] * work(i, j);
                    dotv *= 2.0;
                    for (std::size_t i = s; i < m; ++i) work(i, j) -= dotv * v[i - s];
                }
            }
        }
        reflectors.push_back(std::move(v));
    }

    // Numerical rank from the diagonal of the reduced matrix.
    double max_diag = 0.0;
    for (std::size_t s = 0; s < steps; ++s) max_diag = std::max(max_diag, std::abs(work(s, s)));
    std::size_t rank = 0;
    if (max_diag > 0.0) {
        for (std::size_t s = 0; s < steps; ++s) {
            if (std::abs(work(s, s)) < drop_tol * max_diag) break;
            ++rank;
        }
    }

    QrResult res;
    res.kept.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(rank));
    res.R = DenseMatrix(rank, rank);
    for (std::size_t i = 0; i < rank; ++i)
        for (std::size_t j = i; j < rank; ++j) res.R(i, j) = work(i, j);

    // Q = H_0 ... H_{rank-1} applied to the first `rank` identity columns.
    res.Q = DenseMatrix(m, rank);
    for (std::size_t j = 0; j < rank; ++j) {
        Vector e(m, 0.0);
        e[j] = 1.0;
        for (std::size_t s_plus1 = std::min(reflectors.size(), j + 1); s_plus1 > 0; --s_plus1) {
            const std::size_t s = s_plus1 - 1;
            const Vector& v = reflectors[s];
            if (v.empty()) continue;
            double dotv = 0.0;
            for (std::size_t i = s; i < m; ++i) dotv += v[i - s] * e[i];
            dotv *= 2.0;
            for (std::size_t i = s; i < m; ++i) e[i] -= dotv * v[i - s];
        }
        res.Q.set_col(j, e);
    }

    // Normalize signs so the R diagonal is nonnegative; keeps the factors
    // deterministic under input scaling.
    for (std::size_t j = 0; j < rank; ++j) {
        if (res.R(j, j) < 0.0) {
            for (std::size_t c = j; c < rank; ++c) res.R(j, c) = -res.R(j, c);
            for (std::size_t i = 0; i < m; ++i) res.Q(i, j) = -res.Q(i, j);
        }
    }
    return res;
}

EigResult dense_sym_eig(const DenseMatrix& A) {
    const std::size_t n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("dense_sym_eig: matrix not square");
    double amax = A.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (std::abs(A(i, j) - A(j, i)) > 1e-10 * std::max(amax, 1.0))
                throw std::invalid_argument("dense_sym_eig: input not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");

    DenseMatrix M = A;
    DenseMatrix V = DenseMatrix::identity(n);
    const double normF = A.frobenius();
    const double target = 1e-12 * std::max(normF, 1e-300);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += M(i, j) * M(i, j);
        return std::sqrt(s);
    };

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && off_norm() > target; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = M(p, q);
                if (apq == 0.0) continue;
                const double app = M(p, p);
                const double aqq = M(q, q);
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                              : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double mip = M(i, p);
                    const double miq = M(i, q);
                    M(i, p) = c * mip - s * miq;
                    M(i, q) = s * mip + c * miq;
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double mpj = M(p, j);
                    const double mqj = M(q, j);
                    M(p, j) = c * mpj - s * mqj;
                    M(q, j) = s * mpj + c * mqj;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = V(i, p);
                    const double viq = V(i, q);
                    V(i, p) = c * vip - s * viq;
                    V(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return M(a, a) < M(b, b); });

    EigResult res;
    res.eigenvalues.resize(n);
    res.eigenvectors = DenseMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        res.eigenvalues[j] = M(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.eigenvectors(i, j) = V(i, order[j]);
    }
    return res;
}

Vector CholeskyFactor::solve(const Vector& b) const {
    const std::size_t n = L_.rows();
    if (b.size() != n) throw std::invalid_argument("CholeskyFactor::solve: length mismatch");
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= L_(i, j) * y[j];
        y[i] = s / L_(i, i);
    }
    Vector x(n, 0.0);
    for (std::size_t ip = n; ip > 0; --ip) {
        const std::size_t i = ip - 1;
        double s = y[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= L_(j, i) * x[j];
        x[i] = s / L_(i, i);
    }
    return x;
}

CholeskyFactor cholesky(const DenseMatrix& A) {
    const std::size_t n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("cholesky: matrix not square");
    DenseMatrix L(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = A(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (i == j) {
                if (s <= 0.0)
                    throw std::runtime_error("cholesky: not SPD, nonpositive pivot at index " +
                                             std::to_string(i));
                L(i, i) = std::sqrt(s);
            } else {
                L(i, j) = s / L(j, j);
            }
        }
    }
    return CholeskyFactor(std::move(L));
}

}  // namespace dpcg
