#pragma once

#include <cstddef>
#include <vector>

#include "dpcg/sparse.hpp"
#include "dpcg/vec.hpp"

namespace dpcg {

/// Row-major dense matrix of 64-bit reals.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_sparse(const SparseMatrix& A);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Vector col(std::size_t j) const;
    Vector row(std::size_t i) const;
    void set_col(std::size_t j, const Vector& v);

    DenseMatrix transpose() const;
    DenseMatrix mult(const DenseMatrix& B) const;
    Vector mult(const Vector& x) const;
    Vector mult_transpose(const Vector& x) const;

    double frobenius() const;
    double max_abs() const;

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// C = A - B (dimensions must agree).
DenseMatrix subtract(const DenseMatrix& A, const DenseMatrix& B);

struct QrResult {
    DenseMatrix Q;                  // rows x r, orthonormal columns
    DenseMatrix R;                  // r x r, upper triangular, nonnegative diagonal
    std::vector<std::size_t> kept;  // original column indices surviving the rank drop
};

/// Householder QR with column pivoting. Columns whose R-diagonal magnitude
/// falls below drop_tol * max|R-diag| are dropped, so Q * R reconstructs
/// B restricted to the kept columns. An all-zero input yields an empty
/// kept set.
QrResult dense_qr(const DenseMatrix& B, double drop_tol = 1e-10);

struct EigResult {
    Vector eigenvalues;    // ascending
    DenseMatrix eigenvectors;  // columns, A V = V diag(lambda)
};

/// Cyclic Jacobi rotations for symmetric matrices; iterates until the
/// off-diagonal Frobenius norm drops below 1e-12 * ||A||_F. Intended as a
/// robust test/diagnostic oracle, never on the solve path.
EigResult dense_sym_eig(const DenseMatrix& A);

/// Lower-triangular Cholesky factor, A = L L^T.
class CholeskyFactor {
public:
    CholeskyFactor() = default;
    explicit CholeskyFactor(DenseMatrix L) : L_(std::move(L)) {}

    std::size_t n() const { return L_.rows(); }
    const DenseMatrix& lower() const { return L_; }

    Vector solve(const Vector& b) const;

private:
    DenseMatrix L_;
};

/// Dense Cholesky; throws "not SPD" naming the pivot index on breakdown.
CholeskyFactor cholesky(const DenseMatrix& A);

}  // namespace dpcg
