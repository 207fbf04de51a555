#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dpcg/vec.hpp"

namespace dpcg {

/// Square sparse matrix in CSR format. Column indices are strictly
/// increasing within each row; for SPD inputs pattern and values are
/// symmetric (checked on demand, not on construction).
struct SparseMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // length n+1, nondecreasing
    std::vector<std::size_t> col_idx;  // length nnz, within [0, n)
    std::vector<double> values;        // length nnz

    std::size_t nnz() const { return values.size(); }

    double diag(std::size_t i) const;

    /// Entry lookup by binary search within the row; 0 if not stored.
    double at(std::size_t i, std::size_t j) const;

    void validate() const;
    bool is_symmetric(double rel_tol = 1e-12) const;
};

/// Accumulates (i, j, value) triplets and finalizes to CSR with sorted
/// columns; duplicate entries are summed.
class TripletBuilder {
public:
    explicit TripletBuilder(std::size_t n) : n_(n) {}

    void add(std::size_t i, std::size_t j, double v);
    SparseMatrix build() const;

private:
    std::size_t n_;
    std::vector<std::size_t> is_, js_;
    std::vector<double> vs_;
};

SparseMatrix identity_csr(std::size_t n);

/// y = A x on the stored pattern.
Vector spmv(const SparseMatrix& A, const Vector& x);

/// r = b - A x
Vector residual(const SparseMatrix& A, const Vector& x, const Vector& b);

// Matrix Market coordinate format, 1-based indices on disk. Symmetric
// matrices store the lower triangle only.
void write_matrix_market(const SparseMatrix& A, const std::string& path);
SparseMatrix read_matrix_market(const std::string& path);

void write_vector(const Vector& v, const std::string& path);
Vector read_vector(const std::string& path);

}  // namespace dpcg
