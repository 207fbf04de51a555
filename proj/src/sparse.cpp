#include "dpcg/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace dpcg {

double SparseMatrix::diag(std::size_t i) const { return at(i, i); }

double SparseMatrix::at(std::size_t i, std::size_t j) const {
    if (i >= n || j >= n) throw std::invalid_argument("SparseMatrix::at: index out of range");
    const auto* lo = col_idx.data() + row_ptr[i];
    const auto* hi = col_idx.data() + row_ptr[i + 1];
    const auto* it = std::lower_bound(lo, hi, j);
    if (it != hi && *it == j) return values[static_cast<std::size_t>(it - col_idx.data())];
    return 0.0;
}

void SparseMatrix::validate() const {
    if (row_ptr.size() != n + 1) throw std::runtime_error("CSR: row_ptr length != n+1");
    if (row_ptr[0] != 0 || row_ptr[n] != nnz()) throw std::runtime_error("CSR: bad row_ptr bounds");
    for (std::size_t i = 0; i < n; ++i) {
        if (row_ptr[i] > row_ptr[i + 1]) throw std::runtime_error("CSR: row_ptr not nondecreasing");
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col_idx[k] >= n) throw std::runtime_error("CSR: column index out of range");
            if (k > row_ptr[i] && col_idx[k - 1] >= col_idx[k])
                throw std::runtime_error("CSR: columns not strictly increasing in row " + std::to_string(i));
        }
    }
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
    double amax = 0.0;
    for (double v : values) amax = std::max(amax, std::abs(v));
    const double tol = rel_tol * std::max(amax, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (std::abs(values[k] - at(col_idx[k], i)) > tol) return false;
    return true;
}

void TripletBuilder::add(std::size_t i, std::size_t j, double v) {
    if (i >= n_ || j >= n_) throw std::invalid_argument("TripletBuilder::add: index out of range");
    is_.push_back(i);
    js_.push_back(j);
    vs_.push_back(v);
}

SparseMatrix TripletBuilder::build() const {
    std::vector<std::size_t> order(is_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (is_[a] != is_[b]) return is_[a] < is_[b];
        return js_[a] < js_[b];
    });

    SparseMatrix A;
    A.n = n_;
    A.row_ptr.assign(n_ + 1, 0);
    std::size_t last_i = n_, last_j = n_;  // sentinel: no entry yet
    for (std::size_t k : order) {
        if (!A.values.empty() && is_[k] == last_i && js_[k] == last_j) {
            A.values.back() += vs_[k];
            continue;
        }
        A.row_ptr[is_[k] + 1] += 1;
        A.col_idx.push_back(js_[k]);
        A.values.push_back(vs_[k]);
        last_i = is_[k];
        last_j = js_[k];
    }
    for (std::size_t i = 0; i < n_; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
    A.validate();
    return A;
}

SparseMatrix identity_csr(std::size_t n) {
    SparseMatrix A;
    A.n = n;
    A.row_ptr.resize(n + 1);
    A.col_idx.resize(n);
    A.values.assign(n, 1.0);
    for (std::size_t i = 0; i <= n; ++i) A.row_ptr[i] = i;
    for (std::size_t i = 0; i < n; ++i) A.col_idx[i] = i;
    return A;
}

Vector spmv(const SparseMatrix& A, const Vector& x) {
    if (x.size() != A.n)
        throw std::invalid_argument("spmv: dimension mismatch, n=" + std::to_string(A.n) +
                                    " len(x)=" + std::to_string(x.size()));
    Vector y(A.n, 0.0);
    for (std::size_t i = 0; i < A.n; ++i) {
        double s = 0.0;
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            s += A.values[k] * x[A.col_idx[k]];
        y[i] = s;
    }
    return y;
}

Vector residual(const SparseMatrix& A, const Vector& x, const Vector& b) {
    Vector r = spmv(A, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return r;
}

void write_matrix_market(const SparseMatrix& A, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    std::size_t count = 0;
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            if (A.col_idx[k] <= i) ++count;
    out << A.n << " " << A.n << " " << count << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            if (A.col_idx[k] <= i)
                out << (i + 1) << " " << (A.col_idx[k] + 1) << " " << A.values[k] << "\n";
    if (!out) throw std::runtime_error("write_matrix_market: write failed for " + path);
}

SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_market: cannot open " + path);
    std::string header;
    std::getline(in, header);
    if (header.rfind("%%MatrixMarket", 0) != 0)
        throw std::runtime_error("read_matrix_market: missing MatrixMarket banner in " + path);
    const bool symmetric = header.find("symmetric") != std::string::npos;
    if (header.find("coordinate") == std::string::npos || header.find("real") == std::string::npos)
        throw std::runtime_error("read_matrix_market: only coordinate real files supported");

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    std::istringstream sz(line);
    std::size_t rows = 0, cols = 0, entries = 0;
    if (!(sz >> rows >> cols >> entries) || rows != cols)
        throw std::runtime_error("read_matrix_market: bad size line in " + path);

    TripletBuilder tb(rows);
    for (std::size_t e = 0; e < entries; ++e) {
        std::size_t i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v))
            throw std::runtime_error("read_matrix_market: truncated entry list in " + path);
        if (i < 1 || j < 1 || i > rows || j > cols)
            throw std::runtime_error("read_matrix_market: index out of range in " + path);
        tb.add(i - 1, j - 1, v);
        if (symmetric && i != j) tb.add(j - 1, i - 1, v);
    }
    return tb.build();
}

void write_vector(const Vector& v, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vector: cannot open " + path);
    out.precision(17);
    for (double x : v) out << x << "\n";
}

Vector read_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_vector: cannot open " + path);
    Vector v;
    double x = 0.0;
    while (in >> x) v.push_back(x);
    return v;
}

}  // namespace dpcg
