#include "dpcg/precond.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace dpcg {

namespace {

class IdentityPrecond final : public Preconditioner {
public:
    explicit IdentityPrecond(std::size_t n) : n_(n) {}
    Vector apply(const Vector& r) const override {
        if (r.size() != n_) throw std::invalid_argument("precond apply: dimension mismatch");
        return r;
    }
    PrecondKind kind() const override { return PrecondKind::identity; }
    std::size_t n() const override { return n_; }

private:
    std::size_t n_;
};

class JacobiPrecond final : public Preconditioner {
public:
    explicit JacobiPrecond(const SparseMatrix& A) : inv_diag_(A.n) {
        for (std::size_t i = 0; i < A.n; ++i) {
            const double d = A.diag(i);
            if (d <= 0.0)
                throw std::runtime_error("jacobi: nonpositive diagonal at index " + std::to_string(i));
            inv_diag_[i] = 1.0 / d;
        }
    }
    Vector apply(const Vector& r) const override {
        if (r.size() != inv_diag_.size()) throw std::invalid_argument("precond apply: dimension mismatch");
        Vector z(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
        return z;
    }
    PrecondKind kind() const override { return PrecondKind::jacobi; }
    std::size_t n() const override { return inv_diag_.size(); }

private:
    Vector inv_diag_;
};

/// M = omega (2 - omega) (D + omega L)^{-T} D (D + omega L)^{-1},
/// applied as a forward sweep, diagonal scaling, backward sweep.
class SsorPrecond final : public Preconditioner {
public:
    SsorPrecond(const SparseMatrix& A, double omega) : A_(A), omega_(omega) {
        if (omega <= 0.0 || omega >= 2.0)
            throw std::invalid_argument("ssor: omega must lie in (0, 2)");
        diag_.resize(A.n);
        for (std::size_t i = 0; i < A.n; ++i) {
            diag_[i] = A.diag(i);
            if (diag_[i] <= 0.0)
                throw std::runtime_error("ssor: nonpositive diagonal at index " + std::to_string(i));
        }
    }

    Vector apply(const Vector& r) const override {
        const std::size_t n = A_.n;
        if (r.size() != n) throw std::invalid_argument("precond apply: dimension mismatch");
        // (D + omega L) y = r
        Vector y(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double s = r[i];
            for (std::size_t k = A_.row_ptr[i]; k < A_.row_ptr[i + 1]; ++k) {
                const std::size_t j = A_.col_idx[k];
                if (j >= i) break;  // columns sorted
                s -= omega_ * A_.values[k] * y[j];
            }
            y[i] = s / diag_[i];
        }
        // w = D y, then (D + omega L)^T z = w (columns of L = rows of U).
        Vector z(n);
        for (std::size_t i = 0; i < n; ++i) z[i] = diag_[i] * y[i];
        for (std::size_t ip = n; ip > 0; --ip) {
            const std::size_t i = ip - 1;
            double s = z[i];
            for (std::size_t k = A_.row_ptr[i]; k < A_.row_ptr[i + 1]; ++k) {
                const std::size_t j = A_.col_idx[k];
                if (j <= i) continue;
                s -= omega_ * A_.values[k] * z[j];  // symmetric: A(i,j) = L(j,i)
            }
            z[i] = s / diag_[i];
        }
        const double scale = omega_ * (2.0 - omega_);
        for (double& v : z) v *= scale;
        return z;
    }
    PrecondKind kind() const override { return PrecondKind::ssor; }
    std::size_t n() const override { return A_.n; }

private:
    SparseMatrix A_;
    double omega_;
    Vector diag_;
};

/// Incomplete Cholesky with zero fill on the lower-triangular pattern of A.
class Icc0Precond final : public Preconditioner {
public:
    Icc0Precond(const SparseMatrix& A, double shift) {
        const std::size_t n = A.n;
        // Lower-triangular pattern (including diagonal), CSR.
        row_ptr_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
                if (A.col_idx[k] <= i) ++row_ptr_[i + 1];
        for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
        col_.resize(row_ptr_[n]);
        val_.resize(row_ptr_[n]);
        diag_pos_.resize(n);
        {
            std::vector<std::size_t> fill = row_ptr_;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
                    if (A.col_idx[k] <= i) {
                        col_[fill[i]] = A.col_idx[k];
                        val_[fill[i]] = A.values[k] + (A.col_idx[k] == i ? shift : 0.0);
                        if (A.col_idx[k] == i) diag_pos_[i] = fill[i];
                        fill[i]++;
                    }
        }
        factorize(n);
        n_ = n;
    }

    Vector apply(const Vector& r) const override {
        if (r.size() != n_) throw std::invalid_argument("precond apply: dimension mismatch");
        Vector y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = r[i];
            for (std::size_t k = row_ptr_[i]; k < diag_pos_[i]; ++k) s -= val_[k] * y[col_[k]];
            y[i] = s / val_[diag_pos_[i]];
        }
        Vector z = y;
        for (std::size_t ip = n_; ip > 0; --ip) {
            const std::size_t i = ip - 1;
            z[i] /= val_[diag_pos_[i]];
            const double zi = z[i];
            for (std::size_t k = row_ptr_[i]; k < diag_pos_[i]; ++k) z[col_[k]] -= val_[k] * zi;
        }
        return z;
    }
    PrecondKind kind() const override { return PrecondKind::icc0; }
    std::size_t n() const override { return n_; }

private:
    void factorize(std::size_t n) {
        // Row-oriented IC(0): entries updated in place on the fixed pattern.
        std::vector<std::ptrdiff_t> marker(n, -1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = row_ptr_[i]; k < diag_pos_[i]; ++k) marker[col_[k]] = static_cast<std::ptrdiff_t>(k);
            for (std::size_t k = row_ptr_[i]; k <= diag_pos_[i]; ++k) {
                const std::size_t j = col_[k];
                double s = val_[k];
                // Dot product of rows i and j over the shared pattern, cols < j.
                for (std::size_t kj = row_ptr_[j]; kj < diag_pos_[j]; ++kj) {
                    const std::ptrdiff_t ki = marker[col_[kj]];
                    if (ki >= 0) s -= val_[static_cast<std::size_t>(ki)] * val_[kj];
                }
                if (j == i) {
                    if (s <= 0.0)
                        throw std::runtime_error(
                            "icc0: pivot breakdown at index " + std::to_string(i) +
                            "; retry with a shifted matrix A + alpha I, alpha = 1e-3 * max diag");
                    val_[k] = std::sqrt(s);
                } else {
                    val_[k] = s / val_[diag_pos_[j]];
                }
            }
            for (std::size_t k = row_ptr_[i]; k < diag_pos_[i]; ++k) marker[col_[k]] = -1;
        }
    }

    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_, col_, diag_pos_;
    Vector val_;
};

/// One-level additive Schwarz: subdomains extended by adjacency layers,
/// subdomain blocks factored with dense Cholesky, applications summed.
class AsmPrecond final : public Preconditioner {
public:
    AsmPrecond(const SparseMatrix& A, const IndexSets& subdomains, std::size_t overlap) : n_(A.n) {
        subdomains.validate();
        if (subdomains.n_total != A.n)
            throw std::invalid_argument("asm: subdomains do not cover A");
        for (const auto& base : subdomains.sets) {
            std::vector<std::size_t> dofs = base;
            std::vector<std::uint8_t> in(A.n, 0);
            for (std::size_t i : dofs) in[i] = 1;
            for (std::size_t layer = 0; layer < overlap; ++layer) {
                std::vector<std::size_t> added;
                for (std::size_t i : dofs)
                    for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
                        const std::size_t j = A.col_idx[k];
                        if (!in[j]) {
                            in[j] = 1;
                            added.push_back(j);
                        }
                    }
                dofs.insert(dofs.end(), added.begin(), added.end());
            }
            std::sort(dofs.begin(), dofs.end());
            if (dofs.size() > 3000)
                throw std::runtime_error("asm: subdomain of " + std::to_string(dofs.size()) +
                                         " dofs exceeds the dense-solve limit of 3000");

            std::vector<std::size_t> local(A.n, A.n);
            for (std::size_t l = 0; l < dofs.size(); ++l) local[dofs[l]] = l;
            DenseMatrix block(dofs.size(), dofs.size());
            for (std::size_t l = 0; l < dofs.size(); ++l) {
                const std::size_t i = dofs[l];
                for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
                    const std::size_t j = A.col_idx[k];
                    if (local[j] != A.n) block(l, local[j]) = A.values[k];
                }
            }
            dofs_.push_back(std::move(dofs));
            factors_.push_back(cholesky(block));
        }
    }

    Vector apply(const Vector& r) const override {
        if (r.size() != n_) throw std::invalid_argument("precond apply: dimension mismatch");
        Vector z(n_, 0.0);
        for (std::size_t s = 0; s < dofs_.size(); ++s) {
            Vector rs(dofs_[s].size());
            for (std::size_t l = 0; l < rs.size(); ++l) rs[l] = r[dofs_[s][l]];
            const Vector zs = factors_[s].solve(rs);
            for (std::size_t l = 0; l < zs.size(); ++l) z[dofs_[s][l]] += zs[l];
        }
        return z;
    }
    PrecondKind kind() const override { return PrecondKind::asm_overlap; }
    std::size_t n() const override { return n_; }

private:
    std::size_t n_;
    std::vector<std::vector<std::size_t>> dofs_;
    std::vector<CholeskyFactor> factors_;
};

}  // namespace

std::unique_ptr<Preconditioner> build_preconditioner(const SparseMatrix& A, PrecondKind kind,
                                                     const PrecondOptions& opts) {
    switch (kind) {
        case PrecondKind::identity:
            return std::make_unique<IdentityPrecond>(A.n);
        case PrecondKind::jacobi:
            return std::make_unique<JacobiPrecond>(A);
        case PrecondKind::ssor:
            return std::make_unique<SsorPrecond>(A, opts.omega);
        case PrecondKind::icc0:
            return std::make_unique<Icc0Precond>(A, opts.icc_shift);
        case PrecondKind::asm_overlap:
            return std::make_unique<AsmPrecond>(A, opts.subdomains, opts.overlap);
    }
    throw std::invalid_argument("build_preconditioner: unknown kind");
}

}  // namespace dpcg
