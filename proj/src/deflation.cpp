#include "dpcg/deflation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace dpcg {

void TentativeBasis::validate() const {
    if (V.cols() < 1) throw std::runtime_error("TentativeBasis: need k >= 1");
    for (std::size_t j = 0; j < V.cols(); ++j) {
        bool nonzero = false;
        for (std::size_t i = 0; i < V.rows(); ++i)
            if (V(i, j) != 0.0) {
                nonzero = true;
                break;
            }
        if (!nonzero)
            throw std::runtime_error("TentativeBasis: column " + std::to_string(j) + " is all zero");
    }
}

std::string TentativeBasis::provenance_json() const {
    nlohmann::json j;
    switch (source) {
        case BasisSource::nico: j["source"] = "nico"; break;
        case BasisSource::tb: j["source"] = "tb"; break;
        case BasisSource::rs: j["source"] = "rs"; break;
        case BasisSource::custom: j["source"] = "custom"; break;
    }
    j["seed"] = seed;
    j["k"] = V.cols();
    if (!trunk_indices.empty()) j["trunk_indices"] = trunk_indices;
    if (!rs_inputs.empty()) j["rs_branch_inputs"] = rs_inputs;
    return j.dump();
}

TentativeBasis nico_vectors(NicoKind kind, const DenseMatrix& coords, const NicoParams& params) {
    if (coords.rows() == 0) throw std::invalid_argument("nico_vectors: empty coordinate list");
    TentativeBasis basis;
    basis.source = BasisSource::nico;

    switch (kind) {
        case NicoKind::constant: {
            basis.V = DenseMatrix(coords.rows(), 1, 1.0);
            break;
        }
        case NicoKind::rigid_body: {
            if (coords.cols() != 3)
                throw std::invalid_argument("nico_vectors: rigid-body modes need 3D coordinates");
            const std::size_t nn = coords.rows();
            basis.V = DenseMatrix(3 * nn, 6);
            for (std::size_t i = 0; i < nn; ++i) {
                const double x = coords(i, 0), y = coords(i, 1), z = coords(i, 2);
                // Translations and rotations, one 3 x 6 block per node.
                const double block[3][6] = {
                    {1, 0, 0, 0, z, -y},
                    {0, 1, 0, -z, 0, x},
                    {0, 0, 1, y, -x, 0},
                };
                for (std::size_t r = 0; r < 3; ++r)
                    for (std::size_t c = 0; c < 6; ++c) basis.V(3 * i + r, c) = block[r][c];
            }
            break;
        }
        case NicoKind::helmholtz_directions: {
            if (coords.cols() != 2)
                throw std::invalid_argument("nico_vectors: direction vectors need 2D coordinates");
            static const double dirs[8][2] = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                              {1, 1},  {-1, -1}, {-1, 1}, {1, -1}};
            basis.V = DenseMatrix(coords.rows(), 8);
            for (std::size_t j = 0; j < 8; ++j) {
                const double nrm = std::sqrt(dirs[j][0] * dirs[j][0] + dirs[j][1] * dirs[j][1]);
                for (std::size_t i = 0; i < coords.rows(); ++i) {
                    const double proj = (coords(i, 0) * dirs[j][0] + coords(i, 1) * dirs[j][1]) / nrm;
                    basis.V(i, j) = std::exp(-params.k_wave * proj);
                }
            }
            break;
        }
        default:
            throw std::invalid_argument("nico_vectors: unknown kind");
    }
    basis.validate();
    return basis;
}

TentativeBasis tb_vectors(const DeepONetModel& model, const DenseMatrix& coords, std::size_t k,
                          std::uint64_t seed) {
    if (k < 1 || k > model.p)
        throw std::invalid_argument("tb_vectors: need 1 <= k <= p (p = " + std::to_string(model.p) +
                                    ")");
    Rng rng(seed);
    TentativeBasis basis;
    basis.source = BasisSource::tb;
    basis.seed = seed;
    basis.trunk_indices = rng.sample_without_replacement(model.p, k);

    const DenseMatrix T = trunk_matrix(model, coords);
    basis.V = DenseMatrix(coords.rows(), k);
    for (std::size_t l = 0; l < k; ++l)
        for (std::size_t i = 0; i < coords.rows(); ++i) basis.V(i, l) = T(i, basis.trunk_indices[l]);
    basis.validate();
    return basis;
}

TentativeBasis rs_vectors(const DeepONetModel& model, const DenseMatrix& coords, std::size_t k,
                          const std::vector<Vector>& current_branch_inputs, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("rs_vectors: need k >= 1");
    if (k > 1) {
        for (const auto& b : model.branches)
            if (b.distribution.kind.empty())
                throw std::runtime_error(
                    "rs_vectors: model lacks branch-input distribution metadata needed for k > 1");
    }

    Rng rng(seed);
    TentativeBasis basis;
    basis.source = BasisSource::rs;
    basis.seed = seed;
    basis.V = DenseMatrix(coords.rows(), k);

    basis.rs_inputs.push_back(current_branch_inputs);
    basis.V.set_col(0, deeponet_eval(model, current_branch_inputs, coords));
    for (std::size_t l = 1; l < k; ++l) {
        const std::vector<Vector> inputs = sample_branch_inputs(model, rng);
        basis.rs_inputs.push_back(inputs);
        basis.V.set_col(l, deeponet_eval(model, inputs, coords));
    }
    basis.validate();
    return basis;
}

DeflationOperator assemble_deflation(const SparseMatrix& A, const TentativeBasis& V,
                                     const IndexSets& groups, double drop_tol) {
    if (V.V.rows() != A.n)
        throw std::invalid_argument("assemble_deflation: basis rows do not match A");
    groups.validate();
    if (groups.n_total != A.n)
        throw std::invalid_argument("assemble_deflation: groups do not cover A");

    DeflationOperator D;
    D.n_ = A.n;
    D.groups_ = groups;

    const std::size_t k = V.V.cols();
    for (const auto& set : groups.sets) {
        DenseMatrix block(set.size(), k);
        bool any = false;
        for (std::size_t r = 0; r < set.size(); ++r)
            for (std::size_t c = 0; c < k; ++c) {
                block(r, c) = V.V(set[r], c);
                if (block(r, c) != 0.0) any = true;
            }
        if (!any) {
            // A group whose rows are all zero contributes no columns.
            D.blocks_.emplace_back(set.size(), 0);
            D.col_offset_.push_back(D.coarse_dim_);
            D.empty_block_ = true;
            continue;
        }
        QrResult qr = dense_qr(block, drop_tol);
        if (qr.kept.size() < k) D.dropped_ = true;
        if (qr.kept.empty()) D.empty_block_ = true;
        D.col_offset_.push_back(D.coarse_dim_);
        D.coarse_dim_ += qr.kept.size();
        D.blocks_.push_back(std::move(qr.Q));
    }
    if (D.coarse_dim_ == 0)
        throw std::runtime_error("assemble_deflation: every block dropped to rank zero");

    // Cache A P one column at a time (k * S spmv's, once per assembly).
    D.AP_ = DenseMatrix(A.n, D.coarse_dim_);
    for (std::size_t s = 0; s < D.blocks_.size(); ++s) {
        const auto& set = groups.sets[s];
        for (std::size_t c = 0; c < D.blocks_[s].cols(); ++c) {
            Vector pcol(A.n, 0.0);
            for (std::size_t r = 0; r < set.size(); ++r) pcol[set[r]] = D.blocks_[s](r, c);
            const Vector ap = spmv(A, pcol);
            D.AP_.set_col(D.col_offset_[s] + c, ap);
        }
    }

    // A_c = P^T (A P), SPD by construction unless drops broke full rank.
    DenseMatrix Ac(D.coarse_dim_, D.coarse_dim_);
    for (std::size_t s = 0; s < D.blocks_.size(); ++s) {
        const auto& set = groups.sets[s];
        const DenseMatrix& Q = D.blocks_[s];
        for (std::size_t c = 0; c < Q.cols(); ++c) {
            const std::size_t row = D.col_offset_[s] + c;
            for (std::size_t j = 0; j < D.coarse_dim_; ++j) {
                double sum = 0.0;
                for (std::size_t r = 0; r < set.size(); ++r) sum += Q(r, c) * D.AP_(set[r], j);
                Ac(row, j) = sum;
            }
        }
    }
    try {
        D.coarse_factor_ = cholesky(Ac);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string("assemble_deflation: coarse matrix not SPD (") +
                                 e.what() + "); consider a larger drop_tol");
    }
    return D;
}

Vector DeflationOperator::restrict(const Vector& r) const {
    if (r.size() != n_) throw std::invalid_argument("DeflationOperator::restrict: dimension mismatch");
    Vector y(coarse_dim_, 0.0);
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
        const auto& set = groups_.sets[s];
        const DenseMatrix& Q = blocks_[s];
        for (std::size_t c = 0; c < Q.cols(); ++c) {
            double sum = 0.0;
            for (std::size_t l = 0; l < set.size(); ++l) sum += Q(l, c) * r[set[l]];
            y[col_offset_[s] + c] = sum;
        }
    }
    return y;
}

Vector DeflationOperator::prolong(const Vector& y) const {
    if (y.size() != coarse_dim_)
        throw std::invalid_argument("DeflationOperator::prolong: dimension mismatch");
    Vector x(n_, 0.0);
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
        const auto& set = groups_.sets[s];
        const DenseMatrix& Q = blocks_[s];
        for (std::size_t l = 0; l < set.size(); ++l) {
            double sum = 0.0;
            for (std::size_t c = 0; c < Q.cols(); ++c) sum += Q(l, c) * y[col_offset_[s] + c];
            x[set[l]] = sum;
        }
    }
    return x;
}

Vector DeflationOperator::apply_AP(const Vector& y) const { return AP_.mult(y); }

Vector DeflationOperator::apply_AP_transpose(const Vector& r) const {
    return AP_.mult_transpose(r);
}

Vector DeflationOperator::coarse_solve(const Vector& y) const {
    if (y.size() != coarse_dim_)
        throw std::invalid_argument("DeflationOperator::coarse_solve: dimension mismatch");
    return coarse_factor_.solve(y);
}

Vector DeflationOperator::apply_C(const Vector& r) const { return prolong(coarse_solve(restrict(r))); }

Vector DeflationOperator::apply_Pi_T(const Vector& r) const {
    if (r.size() != n_) throw std::invalid_argument("DeflationOperator::apply_Pi_T: dimension mismatch");
    const Vector mu = coarse_solve(restrict(r));
    Vector out = r;
    const Vector correction = AP_.mult(mu);
    for (std::size_t i = 0; i < n_; ++i) out[i] -= correction[i];
    return out;
}

DenseMatrix DeflationOperator::dense_P() const {
    DenseMatrix P(n_, coarse_dim_);
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
        const auto& set = groups_.sets[s];
        for (std::size_t l = 0; l < set.size(); ++l)
            for (std::size_t c = 0; c < blocks_[s].cols(); ++c)
                P(set[l], col_offset_[s] + c) = blocks_[s](l, c);
    }
    return P;
}

namespace {

// M as a dense matrix: preconditioner applied to the unit vectors.
DenseMatrix dense_precond(const Preconditioner& M, std::size_t n) {
    DenseMatrix D(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        D.set_col(j, M.apply(e));
        e[j] = 0.0;
    }
    return D;
}

// A^{1/2} of an SPD matrix via its eigendecomposition.
DenseMatrix dense_sqrt(const DenseMatrix& A) {
    const EigResult eig = dense_sym_eig(A);
    const std::size_t n = A.rows();
    DenseMatrix S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double lam = eig.eigenvalues[k];
                if (lam <= 0.0)
                    throw std::runtime_error("deflated_spectrum: A is not positive definite");
                sum += eig.eigenvectors(i, k) * std::sqrt(lam) * eig.eigenvectors(j, k);
            }
            S(i, j) = sum;
        }
    return S;
}

}  // namespace

Vector preconditioned_spectrum(const SparseMatrix& A, const Preconditioner& M) {
    if (A.n > 2500) throw std::invalid_argument("preconditioned_spectrum: n exceeds dense limit 2500");
    const DenseMatrix Ad = DenseMatrix::from_sparse(A);
    const DenseMatrix Ahalf = dense_sqrt(Ad);
    const DenseMatrix Md = dense_precond(M, A.n);
    // sigma(M A) = sigma(A^{1/2} M A^{1/2}), symmetric.
    const DenseMatrix S = Ahalf.mult(Md).mult(Ahalf);
    DenseMatrix Ssym(A.n, A.n);
    for (std::size_t i = 0; i < A.n; ++i)
        for (std::size_t j = 0; j < A.n; ++j) Ssym(i, j) = 0.5 * (S(i, j) + S(j, i));
    return dense_sym_eig(Ssym).eigenvalues;
}

Vector deflated_spectrum(const SparseMatrix& A, const Preconditioner& M, const DenseMatrix& P) {
    if (A.n > 2500) throw std::invalid_argument("deflated_spectrum: n exceeds dense limit 2500");
    const std::size_t n = A.n;
    const DenseMatrix Ad = DenseMatrix::from_sparse(A);
    const DenseMatrix Ahalf = dense_sqrt(Ad);
    const DenseMatrix Md = dense_precond(M, n);

    // Pi^T M A is similar to (I - Chat) Mhat (I - Chat) with
    // Chat = A^{1/2} P (P^T A P)^{-1} P^T A^{1/2} an orthogonal projector
    // and Mhat = A^{1/2} M A^{1/2}; same spectrum, symmetric form.
    const DenseMatrix W = Ahalf.mult(P);  // n x K
    const std::size_t K = P.cols();
    DenseMatrix G(K, K);
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += W(i, a) * W(i, b);
            G(a, b) = sum;
        }
    const CholeskyFactor Gf = cholesky(G);

    // Q = I - W G^{-1} W^T
    DenseMatrix Qproj = DenseMatrix::identity(n);
    for (std::size_t j = 0; j < n; ++j) {
        Vector wj(K);
        for (std::size_t a = 0; a < K; ++a) wj[a] = W(j, a);
        const Vector gj = Gf.solve(wj);
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t a = 0; a < K; ++a) sum += W(i, a) * gj[a];
            Qproj(i, j) -= sum;
        }
    }

    const DenseMatrix Mhat = Ahalf.mult(Md).mult(Ahalf);
    const DenseMatrix S = Qproj.mult(Mhat).mult(Qproj);
    DenseMatrix Ssym(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Ssym(i, j) = 0.5 * (S(i, j) + S(j, i));
    return dense_sym_eig(Ssym).eigenvalues;
}

void save_dense_matrix(const DenseMatrix& M, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_dense_matrix: cannot open " + path);
    out.precision(17);
    for (std::size_t i = 0; i < M.rows(); ++i) {
        for (std::size_t j = 0; j < M.cols(); ++j) {
            if (j) out << " ";
            out << M(i, j);
        }
        out << "\n";
    }
}

}  // namespace dpcg
