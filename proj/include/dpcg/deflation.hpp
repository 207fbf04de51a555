#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpcg/dense.hpp"
#include "dpcg/grouping.hpp"
#include "dpcg/onet.hpp"
#include "dpcg/precond.hpp"
#include "dpcg/sparse.hpp"

namespace dpcg {

enum class BasisSource { nico, tb, rs, custom };

/// Columns of the tentative deflation matrix before block orthonormalization,
/// with enough provenance to replay the construction.
struct TentativeBasis {
    DenseMatrix V;  // n x k
    BasisSource source = BasisSource::custom;
    std::uint64_t seed = 0;
    std::vector<std::size_t> trunk_indices;        // TB: selected trunk components
    std::vector<std::vector<Vector>> rs_inputs;    // RS: branch inputs per column

    void validate() const;
    std::string provenance_json() const;
};

enum class NicoKind { constant, rigid_body, helmholtz_directions };

struct NicoParams {
    double k_wave = 1.0;  // Helmholtz-direction wavenumber (unspecified upstream; exposed)
};

/// Near-null-space candidate vectors: a constant column, 3D rigid-body
/// modes (coords must be 3D; dof layout x,y,z per node), or the eight
/// direction-exponential columns exp(-k x . d_j / ||d_j||).
TentativeBasis nico_vectors(NicoKind kind, const DenseMatrix& coords, const NicoParams& params = {});

/// Trunk-basis extraction: k distinct trunk output components chosen
/// uniformly without replacement (seeded), each evaluated at every node.
TentativeBasis tb_vectors(const DeepONetModel& model, const DenseMatrix& coords, std::size_t k,
                          std::uint64_t seed);

/// Recycled-solution extraction: column 1 is the prediction at the current
/// branch inputs, the rest are predictions at inputs resampled from the
/// training distribution (seeded).
TentativeBasis rs_vectors(const DeepONetModel& model, const DenseMatrix& coords, std::size_t k,
                          const std::vector<Vector>& current_branch_inputs, std::uint64_t seed);

/// Deflation operator with the block-diagonal sparsity imposed by the
/// group index sets: per-group orthonormal blocks Q_s, Galerkin coarse
/// matrix A_c = P^T A P (Cholesky-factored), and cached A P columns so one
/// iteration costs a coarse solve plus two thin products. Immutable after
/// assembly.
class DeflationOperator {
public:
    std::size_t n() const { return n_; }
    std::size_t coarse_dim() const { return coarse_dim_; }
    const IndexSets& groups() const { return groups_; }
    const std::vector<DenseMatrix>& blocks() const { return blocks_; }
    bool dropped_columns() const { return dropped_; }
    bool has_empty_group_block() const { return empty_block_; }

    /// y = P^T r
    Vector restrict(const Vector& r) const;
    /// x = P y
    Vector prolong(const Vector& y) const;
    /// (A P) y without touching A.
    Vector apply_AP(const Vector& y) const;
    /// (A P)^T r = P^T A r for symmetric A.
    Vector apply_AP_transpose(const Vector& r) const;

    /// A_c^{-1} y through the stored Cholesky factor.
    Vector coarse_solve(const Vector& y) const;

    /// C r = P A_c^{-1} P^T r
    Vector apply_C(const Vector& r) const;
    /// Pi^T r = r - A C r, matrix-free via the cached A P columns.
    Vector apply_Pi_T(const Vector& r) const;

    /// Dense P for diagnostics and oracles.
    DenseMatrix dense_P() const;

    friend DeflationOperator assemble_deflation(const SparseMatrix& A, const TentativeBasis& V,
                                                const IndexSets& groups, double drop_tol);

private:
    std::size_t n_ = 0;
    std::size_t coarse_dim_ = 0;
    IndexSets groups_;
    std::vector<DenseMatrix> blocks_;        // Q_s, |I_s| x k_s
    std::vector<std::size_t> col_offset_;    // column offset of each block in P
    CholeskyFactor coarse_factor_;
    DenseMatrix AP_;                         // n x coarse_dim
    bool dropped_ = false;
    bool empty_block_ = false;
};

/// Per-group QR of the tentative basis rows, rank drops at drop_tol, then
/// the Galerkin coarse setup. Throws if A_c loses positive definiteness.
DeflationOperator assemble_deflation(const SparseMatrix& A, const TentativeBasis& V,
                                     const IndexSets& groups, double drop_tol = 1e-10);

/// Eigenvalues (ascending) of the projected preconditioned operator
/// Pi^T M A via the A^{1/2} similarity transform; dense oracle, n <= 2500.
Vector deflated_spectrum(const SparseMatrix& A, const Preconditioner& M, const DenseMatrix& P);

/// Eigenvalues (ascending) of M A, same machinery without the projector.
Vector preconditioned_spectrum(const SparseMatrix& A, const Preconditioner& M);

/// Whitespace-separated dense matrix dump for external inspection.
void save_dense_matrix(const DenseMatrix& M, const std::string& path);

}  // namespace dpcg
