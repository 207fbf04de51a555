#pragma once

#include <string>

#include "dpcg/deflation.hpp"
#include "dpcg/precond.hpp"
#include "dpcg/sparse.hpp"

namespace dpcg {

struct SolveOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-9;
    std::size_t max_iter = 0;  // 0 -> 10 n
    bool record_history = true;
    std::size_t residual_recompute_every = 0;  // 0 = only at the convergence check exit
};

struct SolveReport {
    Vector u;
    std::size_t iterations = 0;
    bool converged = false;
    std::string reason;
    std::vector<double> residual_history;  // 2-norms, entry 0 is the initial residual
    double final_abs_residual = 0.0;       // true residual, recomputed at exit
    double final_rel_residual = 0.0;       // relative to the initial residual norm
    double deflation_residual_check = 0.0; // max_i ||P^T r_i|| / ||f||
    double setup_seconds = 0.0;
    double iterate_seconds = 0.0;

    std::string to_json() const;
    void write_residual_csv(const std::string& path) const;
};

/// Deflated preconditioned conjugate gradients. Reduces to plain PCG when
/// D is null and to CG when additionally M is the identity. The
/// user-supplied guess is projected, u0 = u00 + C (f - A u00), so the
/// initial residual is orthogonal to the coarse space; P mu is subtracted
/// from every search direction thereafter. Stops when ||r|| <= abs_tol or
/// ||r|| / ||r0|| <= rel_tol; on a recurrence-residual pass the true
/// residual is recomputed and must pass too.
SolveReport solve(const SparseMatrix& A, const Vector& f, const Vector& u00,
                  const Preconditioner& M, const DeflationOperator* D, const SolveOptions& opts = {});

/// Average relative iteration reduction per deflation vector,
/// (N_PCG - N_DPCG) / (k N_PCG); negative when deflation hurt.
double estimate_theta(std::size_t n_pcg, std::size_t n_dpcg, std::size_t k);

/// Per-vector relative overhead calibrated so the resulting break-even
/// curve passes as close as possible to both reference operating points.
inline constexpr double kDefaultCostRatio = 1.0 / 152.5;

/// Break-even deflation count under the linear cost model: per-iteration
/// relative overhead cost_ratio * k against the modeled reduction
/// N(k) = (1 - theta k) N_PCG, giving
/// k* = (theta - cost_ratio) / (theta * cost_ratio), clipped at zero.
std::size_t break_even_k(double theta, double cost_ratio = kDefaultCostRatio);

}  // namespace dpcg
