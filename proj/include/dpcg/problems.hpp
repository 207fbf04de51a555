#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "dpcg/grid.hpp"
#include "dpcg/sparse.hpp"

namespace dpcg {

/// Record of the sampled parameters behind a problem instance.
struct ThetaRecord {
    std::string kind;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> params;
};

/// Optional implicit-Euler parts, kept so tests can verify the
/// time-stepping identity A = (1/dt) M + K * K_stiff.
struct TimeStepParts {
    SparseMatrix mass;       // lumped, diagonal
    SparseMatrix stiffness;  // unit-coefficient stiffness
    double k_coeff = 1.0;
    double dt = 0.0;
};

/// One assembled SPD system A u = f together with node coordinates.
struct ParametricProblem {
    SparseMatrix A;
    Vector f;
    DenseMatrix coords;  // n x d node coordinates
    ThetaRecord theta;
    std::optional<TimeStepParts> time_parts;
};

/// 1D Dirichlet Poisson on (0,1): A = (1/h^2) tridiag(-1, 2, -1),
/// h = 1/(n+1), f sampled at the interior nodes.
ParametricProblem build_poisson_1d(std::size_t n, const std::function<double(double)>& f);

/// Gaussian random field with covariance
///   Cov(x1, x2) = sigma^2 exp(-||x1 - x2|| / (2 ell^2)),
/// realized by dense Cholesky of the covariance plus 1e-10 jitter.
/// Factors once, draws many; sites are arbitrary coordinate rows.
class GrfSampler {
public:
    GrfSampler(const DenseMatrix& sites, double mean, double sigma, double ell);

    Vector draw(Rng& rng) const;
    std::size_t site_count() const { return chol_.n(); }

private:
    double mean_;
    CholeskyFactor chol_;
};

/// One-shot GRF draw on the grid (placement chooses cell centers or nodes).
ScalarField sample_grf(const Grid2D& grid, double mean, double sigma, double ell,
                       std::uint64_t seed, Placement placement = Placement::node);

/// Variable-coefficient Darcy on the grid: 5-point flux-form finite
/// differences, edge coefficient = harmonic mean of the two cells sharing
/// the edge, Dirichlet rows eliminated. K must be cell-placed and
/// strictly positive; f node-placed.
ParametricProblem build_darcy_2d(const Grid2D& grid, const ScalarField& K, const ScalarField& f);

/// Channel mask on cells: vertical + horizontal bars of the given width
/// every `spacing` cells (the documented stand-in for the pictorial
/// channel pattern).
std::vector<std::uint8_t> default_channel_mask(const Grid2D& grid, std::size_t spacing = 10,
                                               std::size_t width = 2);

/// Fixed right-hand side of the jumping-coefficient benchmark,
/// f(x) = sin(4 pi x1) sin(2 pi x2) sin(2 pi x1 x2).
double jump_darcy_rhs(double x1, double x2);

/// Darcy with K = 1 off-channel and K = K_channel on masked cells,
/// K_channel in [1, 1e5]; f sampled from jump_darcy_rhs at the nodes.
ParametricProblem build_jump_darcy(const Grid2D& grid, const std::vector<std::uint8_t>& channel_mask,
                                   double K_channel);

/// Implicit-Euler heat step on the grid: A = (1/dt) M + K * K_stiff with a
/// lumped mass matrix, f = (1/dt) M u_prev. K in [1, 2], dt > 0.
ParametricProblem heat_step_system(const Grid2D& grid, double K, double dt, const Vector& u_prev);

/// Initial heat state u0(x, y) = exp(-5 (x^2 + y^2)) at the nodes.
Vector heat_initial_condition(const Grid2D& grid);

}  // namespace dpcg
