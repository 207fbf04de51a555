#pragma once

#include <cstdint>

#include "dpcg/onet.hpp"
#include "dpcg/problems.hpp"

namespace dpcg {

/// One sampled system together with the branch inputs that describe it to
/// the surrogate.
struct ProblemInstance {
    ParametricProblem problem;
    std::vector<Vector> branch_inputs;
};

/// Uniform 1D sensor locations (j+1)/(ny+1), as an ny x 1 matrix.
DenseMatrix sensor_line(std::size_t ny);

/// Uniform 2D sensor lattice of side x side points at ((i+0.5)/side,
/// (j+0.5)/side), as a (side*side) x 2 matrix.
DenseMatrix sensor_lattice(std::size_t side);

/// Channel mask defined in physical units: vertical and horizontal strips
/// of the given width repeating with the given period; a cell is masked
/// when its center falls in a strip. On the canonical 50x50 benchmark grid
/// the defaults reproduce bars of two cells every ten cells, and the same
/// physical pattern carries across resolutions.
std::vector<std::uint8_t> geometric_channel_mask(const Grid2D& grid, double period = 0.2,
                                                 double width = 0.04);

/// Node labels for the jumping-coefficient problem: 1 when any incident
/// cell is masked, else 0.
std::vector<int> channel_node_labels(const Grid2D& grid, const std::vector<std::uint8_t>& mask);

// -- Offline stage: training data ------------------------------------------

/// 1D Poisson with a GRF forcing term; branch input is the forcing sampled
/// at ny sensor locations (jointly with the nodes, one realization).
Dataset gen_poisson1d_dataset(std::size_t n_grid, std::size_t ny, std::size_t n_samples,
                              std::uint64_t seed);

/// Variable-coefficient Darcy, two branches: log-diffusivity at the sensor
/// lattice and the forcing at the sensor lattice. The diffusivity is
/// exp(G) with G a GRF of mean log(0.5), sigma 1, ell 0.1; the forcing is
/// a GRF of mean 0, sigma 1, ell 0.05.
Dataset gen_darcy_dataset(std::size_t n_grid, std::size_t sensor_side, std::size_t n_samples,
                          std::uint64_t seed);

/// Jumping-coefficient Darcy; a single scalar branch input log10(K_channel)
/// with log10 K ~ U[0, 5].
Dataset gen_jumpdarcy_dataset(std::size_t n_grid, std::size_t n_samples, std::uint64_t seed);

/// Implicit-Euler heat runs: branch input is the scalar diffusivity
/// K ~ U[1, 2]; the trunk is time-augmented, one coordinate set per step.
Dataset gen_heat_dataset(std::size_t n_grid, std::size_t n_runs, std::size_t steps, double dt,
                         std::uint64_t seed);

// -- Online stage: fresh systems with matching branch inputs ---------------

ProblemInstance sample_poisson1d_instance(std::size_t n, const DenseMatrix& sensor_coords,
                                          std::uint64_t seed);

ProblemInstance sample_darcy_instance(const Grid2D& grid, const DenseMatrix& sensor_coords,
                                      std::uint64_t seed);

/// K_channel drawn as log10 K ~ U[0, 5] when fixed_k <= 0, else fixed.
ProblemInstance sample_jumpdarcy_instance(const Grid2D& grid, std::uint64_t seed,
                                          double fixed_k = -1.0);

/// One heat step; the caller owns the marching state. Coordinates carry
/// the step time in the third column.
ProblemInstance make_heat_step_instance(const Grid2D& grid, double K, double dt, double t,
                                        const Vector& u_prev);

}  // namespace dpcg
