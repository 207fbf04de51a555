#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dpcg/dense.hpp"
#include "dpcg/vec.hpp"

namespace dpcg {

/// Uniform 2D grid of interior nodes with lexicographic ordering,
/// node id = iy * nx + ix. Node (ix, iy) sits at ((ix+1) h, (iy+1) h);
/// the boundary ring carries homogeneous Dirichlet data and is eliminated.
/// Cells are the (nx+1) x (ny+1) squares of the lattice, cell id
/// cy * (nx+1) + cx, cell (cx, cy) = [cx h, (cx+1) h] x [cy h, (cy+1) h].
struct Grid2D {
    std::size_t nx = 0, ny = 0;
    double h = 0.0;

    Grid2D() = default;
    Grid2D(std::size_t nx_, std::size_t ny_, double h_);

    /// nx = ny = n interior nodes on [0,1]^2, h = 1/(n+1).
    static Grid2D unit_square(std::size_t n);

    std::size_t node_count() const { return nx * ny; }
    std::size_t cell_count() const { return (nx + 1) * (ny + 1); }

    std::size_t node_id(std::size_t ix, std::size_t iy) const { return iy * nx + ix; }
    std::size_t cell_id(std::size_t cx, std::size_t cy) const { return cy * (nx + 1) + cx; }

    double node_x(std::size_t ix) const { return static_cast<double>(ix + 1) * h; }
    double node_y(std::size_t iy) const { return static_cast<double>(iy + 1) * h; }

    /// Node coordinates as an (nx*ny) x 2 matrix.
    DenseMatrix node_coords() const;
    /// Cell-center coordinates as a cell_count() x 2 matrix.
    DenseMatrix cell_coords() const;
};

enum class Placement { cell, node };

/// Scalar data attached to either the cells or the nodes of a grid.
struct ScalarField {
    Placement placement = Placement::node;
    Vector values;

    ScalarField() = default;
    ScalarField(Placement p, Vector v) : placement(p), values(std::move(v)) {}

    void check_matches(const Grid2D& g) const {
        const std::size_t want = placement == Placement::cell ? g.cell_count() : g.node_count();
        if (values.size() != want)
            throw std::invalid_argument("ScalarField: length does not match grid");
    }
};

}  // namespace dpcg
