#include "dpcg/grid.hpp"

namespace dpcg {

Grid2D::Grid2D(std::size_t nx_, std::size_t ny_, double h_) : nx(nx_), ny(ny_), h(h_) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("Grid2D: need nx, ny >= 2");
    if (h <= 0.0) throw std::invalid_argument("Grid2D: need h > 0");
}

Grid2D Grid2D::unit_square(std::size_t n) {
    return Grid2D(n, n, 1.0 / static_cast<double>(n + 1));
}

DenseMatrix Grid2D::node_coords() const {
    DenseMatrix c(node_count(), 2);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t id = node_id(ix, iy);
            c(id, 0) = node_x(ix);
            c(id, 1) = node_y(iy);
        }
    return c;
}

DenseMatrix Grid2D::cell_coords() const {
    DenseMatrix c(cell_count(), 2);
    for (std::size_t cy = 0; cy <= ny; ++cy)
        for (std::size_t cx = 0; cx <= nx; ++cx) {
            const std::size_t id = cell_id(cx, cy);
            c(id, 0) = (static_cast<double>(cx) + 0.5) * h;
            c(id, 1) = (static_cast<double>(cy) + 0.5) * h;
        }
    return c;
}

}  // namespace dpcg
