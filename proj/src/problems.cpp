#include "dpcg/problems.hpp"

#include <cmath>
#include <stdexcept>

namespace dpcg {

ParametricProblem build_poisson_1d(std::size_t n, const std::function<double(double)>& f) {
    if (n < 2) throw std::invalid_argument("build_poisson_1d: need n >= 2");
    const double h = 1.0 / static_cast<double>(n + 1);
    const double w = 1.0 / (h * h);

    TripletBuilder tb(n);
    for (std::size_t i = 0; i < n; ++i) {
        tb.add(i, i, 2.0 * w);
        if (i > 0) tb.add(i, i - 1, -w);
        if (i + 1 < n) tb.add(i, i + 1, -w);
    }

    ParametricProblem p;
    p.A = tb.build();
    p.f.resize(n);
    p.coords = DenseMatrix(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) * h;
        p.coords(i, 0) = x;
        p.f[i] = f(x);
    }
    p.theta.kind = "poisson1d";
    return p;
}

GrfSampler::GrfSampler(const DenseMatrix& sites, double mean, double sigma, double ell)
    : mean_(mean) {
    if (sigma <= 0.0) throw std::invalid_argument("GrfSampler: need sigma > 0");
    if (ell <= 0.0) throw std::invalid_argument("GrfSampler: need ell > 0");
    const std::size_t m = sites.rows();
    if (m > 20000)
        throw std::invalid_argument("GrfSampler: " + std::to_string(m) +
                                    " sites exceed the dense-covariance limit of 20000");
    const double denom = 2.0 * ell * ell;
    DenseMatrix cov(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < sites.cols(); ++c) {
                const double d = sites(i, c) - sites(j, c);
                d2 += d * d;
            }
            const double v = sigma * sigma * std::exp(-std::sqrt(d2) / denom);
            cov(i, j) = v;
            cov(j, i) = v;
        }
        cov(i, i) += 1e-10;
    }
    chol_ = cholesky(cov);
}

Vector GrfSampler::draw(Rng& rng) const {
    const std::size_t m = chol_.n();
    Vector z = rng.normal_vector(m);
    Vector field(m, mean_);
    const DenseMatrix& L = chol_.lower();
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) s += L(i, j) * z[j];
        field[i] += s;
    }
    return field;
}

ScalarField sample_grf(const Grid2D& grid, double mean, double sigma, double ell,
                       std::uint64_t seed, Placement placement) {
    const DenseMatrix sites =
        placement == Placement::cell ? grid.cell_coords() : grid.node_coords();
    GrfSampler sampler(sites, mean, sigma, ell);
    Rng rng(seed);
    return ScalarField(placement, sampler.draw(rng));
}

namespace {

// Harmonic mean of the K values on the two cells sharing an edge.
double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

ParametricProblem build_darcy_2d(const Grid2D& grid, const ScalarField& K, const ScalarField& f) {
    if (K.placement != Placement::cell)
        throw std::invalid_argument("build_darcy_2d: K must be cell-placed");
    if (f.placement != Placement::node)
        throw std::invalid_argument("build_darcy_2d: f must be node-placed");
    K.check_matches(grid);
    f.check_matches(grid);
    for (double v : K.values)
        if (v <= 0.0) throw std::invalid_argument("build_darcy_2d: K must be strictly positive");

    const std::size_t nx = grid.nx, ny = grid.ny;
    const double w = 1.0 / (grid.h * grid.h);
    const auto kcell = [&](std::size_t cx, std::size_t cy) { return K.values[grid.cell_id(cx, cy)]; };

    TripletBuilder tb(grid.node_count());
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t id = grid.node_id(ix, iy);
            // Node (ix, iy) sits at lattice point (ix+1, iy+1). The edge to
            // its east neighbour separates cells (ix+1, iy) and (ix+1, iy+1);
            // the edge to its north neighbour separates cells (ix, iy+1) and
            // (ix+1, iy+1).
            const double kE = harmonic(kcell(ix + 1, iy), kcell(ix + 1, iy + 1));
            const double kW = harmonic(kcell(ix, iy), kcell(ix, iy + 1));
            const double kN = harmonic(kcell(ix, iy + 1), kcell(ix + 1, iy + 1));
            const double kS = harmonic(kcell(ix, iy), kcell(ix + 1, iy));
            tb.add(id, id, (kE + kW + kN + kS) * w);
            if (ix + 1 < nx) tb.add(id, grid.node_id(ix + 1, iy), -kE * w);
            if (ix > 0) tb.add(id, grid.node_id(ix - 1, iy), -kW * w);
            if (iy + 1 < ny) tb.add(id, grid.node_id(ix, iy + 1), -kN * w);
            if (iy > 0) tb.add(id, grid.node_id(ix, iy - 1), -kS * w);
        }
    }

    ParametricProblem p;
    p.A = tb.build();
    p.f = f.values;
    p.coords = grid.node_coords();
    p.theta.kind = "darcy2d";
    return p;
}

std::vector<std::uint8_t> default_channel_mask(const Grid2D& grid, std::size_t spacing,
                                               std::size_t width) {
    std::vector<std::uint8_t> mask(grid.cell_count(), 0);
    for (std::size_t cy = 0; cy <= grid.ny; ++cy)
        for (std::size_t cx = 0; cx <= grid.nx; ++cx)
            if (cx % spacing < width || cy % spacing < width) mask[grid.cell_id(cx, cy)] = 1;
    return mask;
}

double jump_darcy_rhs(double x1, double x2) {
    const double pi = 3.14159265358979323846;
    return std::sin(4.0 * pi * x1) * std::sin(2.0 * pi * x2) * std::sin(2.0 * pi * x1 * x2);
}

ParametricProblem build_jump_darcy(const Grid2D& grid, const std::vector<std::uint8_t>& channel_mask,
                                   double K_channel) {
    if (K_channel < 1.0 || K_channel > 1e5)
        throw std::invalid_argument("build_jump_darcy: K_channel must lie in [1, 1e5]");
    if (channel_mask.size() != grid.cell_count())
        throw std::invalid_argument("build_jump_darcy: mask does not match the grid cells");

    ScalarField K(Placement::cell, Vector(grid.cell_count(), 1.0));
    for (std::size_t c = 0; c < channel_mask.size(); ++c)
        if (channel_mask[c]) K.values[c] = K_channel;

    ScalarField f(Placement::node, Vector(grid.node_count()));
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix)
            f.values[grid.node_id(ix, iy)] = jump_darcy_rhs(grid.node_x(ix), grid.node_y(iy));

    ParametricProblem p = build_darcy_2d(grid, K, f);
    p.theta.kind = "jumpdarcy";
    p.theta.params.emplace_back("K_channel", K_channel);
    return p;
}

ParametricProblem heat_step_system(const Grid2D& grid, double K, double dt, const Vector& u_prev) {
    if (dt <= 0.0) throw std::invalid_argument("heat_step_system: need dt > 0");
    if (K < 1.0 || K > 2.0) throw std::invalid_argument("heat_step_system: K must lie in [1, 2]");
    if (u_prev.size() != grid.node_count())
        throw std::invalid_argument("heat_step_system: u_prev does not match the grid");

    const std::size_t n = grid.node_count();
    const double h2 = grid.h * grid.h;

    // Lumped mass: each interior node owns a control volume of area h^2.
    SparseMatrix mass = identity_csr(n);
    for (double& v : mass.values) v = h2;

    // Unit-coefficient stiffness on the same control volumes: the classic
    // [4, -1, -1, -1, -1] stencil without the 1/h^2 scaling.
    TripletBuilder tb(n);
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const std::size_t id = grid.node_id(ix, iy);
            tb.add(id, id, 4.0);
            if (ix + 1 < grid.nx) tb.add(id, grid.node_id(ix + 1, iy), -1.0);
            if (ix > 0) tb.add(id, grid.node_id(ix - 1, iy), -1.0);
            if (iy + 1 < grid.ny) tb.add(id, grid.node_id(ix, iy + 1), -1.0);
            if (iy > 0) tb.add(id, grid.node_id(ix, iy - 1), -1.0);
        }
    SparseMatrix stiff = tb.build();

    TripletBuilder ab(n);
    const double mw = h2 / dt;
    for (std::size_t i = 0; i < n; ++i) ab.add(i, i, mw);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = stiff.row_ptr[i]; k < stiff.row_ptr[i + 1]; ++k)
            ab.add(i, stiff.col_idx[k], K * stiff.values[k]);

    ParametricProblem p;
    p.A = ab.build();
    p.f.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.f[i] = mw * u_prev[i];
    p.coords = grid.node_coords();
    p.theta.kind = "heat";
    p.theta.params.emplace_back("K", K);
    p.theta.params.emplace_back("dt", dt);
    p.time_parts = TimeStepParts{std::move(mass), std::move(stiff), K, dt};
    return p;
}

Vector heat_initial_condition(const Grid2D& grid) {
    Vector u0(grid.node_count());
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const double x = grid.node_x(ix);
            const double y = grid.node_y(iy);
            u0[grid.node_id(ix, iy)] = std::exp(-5.0 * (x * x + y * y));
        }
    return u0;
}

}  // namespace dpcg
