#include "dpcg/datagen.hpp"

#include <cmath>

#include "dpcg/krylov.hpp"
#include "dpcg/precond.hpp"

namespace dpcg {

namespace {

// Tightly converged iterative solve used to produce training targets.
Vector hi_fi_solve(const SparseMatrix& A, const Vector& f) {
    const auto M = build_preconditioner(A, PrecondKind::icc0);
    SolveOptions opts;
    opts.rel_tol = 1e-11;
    opts.abs_tol = 1e-13;
    opts.record_history = false;
    const SolveReport rep = solve(A, f, Vector(A.n, 0.0), *M, nullptr, opts);
    if (!rep.converged) throw std::runtime_error("hi_fi_solve: target solve did not converge");
    return rep.u;
}

DenseMatrix stack_rows(const DenseMatrix& top, const DenseMatrix& bottom) {
    if (top.cols() != bottom.cols()) throw std::invalid_argument("stack_rows: column mismatch");
    DenseMatrix out(top.rows() + bottom.rows(), top.cols());
    for (std::size_t i = 0; i < top.rows(); ++i)
        for (std::size_t c = 0; c < top.cols(); ++c) out(i, c) = top(i, c);
    for (std::size_t i = 0; i < bottom.rows(); ++i)
        for (std::size_t c = 0; c < top.cols(); ++c) out(top.rows() + i, c) = bottom(i, c);
    return out;
}

}  // namespace

DenseMatrix sensor_line(std::size_t ny) {
    DenseMatrix s(ny, 1);
    for (std::size_t j = 0; j < ny; ++j)
        s(j, 0) = static_cast<double>(j + 1) / static_cast<double>(ny + 1);
    return s;
}

DenseMatrix sensor_lattice(std::size_t side) {
    DenseMatrix s(side * side, 2);
    for (std::size_t j = 0; j < side; ++j)
        for (std::size_t i = 0; i < side; ++i) {
            const std::size_t id = j * side + i;
            s(id, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(side);
            s(id, 1) = (static_cast<double>(j) + 0.5) / static_cast<double>(side);
        }
    return s;
}

std::vector<std::uint8_t> geometric_channel_mask(const Grid2D& grid, double period, double width) {
    std::vector<std::uint8_t> mask(grid.cell_count(), 0);
    const auto in_strip = [&](double x) {
        const double r = x - period * std::floor(x / period);
        return r < width;
    };
    for (std::size_t cy = 0; cy <= grid.ny; ++cy)
        for (std::size_t cx = 0; cx <= grid.nx; ++cx) {
            const double x = (static_cast<double>(cx) + 0.5) * grid.h;
            const double y = (static_cast<double>(cy) + 0.5) * grid.h;
            if (in_strip(x) || in_strip(y)) mask[grid.cell_id(cx, cy)] = 1;
        }
    return mask;
}

std::vector<int> channel_node_labels(const Grid2D& grid, const std::vector<std::uint8_t>& mask) {
    std::vector<int> labels(grid.node_count(), 0);
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const bool on = mask[grid.cell_id(ix, iy)] || mask[grid.cell_id(ix + 1, iy)] ||
                            mask[grid.cell_id(ix, iy + 1)] || mask[grid.cell_id(ix + 1, iy + 1)];
            labels[grid.node_id(ix, iy)] = on ? 1 : 0;
        }
    return labels;
}

Dataset gen_poisson1d_dataset(std::size_t n_grid, std::size_t ny, std::size_t n_samples,
                              std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("gen_poisson1d_dataset: need n_samples >= 1");
    const auto base = build_poisson_1d(n_grid, [](double) { return 0.0; });
    const DenseMatrix sensors = sensor_line(ny);
    const DenseMatrix sites = stack_rows(base.coords, sensors);
    const GrfSampler grf(sites, 0.0, 1.0, 0.7);

    Dataset data;
    data.problem = "poisson1d";
    data.seed = seed;
    data.d = 1;
    data.coord_sets.push_back(base.coords);
    data.sensor_coords.push_back(sensors);
    data.distributions.push_back(
        {"grf", {{"ell", 0.7}, {"mean", 0.0}, {"sigma", 1.0}}});

    Rng rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Vector joint = grf.draw(rng);
        Vector f(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(n_grid));
        Vector sensed(joint.begin() + static_cast<std::ptrdiff_t>(n_grid), joint.end());
        Sample smp;
        smp.branch_inputs.push_back(std::move(sensed));
        smp.coord_set = 0;
        smp.target = hi_fi_solve(base.A, f);
        data.samples.push_back(std::move(smp));
    }
    data.validate();
    return data;
}

Dataset gen_darcy_dataset(std::size_t n_grid, std::size_t sensor_side, std::size_t n_samples,
                          std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("gen_darcy_dataset: need n_samples >= 1");
    const Grid2D grid = Grid2D::unit_square(n_grid);
    const DenseMatrix sensors = sensor_lattice(sensor_side);
    const double mean_logk = std::log(0.5);

    const GrfSampler grf_k(stack_rows(grid.cell_coords(), sensors), mean_logk, 1.0, 0.1);
    const GrfSampler grf_f(stack_rows(grid.node_coords(), sensors), 0.0, 1.0, 0.05);

    Dataset data;
    data.problem = "darcy";
    data.seed = seed;
    data.d = 2;
    data.coord_sets.push_back(grid.node_coords());
    data.sensor_coords.push_back(sensors);
    data.sensor_coords.push_back(sensors);
    data.distributions.push_back(
        {"grf", {{"ell", 0.1}, {"mean", mean_logk}, {"sigma", 1.0}}});
    data.distributions.push_back(
        {"grf", {{"ell", 0.05}, {"mean", 0.0}, {"sigma", 1.0}}});

    Rng rng(seed);
    const std::size_t nc = grid.cell_count();
    const std::size_t nn = grid.node_count();
    for (std::size_t s = 0; s < n_samples; ++s) {
        const Vector joint_k = grf_k.draw(rng);
        const Vector joint_f = grf_f.draw(rng);

        ScalarField K(Placement::cell, Vector(nc));
        for (std::size_t c = 0; c < nc; ++c) K.values[c] = std::exp(joint_k[c]);
        ScalarField f(Placement::node,
                      Vector(joint_f.begin(), joint_f.begin() + static_cast<std::ptrdiff_t>(nn)));
        const auto prob = build_darcy_2d(grid, K, f);

        Sample smp;
        smp.branch_inputs.emplace_back(joint_k.begin() + static_cast<std::ptrdiff_t>(nc),
                                       joint_k.end());
        smp.branch_inputs.emplace_back(joint_f.begin() + static_cast<std::ptrdiff_t>(nn),
                                       joint_f.end());
        smp.coord_set = 0;
        smp.target = hi_fi_solve(prob.A, prob.f);
        data.samples.push_back(std::move(smp));
    }
    data.validate();
    return data;
}

Dataset gen_jumpdarcy_dataset(std::size_t n_grid, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw std::invalid_argument("gen_jumpdarcy_dataset: need n_samples >= 1");
    const Grid2D grid = Grid2D::unit_square(n_grid);
    const auto mask = geometric_channel_mask(grid);

    Dataset data;
    data.problem = "jumpdarcy";
    data.seed = seed;
    data.d = 2;
    data.coord_sets.push_back(grid.node_coords());
    data.sensor_coords.emplace_back(0, 1);  // scalar input, no sensor geometry
    data.distributions.push_back({"loguniform", {{"hi", 5.0}, {"lo", 0.0}}});

    Rng rng(seed);
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double log10k = rng.uniform(0.0, 5.0);
        const auto prob = build_jump_darcy(grid, mask, std::pow(10.0, log10k));
        Sample smp;
        smp.branch_inputs.push_back(Vector{log10k});
        smp.coord_set = 0;
        smp.target = hi_fi_solve(prob.A, prob.f);
        data.samples.push_back(std::move(smp));
    }
    data.validate();
    return data;
}

Dataset gen_heat_dataset(std::size_t n_grid, std::size_t n_runs, std::size_t steps, double dt,
                         std::uint64_t seed) {
    if (n_runs < 1 || steps < 1) throw std::invalid_argument("gen_heat_dataset: empty run plan");
    const Grid2D grid = Grid2D::unit_square(n_grid);
    const DenseMatrix xy = grid.node_coords();

    Dataset data;
    data.problem = "heat";
    data.seed = seed;
    data.d = 2;
    data.time_augmented = true;
    for (std::size_t s = 0; s < steps; ++s) {
        DenseMatrix xyt(xy.rows(), 3);
        const double t = static_cast<double>(s + 1) * dt;
        for (std::size_t i = 0; i < xy.rows(); ++i) {
            xyt(i, 0) = xy(i, 0);
            xyt(i, 1) = xy(i, 1);
            xyt(i, 2) = t;
        }
        data.coord_sets.push_back(std::move(xyt));
    }
    data.sensor_coords.emplace_back(0, 1);
    data.distributions.push_back({"uniform", {{"hi", 2.0}, {"lo", 1.0}}});

    Rng rng(seed);
    for (std::size_t run = 0; run < n_runs; ++run) {
        const double K = rng.uniform(1.0, 2.0);
        Vector u = heat_initial_condition(grid);
        for (std::size_t s = 0; s < steps; ++s) {
            const auto prob = heat_step_system(grid, K, dt, u);
            u = hi_fi_solve(prob.A, prob.f);
            Sample smp;
            smp.branch_inputs.push_back(Vector{K});
            smp.coord_set = s;
            smp.target = u;
            data.samples.push_back(std::move(smp));
        }
    }
    data.validate();
    return data;
}

ProblemInstance sample_poisson1d_instance(std::size_t n, const DenseMatrix& sensor_coords,
                                          std::uint64_t seed) {
    const auto base = build_poisson_1d(n, [](double) { return 0.0; });
    const GrfSampler grf(stack_rows(base.coords, sensor_coords), 0.0, 1.0, 0.7);
    Rng rng(seed);
    const Vector joint = grf.draw(rng);

    ProblemInstance inst;
    inst.problem = base;
    inst.problem.f.assign(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(n));
    inst.problem.theta.seed = seed;
    inst.branch_inputs.emplace_back(joint.begin() + static_cast<std::ptrdiff_t>(n), joint.end());
    return inst;
}

ProblemInstance sample_darcy_instance(const Grid2D& grid, const DenseMatrix& sensor_coords,
                                      std::uint64_t seed) {
    const double mean_logk = std::log(0.5);
    const GrfSampler grf_k(stack_rows(grid.cell_coords(), sensor_coords), mean_logk, 1.0, 0.1);
    const GrfSampler grf_f(stack_rows(grid.node_coords(), sensor_coords), 0.0, 1.0, 0.05);
    Rng rng(seed);
    const Vector joint_k = grf_k.draw(rng);
    const Vector joint_f = grf_f.draw(rng);

    const std::size_t nc = grid.cell_count();
    const std::size_t nn = grid.node_count();
    ScalarField K(Placement::cell, Vector(nc));
    for (std::size_t c = 0; c < nc; ++c) K.values[c] = std::exp(joint_k[c]);
    ScalarField f(Placement::node,
                  Vector(joint_f.begin(), joint_f.begin() + static_cast<std::ptrdiff_t>(nn)));

    ProblemInstance inst;
    inst.problem = build_darcy_2d(grid, K, f);
    inst.problem.theta.seed = seed;
    inst.branch_inputs.emplace_back(joint_k.begin() + static_cast<std::ptrdiff_t>(nc),
                                    joint_k.end());
    inst.branch_inputs.emplace_back(joint_f.begin() + static_cast<std::ptrdiff_t>(nn),
                                    joint_f.end());
    return inst;
}

ProblemInstance sample_jumpdarcy_instance(const Grid2D& grid, std::uint64_t seed, double fixed_k) {
    Rng rng(seed);
    const double log10k = fixed_k > 0.0 ? std::log10(fixed_k) : rng.uniform(0.0, 5.0);
    ProblemInstance inst;
    inst.problem = build_jump_darcy(grid, geometric_channel_mask(grid), std::pow(10.0, log10k));
    inst.problem.theta.seed = seed;
    inst.branch_inputs.push_back(Vector{log10k});
    return inst;
}

ProblemInstance make_heat_step_instance(const Grid2D& grid, double K, double dt, double t,
                                        const Vector& u_prev) {
    ProblemInstance inst;
    inst.problem = heat_step_system(grid, K, dt, u_prev);
    const DenseMatrix xy = grid.node_coords();
    DenseMatrix xyt(xy.rows(), 3);
    for (std::size_t i = 0; i < xy.rows(); ++i) {
        xyt(i, 0) = xy(i, 0);
        xyt(i, 1) = xy(i, 1);
        xyt(i, 2) = t;
    }
    inst.problem.coords = std::move(xyt);
    inst.branch_inputs.push_back(Vector{K});
    return inst;
}

}  // namespace dpcg
