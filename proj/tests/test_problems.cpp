#include <doctest.h>

#include <cmath>

#include "dpcg/problems.hpp"
#include "oracles.hpp"

using namespace dpcg;

TEST_CASE("poisson 1d stencil") {
    const auto p = build_poisson_1d(3, [](double) { return 0.0; });
    // h = 0.25, first row [32, -16, 0]
    CHECK(p.A.at(0, 0) == doctest::Approx(32.0));
    CHECK(p.A.at(0, 1) == doctest::Approx(-16.0));
    CHECK(p.A.at(0, 2) == 0.0);
    CHECK(p.A.is_symmetric());
    CHECK_THROWS_AS(build_poisson_1d(1, [](double) { return 0.0; }), std::invalid_argument);
}

TEST_CASE("poisson 1d zero forcing gives zero solution") {
    const auto p = build_poisson_1d(10, [](double) { return 0.0; });
    const Vector u = oracle::gauss_solve(DenseMatrix::from_sparse(p.A), p.f);
    CHECK(norm_inf(u) < 1e-14);
}

TEST_CASE("poisson 1d matches the analytic sine solution to O(h^2)") {
    const double pi = 3.14159265358979323846;
    const auto p = build_poisson_1d(50, [&](double x) { return pi * pi * std::sin(pi * x); });
    const Vector u = oracle::gauss_solve(DenseMatrix::from_sparse(p.A), p.f);
    double max_err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        max_err = std::max(max_err, std::abs(u[i] - std::sin(pi * p.coords(i, 0))));
    CHECK(max_err < 2e-3);
}

TEST_CASE("grf determinism") {
    const Grid2D g = Grid2D::unit_square(8);
    const ScalarField a = sample_grf(g, 0.5, 1.0, 0.1, 123);
    const ScalarField b = sample_grf(g, 0.5, 1.0, 0.1, 123);
    CHECK(a.values == b.values);
    const ScalarField c = sample_grf(g, 0.5, 1.0, 0.1, 124);
    CHECK(a.values != c.values);
}

TEST_CASE("grf sample mean approaches the prescribed mean") {
    // Darcy setup: mean 0.5, sigma 1.0, ell 0.1.
    const Grid2D g = Grid2D::unit_square(8);
    GrfSampler sampler(g.node_coords(), 0.5, 1.0, 0.1);
    Rng rng(2026);
    double acc = 0.0;
    const std::size_t reps = 2000;
    for (std::size_t r = 0; r < reps; ++r) {
        const Vector f = sampler.draw(rng);
        double m = 0.0;
        for (double v : f) m += v;
        acc += m / static_cast<double>(f.size());
    }
    CHECK(std::abs(acc / static_cast<double>(reps) - 0.5) < 0.05);
}

TEST_CASE("grf on a single site is mean plus sigma z") {
    DenseMatrix site(1, 2);
    site(0, 0) = 0.3;
    site(0, 1) = 0.7;
    GrfSampler sampler(site, 2.0, 3.0, 0.1);
    Rng rng(5);
    const double z = Rng(5).normal();
    const Vector f = sampler.draw(rng);
    // Covariance is sigma^2 + jitter; the factor is its square root.
    CHECK(f[0] == doctest::Approx(2.0 + std::sqrt(9.0 + 1e-10) * z).epsilon(1e-12));
}

TEST_CASE("grf empirical covariance matches the kernel") {
    // Adjacent nodes at distance 2 ell^2 so the true covariance is
    // sigma^2 / e, large enough to estimate from 5000 draws.
    for (double ell : {0.05, 0.1}) {
        const double h = 2.0 * ell * ell;
        const Grid2D g(10, 10, h);
        GrfSampler sampler(g.node_coords(), 0.0, 1.0, ell);
        Rng rng(99);
        const std::size_t a = g.node_id(4, 5), b = g.node_id(5, 5);
        double sa = 0.0, sb = 0.0, sab = 0.0;
        const std::size_t reps = 5000;
        for (std::size_t r = 0; r < reps; ++r) {
            const Vector f = sampler.draw(rng);
            sa += f[a];
            sb += f[b];
            sab += f[a] * f[b];
        }
        const double cov = sab / reps - (sa / reps) * (sb / reps);
        const double expected = std::exp(-1.0);
        CHECK(std::abs(cov - expected) / expected < 0.10);
    }
}

TEST_CASE("grf rejects oversized dense covariance") {
    DenseMatrix sites(20001, 1);
    CHECK_THROWS_AS(GrfSampler(sites, 0.0, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("darcy with unit K is the 5-point laplacian") {
    const Grid2D g = Grid2D::unit_square(3);
    const ScalarField K(Placement::cell, Vector(g.cell_count(), 1.0));
    const ScalarField f(Placement::node, Vector(g.node_count(), 0.0));
    const auto p = build_darcy_2d(g, K, f);
    const double w = 1.0 / (g.h * g.h);
    CHECK(p.A.at(4, 4) == doctest::Approx(4.0 * w));  // interior node
    CHECK(p.A.at(4, 3) == doctest::Approx(-w));
    CHECK(p.A.is_symmetric());
    const Vector u = oracle::gauss_solve(DenseMatrix::from_sparse(p.A), p.f);
    CHECK(norm_inf(u) < 1e-14);
}

TEST_CASE("darcy is linear in a constant K") {
    const Grid2D g = Grid2D::unit_square(4);
    const ScalarField f(Placement::node, Vector(g.node_count(), 1.0));
    const auto p1 = build_darcy_2d(g, ScalarField(Placement::cell, Vector(g.cell_count(), 1.0)), f);
    const double c = 3.75;
    const auto pc = build_darcy_2d(g, ScalarField(Placement::cell, Vector(g.cell_count(), c)), f);
    REQUIRE(p1.A.nnz() == pc.A.nnz());
    for (std::size_t k = 0; k < p1.A.nnz(); ++k)
        CHECK(pc.A.values[k] == doctest::Approx(c * p1.A.values[k]).epsilon(1e-14));
}

TEST_CASE("darcy rejects nonpositive K") {
    const Grid2D g = Grid2D::unit_square(3);
    ScalarField K(Placement::cell, Vector(g.cell_count(), 1.0));
    K.values[5] = 0.0;
    const ScalarField f(Placement::node, Vector(g.node_count(), 0.0));
    CHECK_THROWS_AS(build_darcy_2d(g, K, f), std::invalid_argument);
}

TEST_CASE("darcy diagonal is monotone in K") {
    const Grid2D g = Grid2D::unit_square(5);
    const ScalarField f(Placement::node, Vector(g.node_count(), 0.0));
    ScalarField K(Placement::cell, Vector(g.cell_count(), 1.0));
    const auto base = build_darcy_2d(g, K, f);
    Rng rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        ScalarField K2 = K;
        const std::size_t cell = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(g.cell_count() - 1)));
        K2.values[cell] = 5.0;
        const auto bumped = build_darcy_2d(g, K2, f);
        for (std::size_t i = 0; i < g.node_count(); ++i)
            CHECK(bumped.A.diag(i) >= base.A.diag(i) - 1e-12);
    }
}

TEST_CASE("jump darcy with K_channel 1 equals plain darcy") {
    const Grid2D g = Grid2D::unit_square(12);
    const auto mask = default_channel_mask(g);
    const auto pj = build_jump_darcy(g, mask, 1.0);

    ScalarField K(Placement::cell, Vector(g.cell_count(), 1.0));
    ScalarField f(Placement::node, Vector(g.node_count()));
    for (std::size_t iy = 0; iy < g.ny; ++iy)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            f.values[g.node_id(ix, iy)] = jump_darcy_rhs(g.node_x(ix), g.node_y(iy));
    const auto pd = build_darcy_2d(g, K, f);
    REQUIRE(pj.A.nnz() == pd.A.nnz());
    for (std::size_t k = 0; k < pj.A.nnz(); ++k) CHECK(pj.A.values[k] == pd.A.values[k]);
    CHECK(pj.f == pd.f);
}

TEST_CASE("jump darcy conditioning explodes with the jump") {
    // Dense eigen-oracle on a small grid: condition number with a 1e5
    // channel contrast exceeds 100x the unit-coefficient one.
    const Grid2D g = Grid2D::unit_square(14);
    const auto mask = default_channel_mask(g, 5, 2);
    const auto p_flat = build_jump_darcy(g, mask, 1.0);
    const auto p_jump = build_jump_darcy(g, mask, 1e5);
    const auto eig_flat = dense_sym_eig(DenseMatrix::from_sparse(p_flat.A)).eigenvalues;
    const auto eig_jump = dense_sym_eig(DenseMatrix::from_sparse(p_jump.A)).eigenvalues;
    const double kappa_flat = eig_flat.back() / eig_flat.front();
    const double kappa_jump = eig_jump.back() / eig_jump.front();
    CHECK(kappa_jump > 100.0 * kappa_flat);
}

TEST_CASE("jump darcy K sampler range") {
    Rng rng(7);
    const Grid2D g = Grid2D::unit_square(4);
    const auto mask = default_channel_mask(g);
    for (int i = 0; i < 50; ++i) {
        const double log10k = rng.uniform(0.0, 5.0);
        CHECK(log10k >= 0.0);
        CHECK(log10k <= 5.0);
        CHECK_NOTHROW(build_jump_darcy(g, mask, std::pow(10.0, log10k)));
    }
    CHECK_THROWS_AS(build_jump_darcy(g, mask, 2e5), std::invalid_argument);
}

TEST_CASE("heat step limit cases") {
    const Grid2D g = Grid2D::unit_square(6);
    const Vector u_prev(g.node_count(), 0.0);

    // Huge dt: A approaches K * K_stiff.
    const auto p = heat_step_system(g, 1.5, 1e12, u_prev);
    REQUIRE(p.time_parts.has_value());
    const auto& parts = *p.time_parts;
    for (std::size_t i = 0; i < p.A.n; ++i)
        for (std::size_t k = p.A.row_ptr[i]; k < p.A.row_ptr[i + 1]; ++k) {
            const double stiff = 1.5 * parts.stiffness.at(i, p.A.col_idx[k]);
            CHECK(p.A.values[k] == doctest::Approx(stiff).epsilon(1e-6));
        }

    // Zero previous state: zero right-hand side.
    CHECK(norm_inf(p.f) == 0.0);
    CHECK_THROWS_AS(heat_step_system(g, 1.0, 0.0, u_prev), std::invalid_argument);
}

TEST_CASE("heat step algebraic identity A u_prev - f = K K_stiff u_prev") {
    const Grid2D g = Grid2D::unit_square(9);
    Rng rng(3);
    const Vector u_prev = rng.normal_vector(g.node_count());
    const auto p = heat_step_system(g, 1.3, 0.02, u_prev);
    const Vector Au = spmv(p.A, u_prev);
    const Vector Ku = spmv(p.time_parts->stiffness, u_prev);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < Au.size(); ++i) {
        const double lhs = Au[i] - p.f[i];
        const double rhs = 1.3 * Ku[i];
        err += (lhs - rhs) * (lhs - rhs);
        ref += rhs * rhs;
    }
    CHECK(std::sqrt(err) <= 1e-12 * std::sqrt(ref));
}

TEST_CASE("heat marches with a decaying sup norm") {
    const Grid2D g = Grid2D::unit_square(30);
    Vector u = heat_initial_condition(g);
    double prev_sup = norm_inf(u);
    for (int step = 0; step < 20; ++step) {
        const auto p = heat_step_system(g, 1.0, 0.02, u);
        u = oracle::gauss_solve(DenseMatrix::from_sparse(p.A), p.f);
        const double sup = norm_inf(u);
        CHECK(sup < prev_sup);
        prev_sup = sup;
    }
}

TEST_CASE("generated matrices are SPD") {
    Rng rng(88);
    const Grid2D g = Grid2D::unit_square(7);

    ScalarField K(Placement::cell, Vector(g.cell_count()));
    for (double& v : K.values) v = std::exp(rng.normal());
    ScalarField f(Placement::node, rng.normal_vector(g.node_count()));
    const auto darcy = build_darcy_2d(g, K, f);
    CHECK(darcy.A.is_symmetric());
    for (double lam : dense_sym_eig(DenseMatrix::from_sparse(darcy.A)).eigenvalues) CHECK(lam > 0.0);

    const auto heat = heat_step_system(g, 1.2, 0.02, rng.normal_vector(g.node_count()));
    CHECK(heat.A.is_symmetric());
    for (double lam : dense_sym_eig(DenseMatrix::from_sparse(heat.A)).eigenvalues) CHECK(lam > 0.0);

    const auto jump = build_jump_darcy(g, default_channel_mask(g, 4, 1), 1e4);
    CHECK(jump.A.is_symmetric());
    CHECK_NOTHROW(cholesky(DenseMatrix::from_sparse(jump.A)));
}
