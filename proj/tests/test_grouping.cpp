#include <doctest.h>

#include <cmath>

#include "dpcg/grouping.hpp"
#include "dpcg/problems.hpp"
#include "oracles.hpp"

using namespace dpcg;

TEST_CASE("labels map directly to groups") {
    const IndexSets g = groups_from_labels({0, 0, 1, 1});
    REQUIRE(g.count() == 2);
    CHECK(g.sets[0] == std::vector<std::size_t>{0, 1});
    CHECK(g.sets[1] == std::vector<std::size_t>{2, 3});
}

TEST_CASE("labels ordered by first appearance") {
    const IndexSets g = groups_from_labels({7, 3, 7, 3, 9});
    REQUIRE(g.count() == 3);
    CHECK(g.sets[0] == std::vector<std::size_t>{0, 2});  // label 7 first
    CHECK(g.sets[1] == std::vector<std::size_t>{1, 3});
    CHECK(g.sets[2] == std::vector<std::size_t>{4});
}

TEST_CASE("all-equal labels collapse to one set") {
    const IndexSets g = groups_from_labels({5, 5, 5});
    REQUIRE(g.count() == 1);
    CHECK(g.sets[0].size() == 3);
    CHECK_THROWS_AS(groups_from_labels({}), std::invalid_argument);
}

TEST_CASE("jump darcy channel labels split cleanly in two") {
    const Grid2D grid = Grid2D::unit_square(50);
    const auto mask = default_channel_mask(grid);
    // Node label: touching at least one masked incident cell.
    std::vector<int> labels(grid.node_count(), 0);
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix < grid.nx; ++ix) {
            const bool on = mask[grid.cell_id(ix, iy)] || mask[grid.cell_id(ix + 1, iy)] ||
                            mask[grid.cell_id(ix, iy + 1)] || mask[grid.cell_id(ix + 1, iy + 1)];
            labels[grid.node_id(ix, iy)] = on ? 1 : 0;
        }
    const IndexSets g = groups_from_labels(labels);
    REQUIRE(g.count() == 2);
    // The boundary between the two groups coincides with a change in the
    // incident-cell mask pattern.
    for (std::size_t iy = 0; iy < grid.ny; ++iy)
        for (std::size_t ix = 0; ix + 1 < grid.nx; ++ix) {
            const std::size_t a = grid.node_id(ix, iy), b = grid.node_id(ix + 1, iy);
            if (labels[a] != labels[b]) {
                const bool a_on = labels[a] == 1;
                const bool b_on = labels[b] == 1;
                CHECK(a_on != b_on);
            }
        }
}

TEST_CASE("rcb splits a 1d chain at the median") {
    const auto p = build_poisson_1d(8, [](double) { return 0.0; });
    const IndexSets g = partition_graph(p.A, p.coords, 2);
    REQUIRE(g.count() == 2);
    CHECK(g.sets[0] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(g.sets[1] == std::vector<std::size_t>{4, 5, 6, 7});
}

TEST_CASE("rcb degenerate single group") {
    const auto p = build_poisson_1d(5, [](double) { return 0.0; });
    const IndexSets g = partition_graph(p.A, p.coords, 1);
    REQUIRE(g.count() == 1);
    CHECK(g.sets[0].size() == 5);
    CHECK_THROWS_AS(partition_graph(p.A, p.coords, 6), std::invalid_argument);
}

TEST_CASE("rcb cuts a 16x16 grid into quadrants") {
    const Grid2D grid = Grid2D::unit_square(16);
    const ScalarField K(Placement::cell, Vector(grid.cell_count(), 1.0));
    const ScalarField f(Placement::node, Vector(grid.node_count(), 0.0));
    const auto p = build_darcy_2d(grid, K, f);
    const IndexSets g = partition_graph(p.A, p.coords, 4);
    REQUIRE(g.count() == 4);
    for (const auto& s : g.sets) CHECK(s.size() == 64);
    // Each group spans exactly one 8x8 quadrant.
    for (const auto& s : g.sets) {
        double lox = 1e9, hix = -1e9, loy = 1e9, hiy = -1e9;
        for (std::size_t id : s) {
            lox = std::min(lox, p.coords(id, 0));
            hix = std::max(hix, p.coords(id, 0));
            loy = std::min(loy, p.coords(id, 1));
            hiy = std::max(hiy, p.coords(id, 1));
        }
        CHECK((hix - lox) < 0.5);
        CHECK((hiy - loy) < 0.5);
    }
}

TEST_CASE("rcb balances non-power-of-two counts") {
    const Grid2D grid = Grid2D::unit_square(9);
    const ScalarField K(Placement::cell, Vector(grid.cell_count(), 1.0));
    const ScalarField f(Placement::node, Vector(grid.node_count(), 0.0));
    const auto p = build_darcy_2d(grid, K, f);
    const IndexSets g = partition_graph(p.A, p.coords, 3);
    REQUIRE(g.count() == 3);
    for (const auto& s : g.sets) CHECK(std::abs(static_cast<double>(s.size()) - 27.0) <= 1.0);
}

TEST_CASE("rcb is permutation consistent") {
    const Grid2D grid = Grid2D::unit_square(10);
    const std::size_t n = grid.node_count();
    const DenseMatrix coords = grid.node_coords();
    const SparseMatrix A = identity_csr(n);

    // Relabel the nodes with a fixed permutation but keep the geometry.
    Rng rng(12);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);
    DenseMatrix coords2(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        coords2(perm[i], 0) = coords(i, 0);
        coords2(perm[i], 1) = coords(i, 1);
    }

    const IndexSets g1 = partition_graph(A, coords, 4);
    const IndexSets g2 = partition_graph(A, coords2, 4);
    REQUIRE(g1.count() == g2.count());
    for (std::size_t s = 0; s < g1.count(); ++s) {
        std::vector<std::size_t> mapped;
        for (std::size_t id : g1.sets[s]) mapped.push_back(perm[id]);
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == g2.sets[s]);
    }
}

TEST_CASE("kmeans recovers well-separated 1d blobs") {
    DenseMatrix features(100, 1);
    Rng rng(8);
    for (std::size_t i = 0; i < 50; ++i) features(i, 0) = 0.0 + 0.01 * rng.normal();
    for (std::size_t i = 50; i < 100; ++i) features(i, 0) = 10.0 + 0.01 * rng.normal();
    const IndexSets g = kmeans_groups(features, 2, {.seed = 1});
    REQUIRE(g.count() == 2);
    for (const auto& s : g.sets) {
        CHECK(s.size() == 50);
        const bool low_blob = s.front() < 50;
        for (std::size_t id : s) CHECK((id < 50) == low_blob);
    }
}

TEST_CASE("kmeans degenerate single cluster and determinism") {
    DenseMatrix features(30, 2);
    Rng rng(9);
    for (double& v : features.data()) v = rng.normal();
    const IndexSets g1 = kmeans_groups(features, 1, {.seed = 3});
    REQUIRE(g1.count() == 1);
    CHECK(g1.sets[0].size() == 30);

    const IndexSets a = kmeans_groups(features, 4, {.seed = 7});
    const IndexSets b = kmeans_groups(features, 4, {.seed = 7});
    CHECK(a.sets == b.sets);
}

TEST_CASE("kmeans rejects more clusters than distinct points") {
    DenseMatrix features(5, 1);
    for (std::size_t i = 0; i < 5; ++i) features(i, 0) = (i < 3) ? 1.0 : 2.0;
    CHECK_THROWS_AS(kmeans_groups(features, 3, {.seed = 0}), std::invalid_argument);
}

TEST_CASE("kmeans reaches a Lloyd fixed point") {
    DenseMatrix features(80, 2);
    Rng rng(10);
    for (double& v : features.data()) v = rng.normal();
    const std::size_t S = 5;
    const IndexSets g = kmeans_groups(features, S, {.seed = 11});

    // Recompute centroids and verify no dof would move.
    std::vector<Vector> centroids(S, Vector(2, 0.0));
    std::vector<std::size_t> owner(80);
    for (std::size_t c = 0; c < S; ++c) {
        for (std::size_t id : g.sets[c]) {
            centroids[c][0] += features(id, 0);
            centroids[c][1] += features(id, 1);
            owner[id] = c;
        }
        centroids[c][0] /= static_cast<double>(g.sets[c].size());
        centroids[c][1] /= static_cast<double>(g.sets[c].size());
    }
    for (std::size_t i = 0; i < 80; ++i) {
        auto d2 = [&](std::size_t c) {
            const double dx = features(i, 0) - centroids[c][0];
            const double dy = features(i, 1) - centroids[c][1];
            return dx * dx + dy * dy;
        };
        const double own = d2(owner[i]);
        for (std::size_t c = 0; c < S; ++c) CHECK(own <= d2(c) + 1e-12);
    }
}

TEST_CASE("index sets serialize to json and back") {
    const IndexSets g = groups_from_labels({0, 1, 0, 2, 1});
    const IndexSets back = IndexSets::from_json(g.to_json());
    CHECK(back.n_total == g.n_total);
    CHECK(back.sets == g.sets);
}

TEST_CASE("all strategies satisfy the cover invariants") {
    const Grid2D grid = Grid2D::unit_square(12);
    const ScalarField K(Placement::cell, Vector(grid.cell_count(), 1.0));
    const ScalarField f(Placement::node, Vector(grid.node_count(), 0.0));
    const auto p = build_darcy_2d(grid, K, f);
    Rng rng(14);

    std::vector<int> labels(p.A.n);
    for (int& l : labels) l = static_cast<int>(rng.uniform_int(0, 2));
    CHECK_NOTHROW(groups_from_labels(labels).validate());
    CHECK_NOTHROW(partition_graph(p.A, p.coords, 6).validate());

    DenseMatrix features(p.A.n, 1);
    for (double& v : features.data()) v = rng.normal();
    CHECK_NOTHROW(kmeans_groups(features, 5, {.seed = 2}).validate());
}
