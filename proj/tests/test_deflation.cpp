#include <doctest.h>

#include <cmath>

#include "dpcg/deflation.hpp"
#include "dpcg/problems.hpp"
#include "oracles.hpp"

using namespace dpcg;

namespace {

// Dense Pi = I - C A with C = P A_c^{-1} P^T, built straight from the
// definitions as an independent reference.
DenseMatrix dense_pi(const DenseMatrix& A, const DenseMatrix& P) {
    const DenseMatrix Pt = P.transpose();
    const DenseMatrix Ac = Pt.mult(A).mult(P);
    const std::size_t n = A.rows(), K = P.cols();
    // C = P Ac^{-1} P^T via column solves.
    DenseMatrix C(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const Vector rhs = Pt.col(j).size() == K ? Pt.col(j) : Vector(K, 0.0);
        Vector ptj(K);
        for (std::size_t a = 0; a < K; ++a) ptj[a] = P(j, a);
        const Vector y = oracle::gauss_solve(Ac, ptj);
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t a = 0; a < K; ++a) s += P(i, a) * y[a];
            C(i, j) = s;
        }
    }
    DenseMatrix Pi = DenseMatrix::identity(n);
    const DenseMatrix CA = C.mult(A);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Pi(i, j) -= CA(i, j);
    return Pi;
}

IndexSets contiguous_groups(std::size_t n, std::size_t S) {
    IndexSets g;
    g.n_total = n;
    g.sets.resize(S);
    const std::size_t chunk = (n + S - 1) / S;
    for (std::size_t i = 0; i < n; ++i) g.sets[std::min(i / chunk, S - 1)].push_back(i);
    g.validate();
    return g;
}

}  // namespace

TEST_CASE("nico constant vector") {
    DenseMatrix coords(4, 2);
    const TentativeBasis b = nico_vectors(NicoKind::constant, coords);
    REQUIRE(b.V.cols() == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(b.V(i, 0) == 1.0);
}

TEST_CASE("nico rigid body block for a single node") {
    DenseMatrix coords(1, 3);
    coords(0, 0) = 1.0;
    coords(0, 1) = 2.0;
    coords(0, 2) = 3.0;
    const TentativeBasis b = nico_vectors(NicoKind::rigid_body, coords);
    REQUIRE(b.V.rows() == 3);
    REQUIRE(b.V.cols() == 6);
    const double expect[3][6] = {{1, 0, 0, 0, 3, -2}, {0, 1, 0, -3, 0, 1}, {0, 0, 1, 2, -1, 0}};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 6; ++c) CHECK(b.V(r, c) == expect[r][c]);
}

TEST_CASE("nico helmholtz directions at the origin") {
    DenseMatrix coords(1, 2);
    const TentativeBasis b = nico_vectors(NicoKind::helmholtz_directions, coords, {.k_wave = 3.7});
    REQUIRE(b.V.cols() == 8);
    for (std::size_t c = 0; c < 8; ++c) CHECK(b.V(0, c) == doctest::Approx(1.0));
}

TEST_CASE("helmholtz directions depend on the wavenumber") {
    DenseMatrix coords(2, 2);
    coords(1, 0) = 0.5;
    coords(1, 1) = 0.25;
    const TentativeBasis a = nico_vectors(NicoKind::helmholtz_directions, coords, {.k_wave = 1.0});
    const TentativeBasis b = nico_vectors(NicoKind::helmholtz_directions, coords, {.k_wave = 2.0});
    CHECK(a.V(1, 0) == doctest::Approx(std::exp(-0.5)));
    CHECK(b.V(1, 0) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("assemble with one group and an orthonormal basis is idempotent") {
    Rng rng(31);
    const SparseMatrix A = oracle::random_spd(12, rng);
    DenseMatrix raw(12, 3);
    for (double& v : raw.data()) v = rng.normal();
    const QrResult qr = dense_qr(raw);
    TentativeBasis basis;
    basis.V = qr.Q;
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(12, 1), 1e-10);
    REQUIRE(D.coarse_dim() == 3);
    const DenseMatrix P = D.dense_P();
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(P(i, j) == doctest::Approx(qr.Q(i, j)).epsilon(1e-12));
}

TEST_CASE("ones column over two equal halves gives normalized indicators") {
    const std::size_t n = 8;
    const SparseMatrix A = identity_csr(n);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 1, 1.0);
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 2), 1e-10);
    REQUIRE(D.coarse_dim() == 2);
    const DenseMatrix P = D.dense_P();
    const double v = 1.0 / std::sqrt(4.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(P(i, 0) == doctest::Approx(v));
        CHECK(P(i, 1) == 0.0);
        CHECK(P(i + 4, 1) == doctest::Approx(v));
        CHECK(P(i + 4, 0) == 0.0);
    }
}

TEST_CASE("projector algebra against the dense oracle") {
    Rng rng(55);
    const std::size_t n = 60;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 3);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 4), 1e-10);

    const DenseMatrix P = D.dense_P();
    const DenseMatrix Ad = DenseMatrix::from_sparse(A);
    const DenseMatrix Pi = dense_pi(Ad, P);

    // Pi^T A P = 0
    const DenseMatrix PiT_A_P = Pi.transpose().mult(Ad).mult(P);
    CHECK(PiT_A_P.frobenius() < 1e-10 * Ad.frobenius());

    // apply_Pi_T matches the dense projector transpose.
    const Vector r = rng.normal_vector(n);
    const Vector lib = D.apply_Pi_T(r);
    const Vector ref = Pi.transpose().mult(r);
    for (std::size_t i = 0; i < n; ++i) CHECK(lib[i] == doctest::Approx(ref[i]).epsilon(1e-11));

    // apply_C matches C r = P Ac^{-1} P^T r.
    const Vector cr = D.apply_C(r);
    DenseMatrix Idn = DenseMatrix::identity(n);
    const DenseMatrix Cdense = subtract(Idn, Pi);  // C A = I - Pi, so C = (I - Pi) A^{-1}
    const Vector Ainv_r = oracle::gauss_solve(Ad, r);
    const Vector cr_ref = Cdense.mult(Ainv_r);
    for (std::size_t i = 0; i < n; ++i) CHECK(cr[i] == doctest::Approx(cr_ref[i]).epsilon(1e-9));
}

TEST_CASE("kernel property on A P columns") {
    Rng rng(77);
    const std::size_t n = 40;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 2);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 2), 1e-10);

    // Pi^T (A P e1) = 0
    const DenseMatrix P = D.dense_P();
    Vector e1(D.coarse_dim(), 0.0);
    e1[0] = 1.0;
    const Vector APe1 = spmv(A, P.mult(e1));
    CHECK(norm2(D.apply_Pi_T(APe1)) < 1e-10 * norm2(APe1));
    CHECK(norm2(D.apply_Pi_T(Vector(n, 0.0))) == 0.0);
    CHECK(norm2(D.apply_C(Vector(n, 0.0))) == 0.0);
}

TEST_CASE("idempotency of the dense projector") {
    Rng rng(91);
    for (std::size_t trial = 0; trial < 5; ++trial) {
        const std::size_t n = 30 + 20 * trial;
        const SparseMatrix A = oracle::random_spd(n, rng);
        TentativeBasis basis;
        basis.V = DenseMatrix(n, 2 + trial % 3);
        for (double& v : basis.V.data()) v = rng.normal();
        const DeflationOperator D =
            assemble_deflation(A, basis, contiguous_groups(n, 1 + trial), 1e-10);
        const DenseMatrix Pi = dense_pi(DenseMatrix::from_sparse(A), D.dense_P());
        const DenseMatrix Pi2 = Pi.mult(Pi);
        CHECK(subtract(Pi2, Pi).frobenius() < 1e-10);
    }
}

TEST_CASE("block orthonormality") {
    Rng rng(13);
    const std::size_t n = 50;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 4);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 5), 1e-10);
    for (const DenseMatrix& Q : D.blocks()) {
        for (std::size_t a = 0; a < Q.cols(); ++a)
            for (std::size_t b = 0; b < Q.cols(); ++b) {
                double s = 0.0;
                for (std::size_t i = 0; i < Q.rows(); ++i) s += Q(i, a) * Q(i, b);
                CHECK(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-10);
            }
    }
}

TEST_CASE("coarse solve matches a dense solve") {
    Rng rng(19);
    const std::size_t n = 36;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 4);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 3), 1e-10);

    const std::size_t K = D.coarse_dim();
    const DenseMatrix P = D.dense_P();
    const DenseMatrix Ac = P.transpose().mult(DenseMatrix::from_sparse(A)).mult(P);
    const Vector y = rng.normal_vector(K);
    const Vector x = D.coarse_solve(y);
    const Vector x_ref = oracle::gauss_solve(Ac, y);
    for (std::size_t i = 0; i < K; ++i) CHECK(x[i] == doctest::Approx(x_ref[i]).epsilon(1e-10));
    CHECK(norm2(D.coarse_solve(Vector(K, 0.0))) == 0.0);
}

TEST_CASE("identity coarse matrix passes vectors through") {
    // Orthonormal P on A = I gives A_c = I.
    const std::size_t n = 10;
    const SparseMatrix A = identity_csr(n);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 2);
    Rng rng(23);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 1), 1e-10);
    const Vector y = rng.normal_vector(D.coarse_dim());
    const Vector x = D.coarse_solve(y);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-12));
}

TEST_CASE("duplicate columns are dropped per block") {
    Rng rng(29);
    const std::size_t n = 24;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        basis.V(i, 0) = rng.normal();
        basis.V(i, 1) = basis.V(i, 0);
    }
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 2), 1e-10);
    CHECK(D.coarse_dim() == 2);  // one column per group survives
    CHECK(D.dropped_columns());
}

TEST_CASE("scaling the basis leaves P unchanged up to column signs") {
    Rng rng(37);
    const std::size_t n = 30;
    const SparseMatrix A = oracle::random_spd(n, rng);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 3);
    for (double& v : basis.V.data()) v = rng.normal();
    const DeflationOperator D1 = assemble_deflation(A, basis, contiguous_groups(n, 2), 1e-10);
    TentativeBasis scaled = basis;
    for (double& v : scaled.V.data()) v *= -42.0;
    const DeflationOperator D2 = assemble_deflation(A, scaled, contiguous_groups(n, 2), 1e-10);
    REQUIRE(D1.coarse_dim() == D2.coarse_dim());
    const DenseMatrix P1 = D1.dense_P();
    const DenseMatrix P2 = D2.dense_P();
    for (std::size_t j = 0; j < P1.cols(); ++j) {
        double same = 0.0, flip = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            same = std::max(same, std::abs(P1(i, j) - P2(i, j)));
            flip = std::max(flip, std::abs(P1(i, j) + P2(i, j)));
        }
        CHECK(std::min(same, flip) < 1e-12);
    }
}

TEST_CASE("spectral zeroing with exact smallest eigenvectors") {
    // Deflating by the k smallest eigenvectors of M A zeroes exactly those
    // eigenvalues and keeps the rest.
    const auto prob = build_poisson_1d(40, [](double) { return 1.0; });
    const auto M = build_preconditioner(prob.A, PrecondKind::jacobi);
    const Vector before = preconditioned_spectrum(prob.A, *M);

    // Eigenvectors of M A = c A for the constant-diagonal 1D problem.
    const EigResult eig = dense_sym_eig(DenseMatrix::from_sparse(prob.A));
    const std::size_t k = 3;
    TentativeBasis basis;
    basis.V = DenseMatrix(prob.A.n, k);
    for (std::size_t j = 0; j < k; ++j) basis.V.set_col(j, eig.eigenvectors.col(j));
    const DeflationOperator D =
        assemble_deflation(prob.A, basis, contiguous_groups(prob.A.n, 1), 1e-10);

    const Vector after = deflated_spectrum(prob.A, *M, D.dense_P());
    std::size_t zeros = 0;
    for (double lam : after)
        if (std::abs(lam) < 1e-8) ++zeros;
    CHECK(zeros == k);
    for (std::size_t i = k; i < after.size(); ++i)
        CHECK(after[i] == doctest::Approx(before[i]).epsilon(1e-8));
}

TEST_CASE("spectral elimination at arbitrary eigenvector indices") {
    const auto prob = build_poisson_1d(30, [](double) { return 1.0; });
    const auto M = build_preconditioner(prob.A, PrecondKind::jacobi);
    const Vector before = preconditioned_spectrum(prob.A, *M);

    const EigResult eig = dense_sym_eig(DenseMatrix::from_sparse(prob.A));
    const std::size_t alpha = 7, beta = 19;
    TentativeBasis basis;
    basis.V = DenseMatrix(prob.A.n, 2);
    basis.V.set_col(0, eig.eigenvectors.col(alpha));
    basis.V.set_col(1, eig.eigenvectors.col(beta));
    const DeflationOperator D =
        assemble_deflation(prob.A, basis, contiguous_groups(prob.A.n, 1), 1e-10);
    const Vector after = deflated_spectrum(prob.A, *M, D.dense_P());

    // Exactly lambda_alpha and lambda_beta are replaced by zeros.
    std::vector<double> expected;
    expected.push_back(0.0);
    expected.push_back(0.0);
    for (std::size_t i = 0; i < before.size(); ++i)
        if (i != alpha && i != beta) expected.push_back(before[i]);
    std::sort(expected.begin(), expected.end());
    REQUIRE(after.size() == expected.size());
    for (std::size_t i = 0; i < after.size(); ++i)
        CHECK(after[i] == doctest::Approx(expected[i]).epsilon(1e-7));
}

TEST_CASE("zero-row group contributes no columns but warns") {
    const std::size_t n = 12;
    const SparseMatrix A = identity_csr(n);
    TentativeBasis basis;
    basis.V = DenseMatrix(n, 2);
    Rng rng(41);
    for (std::size_t i = 6; i < n; ++i) {
        basis.V(i, 0) = rng.normal();
        basis.V(i, 1) = rng.normal();
    }
    const DeflationOperator D = assemble_deflation(A, basis, contiguous_groups(n, 2), 1e-10);
    CHECK(D.has_empty_group_block());
    CHECK(D.coarse_dim() == 2);
}

TEST_CASE("provenance serializes") {
    DenseMatrix coords(4, 2);
    const TentativeBasis b = nico_vectors(NicoKind::constant, coords);
    const std::string j = b.provenance_json();
    CHECK(j.find("nico") != std::string::npos);
}

TEST_CASE("basis validation rejects zero columns") {
    TentativeBasis b;
    b.V = DenseMatrix(5, 1);
    CHECK_THROWS_AS(b.validate(), std::runtime_error);
}
