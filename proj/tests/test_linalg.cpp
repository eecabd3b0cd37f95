#include "lyapshape/error.hpp"
#include "lyapshape/linalg.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace lyapshape;

TEST_CASE("norms") {
    Matrix m(2, 2);
    m << 1, -4, 2, 3;
    CHECK(l1_operator_norm(m) == doctest::Approx(7.0));
    CHECK(frobenius_norm(m) == doctest::Approx(std::sqrt(30.0)));
    CHECK(frobenius_inner(m, Matrix::Identity(2, 2)) == doctest::Approx(4.0));
}

TEST_CASE("require_square_finite rejects bad input") {
    CHECK_THROWS_AS(require_square_finite(Matrix(2, 3)), Error);
    Matrix m = Matrix::Identity(2, 2);
    m(0, 1) = std::numeric_limits<double>::quiet_NaN();
    try {
        require_square_finite(m);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonFinite);
    }
}

TEST_CASE("lexicographic subsets") {
    const auto s = lexicographic_subsets(4, 2);
    REQUIRE(s.size() == 6);
    CHECK(s.front() == std::vector<std::size_t>{0, 1});
    CHECK(s.back() == std::vector<std::size_t>{2, 3});
    CHECK(lexicographic_subsets(3, 0).size() == 1);
}

TEST_CASE("compound matrix matches Leibniz minors") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = oracle::random_matrix(rng, 4, 4);
        for (int r = 1; r <= 4; ++r) {
            const Matrix h = compound_matrix(a, static_cast<std::size_t>(r));
            const Matrix ref = oracle::naive_compound(a, r);
            CHECK((h - ref).norm() <= 1e-12 * (1.0 + ref.norm()));
        }
    }
    CHECK_THROWS_AS(compound_matrix(Matrix::Identity(3, 3), 4), Error);
    CHECK_THROWS_AS(compound_matrix(Matrix::Identity(3, 3), 0), Error);
}

TEST_CASE("Cauchy-Binet: H_r(AB) = H_r(A) H_r(B)") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix a = oracle::random_matrix(rng, 4, 4, -2, 2);
        const Matrix b = oracle::random_matrix(rng, 4, 4, -2, 2);
        for (std::size_t r = 1; r <= 4; ++r) {
            const Matrix lhs = compound_matrix(a * b, r);
            const Matrix rhs = compound_matrix(a, r) * compound_matrix(b, r);
            CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("spectral radius") {
    Matrix rot(2, 2);
    rot << 0, -2, 2, 0;
    CHECK(spectral_radius(rot).value == doctest::Approx(2.0));
    Matrix tri(3, 3);
    tri << 1, 100, 5, 0, -3, 7, 0, 0, 2;
    const auto r = spectral_radius(tri);
    CHECK(r.value == doctest::Approx(3.0));
    CHECK(r.converged);
    Matrix nil = Matrix::Zero(3, 3);
    nil(0, 1) = 1;
    nil(1, 2) = 1;
    CHECK(spectral_radius(nil).value == doctest::Approx(0.0));
}

TEST_CASE("singular values are descending") {
    Matrix m(2, 2);
    m << 3, 0, 0, -5;
    const auto s = singular_values(m);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == doctest::Approx(5.0));
    CHECK(s[1] == doctest::Approx(3.0));
}

TEST_CASE("QR step: orthogonal Q, upper R with nonnegative diagonal") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = oracle::random_matrix(rng, 4, 4);
        const auto f = qr_step(a);
        CHECK((f.q.transpose() * f.q - Matrix::Identity(4, 4)).norm() < 1e-12);
        CHECK((f.q * f.r - a).norm() < 1e-12);
        for (Eigen::Index i = 0; i < 4; ++i) {
            CHECK(f.r(i, i) >= 0.0);
            for (Eigen::Index j = 0; j < i; ++j) CHECK(f.r(i, j) == 0.0);
        }
    }
}

TEST_CASE("QR of a singular matrix reports a zero diagonal") {
    Matrix a(2, 2);
    a << 1, 2, 2, 4;
    Vector rd;
    Matrix q = a;
    qr_in_place(q, rd);
    CHECK(rd(1) == doctest::Approx(0.0).epsilon(1e-12));
}
