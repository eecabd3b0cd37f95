#include "fixtures.hpp"
#include "lyapshape/cocycle.hpp"
#include "lyapshape/error.hpp"
#include "lyapshape/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lyapshape;

namespace {

Errc code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::InvalidArgument;
}

Matrix diag(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v.asDiagonal();
}

} // namespace

TEST_CASE("counter rng is a pure function of (seed, replica, t)") {
    CounterRng a(42, 3), b(42, 3), c(42, 4);
    CHECK(a.uniform(17) == b.uniform(17));
    CHECK(a.uniform(17) != c.uniform(17));
    double mean = 0.0;
    for (std::uint64_t t = 0; t < 20000; ++t) {
        const double u = a.uniform(t);
        CHECK_UNARY(u >= 0.0);
        CHECK_UNARY(u < 1.0);
        mean += u;
    }
    CHECK(mean / 20000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("family construction errors") {
    const Matrix i2 = Matrix::Identity(2, 2);
    CHECK(code_of([&] { MatrixFamily::finite_iid({i2, i2}, {0.5, 0.4}, 1); }) == Errc::InvalidProbabilities);
    CHECK(code_of([&] { MatrixFamily::finite_iid({i2, i2}, {1.0, 0.0}, 1); }) == Errc::InvalidProbabilities);
    CHECK(code_of([&] { MatrixFamily::finite_iid({i2}, {0.5, 0.5}, 1); }) == Errc::InvalidProbabilities);
    CHECK(code_of([&] { MatrixFamily::finite_iid({i2, Matrix::Identity(3, 3)}, {0.5, 0.5}, 1); }) ==
          Errc::DimensionMismatch);
    Matrix bad = i2;
    bad(0, 1) = std::nan("");
    CHECK(code_of([&] { MatrixFamily::finite_iid({bad}, {1.0}, 1); }) == Errc::NonFinite);
    CHECK(code_of([&] { MatrixFamily::schedule({i2}, {0, 1}); }) == Errc::InvalidArgument);
}

TEST_CASE("sampling frequencies and coupling") {
    const auto f = fixtures::two_exm(0.3, 99);
    std::size_t zeros = 0;
    const std::uint64_t n = 50000;
    for (std::uint64_t t = 0; t < n; ++t)
        if (f.atom_index(0, t) == 0) ++zeros;
    CHECK(static_cast<double>(zeros) / n == doctest::Approx(0.3).epsilon(0.03));
    const auto g = f.map_atoms([](const Matrix& m) { return Matrix(m.topLeftCorner(2, 2)); });
    CHECK(g.dim() == 2);
    for (std::uint64_t t = 0; t < 200; ++t) CHECK(g.atom_index(5, t) == f.atom_index(5, t));
    CHECK(f.with_seed(100).atom_index(0, 0) == MatrixFamily::finite_iid(fixtures::two_exm_atoms(), {0.3, 0.7}, 100).atom_index(0, 0));
}

TEST_CASE("schedule walks the pattern") {
    const auto f = MatrixFamily::schedule({diag({2, 1}), diag({1, 3})}, {0, 1, 1});
    CHECK(f.deterministic());
    CHECK(f.atom_index(7, 0) == 0);
    CHECK(f.atom_index(0, 2) == 1);
    CHECK(f.atom_index(0, 3) == 0);
    const auto d = diagonal_exact_exponents(f);
    CHECK(d.betas[0] == doctest::Approx(std::log(2.0) / 3));
    CHECK(d.betas[1] == doctest::Approx(2 * std::log(3.0) / 3));
    const auto e = top_exponent(f, 3000, 4);
    CHECK(e.replicas == 1);
    CHECK(e.std_error == 0.0);
    CHECK(e.value == doctest::Approx(d.max).epsilon(1e-3));
}

TEST_CASE("top exponent of a constant matrix is log rho") {
    Matrix a(2, 2);
    a << 1, 1, 1, 0;
    const auto f = MatrixFamily::finite_iid({a}, {1.0}, 0);
    const double golden = std::log((1 + std::sqrt(5.0)) / 2);
    CHECK(top_exponent(f, 20000, 1).value == doctest::Approx(golden).epsilon(1e-3));
    CHECK(top_exponent(f, 20000, 1, 1).value == doctest::Approx(golden).epsilon(1e-3));
    CHECK(top_exponent(f, 20000, 1, 16, NormKind::Frobenius).value == doctest::Approx(golden).epsilon(1e-3));
}

TEST_CASE("renormalisation period does not change the result") {
    const auto f = fixtures::two_exm(0.5, 3);
    const auto a = top_exponent(f, 4000, 4, 1);
    const auto b = top_exponent(f, 4000, 4, 16);
    const auto c = top_exponent(f, 4000, 4, 64);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-9));
    CHECK(a.value == doctest::Approx(c.value).epsilon(1e-9));
}

TEST_CASE("estimator argument and numeric errors") {
    const auto f = fixtures::two_exm(0.5, 3);
    CHECK(code_of([&] { top_exponent(f, 100, 1); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { top_exponent(f, 100, 4, 0); }) == Errc::InvalidArgument);
    CHECK(code_of([&] { top_exponent(f, 0, 4); }) == Errc::InvalidArgument);
    const auto nil = MatrixFamily::finite_iid({Matrix{{0, 1}, {0, 0}}}, {1.0}, 0);
    CHECK(code_of([&] { top_exponent(nil, 100, 1); }) == Errc::SingularCollapse);
    CHECK(code_of([&] { spectrum(nil, 100, 1); }) == Errc::RankCollapse);
    CHECK(code_of([&] { smallest_exponent_via_inverse(nil, 100, 1); }) == Errc::SingularSample);
    CHECK(code_of([&] { regularity_diagnostic(f, 4); }) == Errc::InvalidArgument);
}

TEST_CASE("replica results are independent of thread scheduling") {
    const auto f = fixtures::two_exm(0.5, 17);
    const auto a = top_exponent(f, 5000, 8);
    const auto b = top_exponent(f, 5000, 8);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
    const auto t = top_exponent_trace(f, 5000, 8, 16, {1000, 5000});
    CHECK(t.estimate.value == a.value);
    REQUIRE(t.per_replica.size() == 8);
    CHECK(t.per_replica[0].size() == 2);
}

TEST_CASE("diagonal exact exponents match Monte Carlo") {
    const auto f = MatrixFamily::finite_iid({diag({2, 0.5, 1}), diag({0.25, 3, 1.5})}, {0.5, 0.5}, 8);
    const auto d = diagonal_exact_exponents(f);
    CHECK(d.betas[0] == doctest::Approx(0.5 * std::log(0.5)));
    CHECK(d.betas[1] == doctest::Approx(0.5 * std::log(1.5)));
    const auto mc = top_exponent(f, 40000, 8);
    CHECK(std::abs(mc.value - d.max) <= 4 * mc.std_error + 1e-3);
    CHECK(code_of([&] { diagonal_exact_exponents(fixtures::two_exm(0.5, 1)); }) == Errc::NotDiagonal);
    CHECK(code_of([&] { diagonal_exact_exponents(MatrixFamily::finite_iid({diag({1, 0})}, {1.0}, 0)); }) ==
          Errc::ZeroDiagonalEntry);
}

TEST_CASE("spectrum of a triangular family matches diagonal expectations") {
    Matrix a(3, 3), b(3, 3);
    a << 2, 1, 0, 0, 0.5, 3, 0, 0, 1;
    b << 1, 0, 2, 0, 3, 1, 0, 0, 0.25;
    const auto f = MatrixFamily::finite_iid({a, b}, {0.5, 0.5}, 7);
    auto expect = diagonal_log_expectations(f);
    std::sort(expect.rbegin(), expect.rend());
    const auto s = spectrum(f, 40000, 8);
    REQUIRE(s.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(s[i].value - expect[i]) <= 4 * s[i].std_error + 2e-3);
    double sum = 0.0;
    for (const auto& e : s) sum += e.value;
    CHECK(sum == doctest::Approx(expected_log_abs_det(f)).epsilon(2e-3));
    const auto lo = smallest_exponent_via_inverse(f, 40000, 8);
    CHECK(std::abs(lo.value - expect[2]) <= 4 * lo.std_error + 2e-3);
}

TEST_CASE("alpha bounds bracket the diagonal log-average") {
    Matrix a(2, 2), b(2, 2);
    a << 2, 1, 0, 1;
    b << 0.5, 0, 0, 3;
    const auto f = MatrixFamily::finite_iid({a, b}, {0.5, 0.5}, 21);
    const auto al = alpha_bounds(f, 0, 20000);
    CHECK(al.alpha_minus <= al.alpha_plus);
    CHECK(al.alpha_minus == doctest::Approx(0.0).epsilon(0.02));
    CHECK(code_of([&] { alpha_bounds(fixtures::two_exm(0.5, 1), 0, 100); }) == Errc::NotTriangular);
}

TEST_CASE("regularity diagnostic") {
    const auto f = MatrixFamily::finite_iid({diag({2, 0.5}), diag({1, 1})}, {0.5, 0.5}, 4);
    const auto r = regularity_diagnostic(f, 8000);
    CHECK(r.checkpoints.size() == 4);
    CHECK(r.checkpoints.back().step == 8000);
    CHECK(r.gaps.size() == 2);
    CHECK(r.spread >= 0.0);
    CHECK(r.temperedness == doctest::Approx(std::log(2.0) / 4000).epsilon(1e-6));
}

TEST_CASE("component family") {
    const auto s = fixtures::exm2_d1();
    const auto f = fixtures::two_exm(0.5, 1);
    const auto c0 = component_family(f, s, 0);
    CHECK(c0.atoms()[1] == diag({1, 2, 3, 4}));
    for (std::uint64_t t = 0; t < 50; ++t) CHECK(c0.atom_index(0, t) == f.atom_index(0, t));
}
