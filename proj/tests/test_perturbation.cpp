#include "lyapshape/error.hpp"
#include "lyapshape/linalg.hpp"
#include "lyapshape/perturbation.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
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

Matrix e(std::size_t d, std::size_t i, double c = 1.0) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), 1);
    m(static_cast<Eigen::Index>(i), 0) = c;
    return m;
}

PerturbationSpec rank_one(std::size_t d, Matrix v, std::vector<PerturbationAtom> atoms, std::uint64_t seed = 1) {
    PerturbationSpec s;
    s.dim = d;
    s.rank = 1;
    s.v = std::move(v);
    s.atoms = std::move(atoms);
    s.seed = seed;
    return s;
}

} // namespace

TEST_CASE("validation") {
    auto s = rank_one(3, e(3, 0), {{2.0, e(3, 0), 0.5}, {1.0, e(3, 1), 0.4}});
    CHECK(code_of([&] { validate_perturbation(s); }) == Errc::InvalidProbabilities);
    s.atoms[1].prob = 0.5;
    s.atoms[1].u = e(2, 0);
    CHECK(code_of([&] { validate_perturbation(s); }) == Errc::DimensionMismatch);
}

TEST_CASE("constant rank-one spectrum") {
    const auto s = rank_one(3, e(3, 0), {{3.0, e(3, 0), 1.0}});
    const auto r = rank_one_spectrum(s);
    REQUIRE(r.exponents.size() == 3);
    CHECK(r.exponents[0] == doctest::Approx(std::log(4.0)));
    CHECK(r.exponents[1] == doctest::Approx(std::log(3.0)));
    CHECK(r.exponents[2] == doctest::Approx(std::log(3.0)));
    CHECK(r.warnings.empty());
    const auto mc = spectrum(perturbation_family(s), 2000, 1);
    for (std::size_t i = 0; i < 3; ++i) CHECK(mc[i].value == doctest::Approx(r.exponents[i]).epsilon(1e-3));
}

TEST_CASE("rank-one ordering warning and degenerate atoms") {
    // eta + v^T u smaller than eta
    const auto s = rank_one(2, e(2, 0), {{2.0, e(2, 0, -1.5), 1.0}});
    const auto r = rank_one_spectrum(s);
    CHECK_FALSE(r.warnings.empty());
    const auto z = rank_one(2, e(2, 0), {{1.0, e(2, 0, -1.0), 0.5}, {2.0, e(2, 1), 0.5}});
    const auto rz = rank_one_spectrum(z);
    CHECK(rz.e_log_eta_vu == -std::numeric_limits<double>::infinity());
    CHECK(rz.exponents.back() == -std::numeric_limits<double>::infinity());
}

TEST_CASE("random rank-one spectra agree with QR") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> eta(0.5, 2.0);
    for (int trial = 0; trial < 3; ++trial) {
        const std::size_t d = 2 + trial % 2;
        Matrix v = oracle::random_matrix(rng, d, 1);
        std::vector<PerturbationAtom> atoms;
        for (int j = 0; j < 2; ++j) {
            Matrix u = oracle::random_matrix(rng, d, 1, 0.0, 1.0);
            if ((v.transpose() * u)(0, 0) < 0) u = -u;
            atoms.push_back({eta(rng), u, 0.5});
        }
        const auto s = rank_one(d, v, atoms, 40 + trial);
        const auto exact = rank_one_spectrum(s);
        const auto mc = spectrum(perturbation_family(s), 20000, 16);
        for (std::size_t i = 0; i < d; ++i)
            CHECK(std::abs(mc[i].value - exact.exponents[i]) <= 3 * mc[i].std_error + 1e-9 + 2e-3);
    }
}

TEST_CASE("invariant subspace identity") {
    const auto s = rank_one(3, Matrix{{1.0}, {0.5}, {0.0}}, {{2.0, e(3, 0), 0.5}, {0.5, e(3, 1, 2.0), 0.5}});
    const auto c = invariant_subspace_identity_check(s, 200, 20000, 8);
    CHECK(c.covector_residual < 1e-12);
    CHECK(std::abs(c.det_residual) <= 3 * c.spectrum_sum.std_error + 2e-3);
}

TEST_CASE("scaled rank-one sandwich") {
    auto s = rank_one(2, e(2, 0), {{1.0, e(2, 0, 0.5), 0.5}, {2.0, e(2, 0, 1.0), 0.5}});
    s.base = Matrix{{2, 0}, {0, 3}};
    const auto b = rank_one_scaled_bounds(s);
    REQUIRE(b.lower);
    REQUIRE(b.upper);
    CHECK(*b.upper - *b.lower == doctest::Approx(std::log(3.0) - std::log(2.0)));
    const auto mc = top_exponent(perturbation_family(s), 40000, 8);
    CHECK(mc.value >= *b.lower - 3 * mc.std_error);
    CHECK(mc.value <= *b.upper + 3 * mc.std_error);

    auto bad = s;
    bad.base = Matrix{{2, 1}, {0, 3}};
    bad.v = e(2, 1);
    CHECK(code_of([&] { rank_one_scaled_bounds(bad); }) == Errc::CommutationViolated);
    auto sing = s;
    sing.base = Matrix{{1, 0}, {0, 0}};
    CHECK(code_of([&] { rank_one_scaled_bounds(sing); }) == Errc::SingularBase);
}

TEST_CASE("block embedding exponents") {
    const std::vector<double> g{0.5, -0.2, -1.0};
    CHECK(block_embedding_exponents(g, 0.1, 2, 1) == doctest::Approx(0.5));
    CHECK(block_embedding_exponents(g, 0.7, 2, 1) == doctest::Approx(0.7));
    // top-2 sums: {0.5,-0.2,0.1x2} -> best two from multiset {0.5, 0.1, 0.1, -0.2, -1}
    CHECK(block_embedding_exponents(g, 0.1, 2, 2) == doctest::Approx(0.1));
    CHECK(code_of([&] { block_embedding_exponents(g, 0.1, 2, 3); }) == Errc::RankOutOfRange);
    CHECK(code_of([&] { block_embedding_exponents(g, 0.1, 2, 0); }) == Errc::RankOutOfRange);
}

TEST_CASE("block embedding against QR on the embedded family") {
    // A_n upper triangular with exact exponents; eta between them
    Matrix a1(2, 2), a2(2, 2);
    a1 << 3, 1, 0, 0.5;
    a2 << 2, -1, 0, 0.25;
    const std::vector<double> etas{1.2, 1.0};
    std::vector<Matrix> atoms;
    for (int j = 0; j < 2; ++j) {
        Matrix b = Matrix::Zero(4, 4);
        b.topLeftCorner(2, 2) = j == 0 ? a1 : a2;
        b.topRightCorner(2, 2) = Matrix::Ones(2, 2);
        b.bottomRightCorner(2, 2) = etas[j] * Matrix::Identity(2, 2);
        atoms.push_back(b);
    }
    const auto f = MatrixFamily::finite_iid(atoms, {0.5, 0.5}, 9);
    const double g1 = 0.5 * (std::log(3.0) + std::log(2.0));
    const double g2 = 0.5 * (std::log(0.5) + std::log(0.25));
    const double eta_mean = 0.5 * (std::log(1.2) + std::log(1.0));
    const auto mc = spectrum(f, 40000, 8);
    for (std::size_t r = 1; r <= 2; ++r)
        CHECK(std::abs(mc[r - 1].value - block_embedding_exponents({g1, g2}, eta_mean, 2, r)) <=
              3 * mc[r - 1].std_error + 2e-3);
}

TEST_CASE("rank-m duality") {
    PerturbationSpec s;
    s.dim = 3;
    s.rank = 2;
    s.v = Matrix{{1, 0}, {0, 1}, {0.5, 0.5}};
    s.atoms = {{1.5, Matrix{{1, 0}, {0, 0.5}, {0, 0}}, 0.5}, {0.8, Matrix{{0.2, 1}, {0, 0}, {1, 0}}, 0.5}};
    s.seed = 33;
    const auto r = rank_m_duality(s, 20000, 8);
    CHECK(r.within_tolerance);
    CHECK(std::abs(r.residual) <= r.tolerance);
    CHECK(r.gamma_pairs.size() == 2);
    for (const auto& gp : r.gamma_pairs) CHECK(gp.agrees);
}

TEST_CASE("rank-m scaled bounds") {
    PerturbationSpec s;
    s.dim = 3;
    s.rank = 2;
    s.base = Matrix{{2, 0, 0}, {0, 2, 0}, {0, 0, 3}};
    s.v = Matrix{{1, 0}, {0, 1}, {0, 0}};
    s.atoms = {{1.0, Matrix{{0.5, 0}, {0.2, 1}, {0, 0}}, 0.5}, {2.0, Matrix{{1, 0.3}, {0, 0.1}, {0, 0}}, 0.5}};
    s.seed = 4;
    const auto b = rank_m_scaled_bounds(s, 20000, 8);
    REQUIRE(b.lower);
    REQUIRE(b.upper);
    const auto mc = top_exponent(perturbation_family(s), 20000, 8);
    const double tol = 3 * std::hypot(mc.std_error, b.component("gamma1_reduced_se").value_or(0.0)) + 1e-9;
    CHECK(mc.value >= *b.lower - tol);
    CHECK(mc.value <= *b.upper + tol);
    auto def = s;
    def.v = Matrix{{1, 2}, {0, 0}, {0, 0}};
    CHECK(code_of([&] { rank_m_scaled_bounds(def, 100, 2); }) == Errc::RankDeficientV);
}
