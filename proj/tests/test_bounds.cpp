#include "fixtures.hpp"
#include "lyapshape/bounds.hpp"
#include "lyapshape/error.hpp"
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

ExponentEstimate exact(double v) {
    ExponentEstimate e;
    e.value = v;
    e.method = EstimateMethod::ExactDiagonal;
    return e;
}

} // namespace

TEST_CASE("triangular bounds from alpha pairs") {
    const auto r = triangular_bounds({{0.1, 0.3, 10}, {-0.2, 0.5, 10}, {0.0, 0.0, 10}});
    REQUIRE(r.lower);
    REQUIRE(r.upper);
    CHECK(*r.lower == doctest::Approx(0.5));
    // j=2: 0.5 + (0.3-0.1); j=3: 0 + 0.2 + 0.7
    CHECK(*r.upper == doctest::Approx(0.9));
    const auto eq = triangular_bounds({{0.4, 0.4, 1}, {0.1, 0.1, 1}});
    CHECK(*eq.lower == doctest::Approx(*eq.upper));
    CHECK(triangular_exact({-1.0, 0.25, 0.1}) == 0.25);
    CHECK(code_of([] { triangular_exact({}); }) == Errc::InvalidArgument);
}

TEST_CASE("block structure helpers") {
    const auto b = make_block_structure({2, 1, 3});
    CHECK(b.dim() == 6);
    CHECK(b.offset(2) == 3);
    CHECK(code_of([] { make_block_structure({2, 0}); }) == Errc::InvalidArgument);
    Matrix m = Matrix::Zero(3, 3);
    m.topLeftCorner(2, 2) << 1, 2, 3, 4;
    m(0, 2) = 5;
    m(2, 2) = 1;
    CHECK(is_block_upper_triangular(m, make_block_structure({2, 1})));
    CHECK_FALSE(is_block_upper_triangular(m, make_block_structure({1, 2})));
}

TEST_CASE("block reduction agrees with the full estimate") {
    Matrix a(3, 3), b(3, 3);
    a << 1, 2, 1, 3, 0.5, 0, 0, 0, 0.8;
    b << 0.5, 1, 2, 0, 1, 1, 0, 0, 2.5;
    const auto f = MatrixFamily::finite_iid({a, b}, {0.5, 0.5}, 77);
    const auto bs = make_block_structure({2, 1});
    const auto fams = diagonal_block_families(f, bs);
    REQUIRE(fams.size() == 2);
    CHECK(fams[0].dim() == 2);
    std::vector<ExponentEstimate> diag;
    for (const auto& g : fams) diag.push_back(top_exponent(g, 40000, 8));
    const auto red = block_triangular_reduce(diag);
    const auto full = top_exponent(f, 40000, 8);
    CHECK(std::abs(red.value - full.value) <= 3 * std::hypot(red.std_error, full.std_error) + 1e-9);
    CHECK(code_of([&] { diagonal_block_families(f, make_block_structure({1, 2})); }) == Errc::NotTriangular);
    CHECK(code_of([&] { diagonal_block_families(f, make_block_structure({1, 1})); }) == Errc::DimensionMismatch);
    CHECK(block_triangular_reduce({exact(1.0), exact(1.0)}).value == 1.0);
}

TEST_CASE("shape upper bound on the DAG example") {
    const auto s = fixtures::dag_path(4);
    const auto g = build_shape_graph(s);
    const auto r = analyze_structure(g);
    const auto ub = shape_bound_upper(g, r, {{0, exact(-1.0)}}, true);
    REQUIRE(ub.upper);
    CHECK(*ub.upper == doctest::Approx(-1.0 + std::log(static_cast<double>(*r.k_star))));
    CHECK(ub.component("beta").value() == -1.0);
    REQUIRE(ub.refined_upper);
    CHECK(*ub.refined_upper <= *ub.upper + 1e-12);
    CHECK(code_of([&] { shape_bound_upper(g, r, {}, false); }) == Errc::MissingLoopExponent);
}

TEST_CASE("shape upper bound rejects cycles") {
    const auto s = validate_shape_set({fixtures::unit(2, {{0, 1}, {1, 0}})});
    const auto g = build_shape_graph(s);
    CHECK(code_of([&] { shape_bound_upper(g, analyze_structure(g), {}, false); }) == Errc::StructuralViolation);
}

TEST_CASE("shape upper bound without a zero vertex uses log k") {
    const auto s = validate_shape_set({ShapeMask::identity(2)});
    const auto g = build_shape_graph(s);
    const auto ub = shape_bound_upper(g, analyze_structure(g), {{0, exact(0.3)}}, false);
    CHECK(*ub.upper == doctest::Approx(0.3));
}

TEST_CASE("shape lower bound hypotheses") {
    const auto g = build_shape_graph(fixtures::exm2_d1());
    const auto r = analyze_structure(g);
    const BetaMap betas{{0, exact(0.7)}};
    CHECK(*shape_bound_lower(r, betas, true).lower == 0.7);
    CHECK(code_of([&] { shape_bound_lower(r, betas, false); }) == Errc::NonnegativityUnverified);
    auto empty = r;
    empty.w_set.clear();
    empty.w_labels.clear();
    CHECK(code_of([&] { shape_bound_lower(empty, betas, true); }) == Errc::EmptyW);
    auto unstable = r;
    unstable.w_set[0].stabilization.reset();
    CHECK(code_of([&] { shape_bound_lower(unstable, betas, true); }) == Errc::StabilizationFailed);
    auto overlap = r;
    overlap.w_set[0].disjoint_from_others = false;
    CHECK(code_of([&] { shape_bound_lower(overlap, betas, true); }) == Errc::DisjointnessViolation);
}

TEST_CASE("loop exponents: exact for diagonal components") {
    const auto s = fixtures::exm2_d1();
    const auto f = fixtures::two_exm(0.5, 20240601);
    const auto r = analyze_structure(build_shape_graph(s));
    const auto betas = estimate_loop_exponents(f, s, r, McParams{});
    REQUIRE(betas.count(0));
    CHECK(betas.at(0).method == EstimateMethod::ExactDiagonal);
    CHECK(betas.at(0).value == doctest::Approx(fixtures::two_exm_beta(0.5)));
    CHECK_FALSE(components_nonnegative(f, s));
}

TEST_CASE("sandwich on the two-matrix example") {
    McParams p;
    p.n = 40000;
    p.replicas = 8;
    const auto rec = bound_sandwich_check(fixtures::two_exm(0.5, 20240601), fixtures::exm2_d1(), p);
    CHECK(rec.verdict);
    CHECK(rec.upper_slack >= -rec.tolerance);
    CHECK_FALSE(rec.lower_slack.has_value());
    CHECK(rec.mc_gamma1.value == doctest::Approx(fixtures::two_exm_beta(0.5)).epsilon(0.01));
    bool recorded = false;
    for (const auto& a : rec.bounds.assumptions)
        if (a.name == "lower_bound_hypotheses") recorded = a.outcome == Outcome::Fail;
    CHECK(recorded);
}

TEST_CASE("sandwich with a nonnegative family checks both sides") {
    Matrix a(2, 2), b(2, 2);
    a << 2, 1, 0, 0.5;
    b << 0.5, 3, 0, 1;
    const auto s = validate_shape_set({ShapeMask::identity(2), fixtures::unit(2, {{0, 1}})});
    McParams p;
    p.n = 20000;
    p.replicas = 8;
    const auto rec = bound_sandwich_check(MatrixFamily::finite_iid({a, b}, {0.5, 0.5}, 5), s, p);
    CHECK(rec.verdict);
    REQUIRE(rec.lower_slack);
    CHECK(*rec.lower_slack >= -rec.tolerance);
}

TEST_CASE("forced beta shift triggers a sandwich violation") {
    McParams p;
    p.n = 20000;
    p.replicas = 8;
    const auto shift = [](BetaMap& m) {
        for (auto& [k, v] : m) v.value -= 2.0;
    };
    const auto f = fixtures::two_exm(0.5, 1);
    CHECK(code_of([&] { bound_sandwich_check(f, fixtures::exm2_d1(), p, shift); }) == Errc::SandwichViolated);
    const auto rec = bound_sandwich_check(f, fixtures::exm2_d1(), p, shift, false);
    CHECK_FALSE(rec.verdict);
}
