#pragma once

// Shape sets and families from the worked examples.

#include "lyapshape/cocycle.hpp"
#include "lyapshape/shape_graph.hpp"

#include <cmath>
#include <vector>

namespace fixtures {

using lyapshape::Matrix;
using lyapshape::ShapeMask;
using lyapshape::ShapeSet;

inline ShapeMask unit(std::size_t d, std::vector<std::pair<std::size_t, std::size_t>> ones) {
    ShapeMask m(d);
    for (auto [i, j] : ones) m.set(i, j);
    return m;
}

// 3x3 upper triangular: identity plus the strictly upper part
inline ShapeSet exm1_d1() {
    return lyapshape::validate_shape_set({ShapeMask::identity(3), unit(3, {{0, 1}, {0, 2}, {1, 2}})});
}

inline ShapeSet exm2_d1() {
    return lyapshape::validate_shape_set({ShapeMask::identity(4), unit(4, {{3, 0}}), unit(4, {{1, 2}, {1, 3}})});
}

inline ShapeSet exm2_d2() {
    return lyapshape::validate_shape_set({ShapeMask::identity(4), unit(4, {{1, 2}, {1, 3}, {3, 0}})});
}

inline std::vector<Matrix> two_exm_atoms() {
    Matrix a(4, 4), b(4, 4);
    a << 2, 0, 0, 0, 0, 1, -1, -1, 0, 0, -1, 0, 0, 0, 0, -2;
    b << 1, 0, 0, 0, 0, 2, 0, 0, 0, 0, 3, 0, 5, 0, 0, 4;
    return {a, b};
}

inline lyapshape::MatrixFamily two_exm(double p, std::uint64_t seed) {
    return lyapshape::MatrixFamily::finite_iid(two_exm_atoms(), {p, 1.0 - p}, seed);
}

/// beta for the two-matrix example: max{p log 2, (1-p) log 2, (1-p) log 3, p log 2 + (1-p) log 4}.
inline double two_exm_beta(double p) {
    const double l2 = std::log(2.0), l3 = std::log(3.0), l4 = std::log(4.0);
    return std::max({p * l2, (1 - p) * l2, (1 - p) * l3, p * l2 + (1 - p) * l4});
}

/// Path DAG 1 -> 2 -> ... -> d: identity plus one label per edge.
inline ShapeSet dag_path(std::size_t d) {
    std::vector<ShapeMask> labels{ShapeMask::identity(d)};
    for (std::size_t i = 0; i + 1 < d; ++i) labels.push_back(unit(d, {{i, i + 1}}));
    return lyapshape::validate_shape_set(labels);
}

} // namespace fixtures
