#pragma once

// Shape sets, the shape graph they generate, and its structural analysis.
//
// Label and vertex indices are 0-based in this API. JSON reports use 1-based
// label indices.

#include "lyapshape/linalg.hpp"
#include "lyapshape/shape_mask.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace lyapshape {

/// Nonzero, pairwise-disjoint masks L_1..L_k of a common dimension.
/// Only constructible through `validate_shape_set`.
class ShapeSet {
public:
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return labels_.size(); }
    const ShapeMask& label(std::size_t j) const { return labels_.at(j); }
    const std::vector<ShapeMask>& labels() const noexcept { return labels_; }
    /// Union of all label supports.
    ShapeMask support() const;

private:
    friend ShapeSet validate_shape_set(std::vector<ShapeMask> labels);
    ShapeSet(std::size_t dim, std::vector<ShapeMask> labels) : dim_(dim), labels_(std::move(labels)) {}

    std::size_t dim_ = 0;
    std::vector<ShapeMask> labels_;
};

/// Errors: EmptyLabel, OverlappingLabels(i, j) (1-based in the message),
/// DimensionMismatch, InvalidArgument for an empty list or k > d^2.
ShapeSet validate_shape_set(std::vector<ShapeMask> labels);

class ShapeGraph {
public:
    const ShapeSet& shape_set() const noexcept { return set_; }
    std::size_t label_count() const noexcept { return set_.size(); }
    const std::vector<ShapeMask>& vertices() const noexcept { return vertices_; }
    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    /// T(v, L_s) = <L_s v> as a vertex index.
    std::size_t transition(std::size_t v, std::size_t s) const { return transitions_.at(v).at(s); }
    bool contains_zero() const noexcept { return zero_.has_value(); }
    std::optional<std::size_t> zero_vertex() const noexcept { return zero_; }
    std::optional<std::size_t> find(const ShapeMask& m) const;

private:
    friend ShapeGraph build_shape_graph(const ShapeSet& s, std::size_t max_vertices);
    explicit ShapeGraph(ShapeSet s) : set_(std::move(s)) {}

    ShapeSet set_;
    std::vector<ShapeMask> vertices_;
    std::vector<std::vector<std::size_t>> transitions_;
    std::optional<std::size_t> zero_;
};

inline constexpr std::size_t kDefaultVertexBudget = 4096;

/// Breadth-first closure from the seed vertices L_1..L_k, applying labels in
/// order. Vertex indices follow discovery order. Throws VertexBudgetExceeded.
ShapeGraph build_shape_graph(const ShapeSet& s, std::size_t max_vertices = kDefaultVertexBudget);

struct WVertexInfo {
    std::size_t vertex = 0;
    std::size_t label = 0;
    /// First n with <L_s^m> = w for every m in [n, n + d]; absent if the probe failed.
    std::optional<std::size_t> stabilization;
    /// v AND w = O_d for every other vertex v.
    bool disjoint_from_others = false;
};

struct StructuralReport {
    std::size_t label_count = 0;
    std::size_t vertex_count = 0;
    bool contains_zero = false;
    bool acyclic_except_self_loops = false;
    bool at_most_one_self_loop_per_vertex = false;
    /// Nonzero vertices carrying a self-loop (H), and their loop labels (L_H).
    std::vector<std::size_t> loop_vertices;
    std::vector<std::size_t> loop_labels;
    /// Self-loop label per loop vertex (first one when several).
    std::map<std::size_t, std::size_t> loop_label_of;
    std::optional<std::size_t> k_star;
    std::vector<WVertexInfo> w_set;
    std::vector<std::size_t> w_labels;
    /// Vertices that violate the one-self-loop hypothesis (diagnostics).
    std::vector<std::size_t> multi_loop_vertices;
};

StructuralReport analyze_structure(const ShapeGraph& g);

struct Decomposition {
    std::vector<Matrix> components;
};

/// components[j](i,l) = m(i,l) where L_j(i,l) = 1, zero elsewhere.
/// Throws UncoveredEntry when m has a nonzero entry outside every label.
Decomposition decompose(const Matrix& m, const ShapeSet& s);

inline constexpr std::uint64_t kDefaultMonomialBudget = 1'000'000;

/// Label sequences (i_1..i_n), i_1 applied first, whose cumulative shape
/// <L_{i_n} ... L_{i_1}> is nonzero. Walks the graph; k^n must not exceed
/// `budget` (BudgetExceeded).
std::vector<std::vector<std::size_t>> enumerate_nonzero_monomials(
    const ShapeGraph& g, std::size_t n, std::uint64_t budget = kDefaultMonomialBudget);

struct EntropyRefinement {
    double log_k = 0.0;
    std::optional<double> log_k_star;
    /// log of the spectral radius of the walk-count matrix on nonzero vertices;
    /// -infinity when that matrix is nilpotent.
    double log_rho_m = 0.0;
    double log_max_outdegree = 0.0;
    Matrix walk_matrix;
    bool rho_converged = true;
};

EntropyRefinement entropy_refinement(const ShapeGraph& g);

} // namespace lyapshape
