#include "lyapshape/shape_graph.hpp"

#include "lyapshape/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <string>

namespace lyapshape {

ShapeMask ShapeSet::support() const {
    ShapeMask acc = ShapeMask::zero(dim_);
    for (const auto& l : labels_) acc = mask_or(acc, l);
    return acc;
}

ShapeSet validate_shape_set(std::vector<ShapeMask> labels) {
    if (labels.empty()) throw Error(Errc::InvalidArgument, "shape set needs at least one label");
    const std::size_t d = labels.front().dim();
    if (d == 0) throw Error(Errc::InvalidArgument, "shape set dimension must be >= 1");
    if (labels.size() > d * d) {
        throw Error(Errc::InvalidArgument, "shape set has more than d^2 labels");
    }
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (labels[j].dim() != d) {
            throw Error(Errc::DimensionMismatch, "label " + std::to_string(j + 1) + " has dim " +
                                                     std::to_string(labels[j].dim()) + ", expected " +
                                                     std::to_string(d));
        }
        if (labels[j].is_zero()) {
            throw Error(Errc::EmptyLabel, "label " + std::to_string(j + 1) + " is the zero mask");
        }
    }
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = i + 1; j < labels.size(); ++j)
            if (!mask_and(labels[i], labels[j]).is_zero()) {
                throw Error(Errc::OverlappingLabels, "labels " + std::to_string(i + 1) + " and " +
                                                         std::to_string(j + 1) + " overlap");
            }
    return ShapeSet(d, std::move(labels));
}

std::optional<std::size_t> ShapeGraph::find(const ShapeMask& m) const {
    auto it = std::find(vertices_.begin(), vertices_.end(), m);
    if (it == vertices_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
}

ShapeGraph build_shape_graph(const ShapeSet& s, std::size_t max_vertices) {
    if (max_vertices < s.size()) {
        throw Error(Errc::InvalidArgument, "vertex budget smaller than the number of labels");
    }
    ShapeGraph g(s);
    std::map<ShapeMask, std::size_t> index;
    std::deque<std::size_t> queue;

    auto intern = [&](const ShapeMask& m) -> std::size_t {
        auto [it, inserted] = index.emplace(m, g.vertices_.size());
        if (inserted) {
            if (g.vertices_.size() >= max_vertices) {
                throw Error(Errc::VertexBudgetExceeded,
                            "shape graph exceeds " + std::to_string(max_vertices) + " vertices");
            }
            g.vertices_.push_back(m);
            g.transitions_.emplace_back();
            if (m.is_zero()) g.zero_ = it->second;
            queue.push_back(it->second);
        }
        return it->second;
    };

    for (const auto& l : s.labels()) intern(l);
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        std::vector<std::size_t> row(s.size());
        for (std::size_t j = 0; j < s.size(); ++j) {
            // copy: intern may reallocate vertices_
            const ShapeMask current = g.vertices_[v];
            row[j] = intern(bool_product(s.label(j), current));
        }
        g.transitions_[v] = std::move(row);
    }
    return g;
}

namespace {

bool has_nontrivial_cycle(const ShapeGraph& g) {
    const std::size_t n = g.vertex_count();
    std::vector<std::size_t> indegree(n, 0);
    std::vector<std::set<std::size_t>> succ(n);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t s = 0; s < g.label_count(); ++s) {
            const std::size_t w = g.transition(v, s);
            if (w != v) succ[v].insert(w);
        }
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w : succ[v]) ++indegree[w];
    std::deque<std::size_t> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indegree[v] == 0) ready.push_back(v);
    std::size_t removed = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.front();
        ready.pop_front();
        ++removed;
        for (std::size_t w : succ[v])
            if (--indegree[w] == 0) ready.push_back(w);
    }
    return removed != n;
}

// Vertices from which `target` is reachable by a path of length >= 1 that
// does not use self-loops.
std::vector<bool> ancestors(const ShapeGraph& g, std::size_t target) {
    const std::size_t n = g.vertex_count();
    std::vector<std::vector<std::size_t>> pred(n);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t s = 0; s < g.label_count(); ++s) {
            const std::size_t w = g.transition(v, s);
            if (w != v) pred[w].push_back(v);
        }
    std::vector<bool> seen(n, false);
    std::deque<std::size_t> queue{target};
    while (!queue.empty()) {
        const std::size_t w = queue.front();
        queue.pop_front();
        for (std::size_t v : pred[w])
            if (!seen[v]) {
                seen[v] = true;
                queue.push_back(v);
            }
    }
    return seen;
}

// Boolean matrix powers are eventually periodic with index at most (d-1)^2 + 1.
std::optional<std::size_t> stabilization_index(const ShapeMask& label, const ShapeMask& w) {
    const std::size_t d = label.dim();
    const std::size_t probe_limit = (d - 1) * (d - 1) + 1;
    std::vector<ShapeMask> powers{label};
    while (powers.size() < probe_limit + d + 1) powers.push_back(bool_product(label, powers.back()));
    for (std::size_t n = 1; n <= probe_limit; ++n) {
        bool stable = true;
        for (std::size_t m = n; m <= n + d && stable; ++m) stable = powers[m - 1] == w;
        if (stable) return n;
    }
    return std::nullopt;
}

} // namespace

StructuralReport analyze_structure(const ShapeGraph& g) {
    StructuralReport rep;
    rep.label_count = g.label_count();
    rep.vertex_count = g.vertex_count();
    rep.contains_zero = g.contains_zero();
    rep.acyclic_except_self_loops = !has_nontrivial_cycle(g);
    rep.at_most_one_self_loop_per_vertex = true;

    std::set<std::size_t> loop_labels;
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        if (g.zero_vertex() == v) continue;
        std::vector<std::size_t> loops;
        for (std::size_t s = 0; s < g.label_count(); ++s)
            if (g.transition(v, s) == v) loops.push_back(s);
        if (loops.empty()) continue;
        rep.loop_vertices.push_back(v);
        rep.loop_label_of[v] = loops.front();
        loop_labels.insert(loops.begin(), loops.end());
        if (loops.size() > 1) {
            rep.at_most_one_self_loop_per_vertex = false;
            rep.multi_loop_vertices.push_back(v);
        }
    }
    rep.loop_labels.assign(loop_labels.begin(), loop_labels.end());

    if (g.contains_zero()) {
        std::size_t best = 0;
        for (std::size_t v = 0; v < g.vertex_count(); ++v) {
            if (g.zero_vertex() == v) continue;
            std::size_t surviving = 0;
            for (std::size_t s = 0; s < g.label_count(); ++s)
                if (g.transition(v, s) != *g.zero_vertex()) ++surviving;
            best = std::max(best, surviving);
        }
        rep.k_star = best;
    }

    std::set<std::size_t> w_labels;
    for (std::size_t w : rep.loop_vertices) {
        const auto anc = ancestors(g, w);
        const bool avoids = std::none_of(rep.loop_vertices.begin(), rep.loop_vertices.end(),
                                         [&](std::size_t h) { return h != w && anc[h]; });
        if (!avoids) continue;
        WVertexInfo info;
        info.vertex = w;
        info.label = rep.loop_label_of.at(w);
        const ShapeMask& wm = g.vertices()[w];
        info.stabilization = stabilization_index(g.shape_set().label(info.label), wm);
        info.disjoint_from_others = true;
        for (std::size_t v = 0; v < g.vertex_count(); ++v)
            if (v != w && !mask_and(g.vertices()[v], wm).is_zero()) info.disjoint_from_others = false;
        rep.w_set.push_back(info);
        w_labels.insert(info.label);
    }
    rep.w_labels.assign(w_labels.begin(), w_labels.end());
    return rep;
}

Decomposition decompose(const Matrix& m, const ShapeSet& s) {
    require_square_finite(m, "decompose input");
    const auto d = static_cast<std::size_t>(m.rows());
    if (d != s.dim()) {
        throw Error(Errc::DimensionMismatch, "matrix dim " + std::to_string(d) +
                                                 " differs from shape set dim " + std::to_string(s.dim()));
    }
    Decomposition out;
    out.components.assign(s.size(), Matrix::Zero(m.rows(), m.cols()));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t l = 0; l < d; ++l) {
            const double x = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
            if (x == 0.0) continue;
            bool placed = false;
            for (std::size_t j = 0; j < s.size() && !placed; ++j)
                if (s.label(j)(i, l)) {
                    out.components[j](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = x;
                    placed = true;
                }
            if (!placed) {
                throw Error(Errc::UncoveredEntry, "entry (" + std::to_string(i + 1) + ", " +
                                                      std::to_string(l + 1) +
                                                      ") is nonzero but outside every label");
            }
        }
    return out;
}

std::vector<std::vector<std::size_t>> enumerate_nonzero_monomials(const ShapeGraph& g, std::size_t n,
                                                                  std::uint64_t budget) {
    if (n < 1) throw Error(Errc::InvalidArgument, "monomial length must be >= 1");
    const std::uint64_t k = g.label_count();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (total > budget / k) {
            throw Error(Errc::BudgetExceeded, "k^n exceeds the oracle budget of " + std::to_string(budget));
        }
        total *= k;
    }
    if (total > budget) throw Error(Errc::BudgetExceeded, "k^n exceeds the oracle budget");

    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> seq;
    seq.reserve(n);
    const auto zero = g.zero_vertex();

    // walk(v): v is the vertex reached after seq.size() labels
    auto walk = [&](auto&& self, std::size_t v) -> void {
        if (seq.size() == n) {
            out.push_back(seq);
            return;
        }
        for (std::size_t s = 0; s < k; ++s) {
            const std::size_t next = g.transition(v, s);
            if (zero == next) continue;
            seq.push_back(s);
            self(self, next);
            seq.pop_back();
        }
    };
    for (std::size_t s = 0; s < k; ++s) {
        const auto start = g.find(g.shape_set().label(s));
        seq.push_back(s);
        walk(walk, *start);
        seq.pop_back();
    }
    return out;
}

EntropyRefinement entropy_refinement(const ShapeGraph& g) {
    EntropyRefinement out;
    const auto k = static_cast<double>(g.label_count());
    out.log_k = std::log(k);

    std::vector<std::size_t> nonzero;
    for (std::size_t v = 0; v < g.vertex_count(); ++v)
        if (g.zero_vertex() != v) nonzero.push_back(v);
    std::map<std::size_t, Eigen::Index> pos;
    for (std::size_t i = 0; i < nonzero.size(); ++i) pos[nonzero[i]] = static_cast<Eigen::Index>(i);

    const auto n = static_cast<Eigen::Index>(nonzero.size());
    out.walk_matrix = Matrix::Zero(n, n);
    for (std::size_t v : nonzero)
        for (std::size_t s = 0; s < g.label_count(); ++s) {
            const std::size_t w = g.transition(v, s);
            if (g.zero_vertex() == w) continue;
            out.walk_matrix(pos[v], pos[w]) += 1.0;
        }

    if (g.contains_zero()) {
        double kstar = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) kstar = std::max(kstar, out.walk_matrix.row(i).sum());
        out.log_k_star = std::log(kstar);
    }
    double max_out = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) max_out = std::max(max_out, out.walk_matrix.row(i).sum());
    out.log_max_outdegree = max_out > 0.0 ? std::log(max_out) : -std::numeric_limits<double>::infinity();

    const auto rho = spectral_radius(out.walk_matrix);
    out.rho_converged = rho.converged;
    // integer matrix: a spectral radius below 1 means it is nilpotent
    out.log_rho_m = rho.value < 0.5 ? -std::numeric_limits<double>::infinity() : std::log(rho.value);
    return out;
}

} // namespace lyapshape
