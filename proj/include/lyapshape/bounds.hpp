#pragma once

// Closed-form bounds: triangular two-sided bound, block-triangular reduction,
// and the shape-graph energy/entropy bounds with their hypothesis checks.

#include "lyapshape/cocycle.hpp"
#include "lyapshape/shape_graph.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lyapshape {

enum class Outcome { Pass, Fail, Unchecked };

std::string_view to_string(Outcome o) noexcept;

struct Assumption {
    std::string name;
    Outcome outcome = Outcome::Unchecked;
    std::string detail;
};

/// Lower/upper may be absent (a lower-only report has no upper). Components
/// keep insertion order so serialized reports are stable.
struct BoundReport {
    std::optional<double> lower;
    std::optional<double> upper;
    std::vector<std::pair<std::string, double>> components;
    std::vector<Assumption> assumptions;
    std::string provenance;
    /// beta + log rho(M); heuristic, never used as the bound.
    std::optional<double> refined_upper;

    std::optional<double> component(std::string_view name) const;
    void add_component(std::string name, double value) { components.emplace_back(std::move(name), value); }
    void add_assumption(std::string name, Outcome o, std::string detail = {}) {
        assumptions.push_back({std::move(name), o, std::move(detail)});
    }
};

/// lower = max_j alpha_j^+, upper = max_j (alpha_j^+ + sum_{r<j} (alpha_r^+ - alpha_r^-)).
BoundReport triangular_bounds(const std::vector<AlphaPair>& alphas);

/// Max of the diagonal log-expectations. Throws InvalidArgument on an empty list, NonFinite on nan.
double triangular_exact(const std::vector<double>& expectations);

struct BlockStructure {
    std::vector<std::size_t> sizes;

    std::size_t dim() const;
    std::size_t offset(std::size_t block) const;
};

/// Throws InvalidArgument for an empty list or a zero block size.
BlockStructure make_block_structure(std::vector<std::size_t> sizes);

bool is_block_upper_triangular(const Matrix& m, const BlockStructure& b);

/// Diagonal-block subfamilies, coupled step-by-step with `f`.
/// Throws DimensionMismatch when the block sizes do not sum to dim,
/// NotTriangular when an atom has a nonzero block below the diagonal.
std::vector<MatrixFamily> diagonal_block_families(const MatrixFamily& f, const BlockStructure& b);

/// Max by value; the standard error of the winner is carried. Ties: lowest index.
ExponentEstimate block_triangular_reduce(const std::vector<ExponentEstimate>& diag_exponents);

using BetaMap = std::map<std::size_t, ExponentEstimate>;  ///< 0-based label -> beta_s

/// beta + log k, or beta + log k* when O_d is a vertex.
/// Throws StructuralViolation, MissingLoopExponent.
BoundReport shape_bound_upper(const ShapeGraph& g, const StructuralReport& report, const BetaMap& beta_s,
                              bool refinement);

/// max over loop labels of W of beta_s.
/// Throws EmptyW, StabilizationFailed, DisjointnessViolation, NonnegativityUnverified, MissingLoopExponent.
BoundReport shape_bound_lower(const StructuralReport& report, const BetaMap& beta_s, bool nonneg_checked);

struct McParams {
    std::uint64_t n = 100'000;
    std::uint64_t replicas = 16;
    std::uint64_t renorm_every = kDefaultRenormEvery;
    /// Absolute slack added to se_multiplier * combined standard error.
    double sandwich_tol = 1e-9;
    double se_multiplier = 3.0;
    double zero_tol = 0.0;
};

/// beta_s for every loop label: exact when the component family is diagonal,
/// Monte Carlo top_exponent otherwise.
BetaMap estimate_loop_exponents(const MatrixFamily& f, const ShapeSet& s, const StructuralReport& report,
                                const McParams& p);

/// True when every component of every atom is entrywise >= 0.
bool components_nonnegative(const MatrixFamily& f, const ShapeSet& s);

struct SandwichRecord {
    ExponentEstimate mc_gamma1;
    BoundReport bounds;
    /// upper - mc; lower slack is mc - lower.
    double upper_slack = 0.0;
    std::optional<double> lower_slack;
    double tolerance = 0.0;
    bool verdict = false;
    StructuralReport structure;
};

/// Optional hook that rewrites the beta map before the bounds are built.
using BetaOverride = std::function<void(BetaMap&)>;

/// Decompose, estimate beta_s, build both bounds, estimate gamma_1 and check
/// lower - tol <= mc <= upper + tol. The lower bound is skipped, with the
/// failed hypothesis recorded, when its conditions do not hold. With
/// `throw_on_violation` a failed check raises SandwichViolated whose message
/// carries every number; otherwise the verdict is returned.
SandwichRecord bound_sandwich_check(const MatrixFamily& f, const ShapeSet& s, const McParams& p,
                                    const BetaOverride& override_beta = {}, bool throw_on_violation = true);

} // namespace lyapshape
