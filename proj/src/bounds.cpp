#include "lyapshape/bounds.hpp"

#include "lyapshape/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace lyapshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string label_name(std::size_t j) { return std::to_string(j + 1); }

bool is_diagonal(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j && m(i, j) != 0.0) return false;
    return true;
}

Matrix drop_small(const Matrix& m, double tol) {
    if (tol <= 0.0) return m;
    return m.unaryExpr([tol](double x) { return std::abs(x) <= tol ? 0.0 : x; });
}

const ExponentEstimate& beta_for(const BetaMap& beta_s, std::size_t label) {
    const auto it = beta_s.find(label);
    if (it == beta_s.end()) {
        throw Error(Errc::MissingLoopExponent, "no exponent supplied for loop label " + label_name(label));
    }
    return it->second;
}

void require_structure(const StructuralReport& r) {
    if (!r.acyclic_except_self_loops) {
        throw Error(Errc::StructuralViolation, "shape graph has a directed cycle that is not a self-loop");
    }
    if (!r.at_most_one_self_loop_per_vertex) {
        std::string vs;
        for (auto v : r.multi_loop_vertices) vs += (vs.empty() ? "" : ", ") + std::to_string(v + 1);
        throw Error(Errc::StructuralViolation, "vertices with more than one self-loop: " + vs);
    }
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(10);
    os << x;
    return os.str();
}

} // namespace

std::string_view to_string(Outcome o) noexcept {
    switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Unchecked: return "unchecked";
    }
    return "unchecked";
}

std::optional<double> BoundReport::component(std::string_view name) const {
    for (const auto& [k, v] : components)
        if (k == name) return v;
    return std::nullopt;
}

BoundReport triangular_bounds(const std::vector<AlphaPair>& alphas) {
    if (alphas.empty()) throw Error(Errc::InvalidArgument, "triangular_bounds needs at least one pair");
    BoundReport rep;
    rep.provenance = "triangular two-sided bound";
    double lower = -kInf;
    double upper = -kInf;
    double correction = 0.0;
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        const auto& a = alphas[j];
        if (a.alpha_minus > a.alpha_plus) {
            throw Error(Errc::InvalidArgument, "alpha_minus > alpha_plus at coordinate " + label_name(j));
        }
        lower = std::max(lower, a.alpha_plus);
        upper = std::max(upper, a.alpha_plus + correction);
        correction += a.alpha_plus - a.alpha_minus;
        rep.add_component("alpha_plus_" + label_name(j), a.alpha_plus);
        rep.add_component("alpha_minus_" + label_name(j), a.alpha_minus);
    }
    rep.lower = lower;
    rep.upper = upper;
    return rep;
}

double triangular_exact(const std::vector<double>& expectations) {
    if (expectations.empty()) throw Error(Errc::InvalidArgument, "empty expectation list");
    for (double x : expectations)
        if (std::isnan(x)) throw Error(Errc::NonFinite, "nan diagonal expectation");
    return *std::max_element(expectations.begin(), expectations.end());
}

std::size_t BlockStructure::dim() const { return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}); }

std::size_t BlockStructure::offset(std::size_t block) const {
    return std::accumulate(sizes.begin(), sizes.begin() + static_cast<std::ptrdiff_t>(block), std::size_t{0});
}

BlockStructure make_block_structure(std::vector<std::size_t> sizes) {
    if (sizes.empty()) throw Error(Errc::InvalidArgument, "block structure needs at least one block");
    for (auto s : sizes)
        if (s == 0) throw Error(Errc::InvalidArgument, "block sizes must be >= 1");
    return BlockStructure{std::move(sizes)};
}

bool is_block_upper_triangular(const Matrix& m, const BlockStructure& b) {
    if (static_cast<std::size_t>(m.rows()) != b.dim()) return false;
    for (std::size_t bi = 0; bi < b.sizes.size(); ++bi)
        for (std::size_t bj = 0; bj < bi; ++bj) {
            const auto blk = m.block(static_cast<Eigen::Index>(b.offset(bi)), static_cast<Eigen::Index>(b.offset(bj)),
                                     static_cast<Eigen::Index>(b.sizes[bi]), static_cast<Eigen::Index>(b.sizes[bj]));
            if (!blk.isZero(0.0)) return false;
        }
    return true;
}

std::vector<MatrixFamily> diagonal_block_families(const MatrixFamily& f, const BlockStructure& b) {
    if (b.dim() != f.dim()) {
        throw Error(Errc::DimensionMismatch, "block sizes sum to " + std::to_string(b.dim()) + ", family dim is " +
                                                 std::to_string(f.dim()));
    }
    for (std::size_t a = 0; a < f.atoms().size(); ++a)
        if (!is_block_upper_triangular(f.atoms()[a], b)) {
            throw Error(Errc::NotTriangular, "atom " + std::to_string(a + 1) + " is not block upper triangular");
        }
    std::vector<MatrixFamily> out;
    for (std::size_t i = 0; i < b.sizes.size(); ++i) {
        const auto off = static_cast<Eigen::Index>(b.offset(i));
        const auto sz = static_cast<Eigen::Index>(b.sizes[i]);
        out.push_back(f.map_atoms([&](const Matrix& m) -> Matrix { return m.block(off, off, sz, sz); }));
    }
    return out;
}

ExponentEstimate block_triangular_reduce(const std::vector<ExponentEstimate>& diag_exponents) {
    if (diag_exponents.empty()) throw Error(Errc::InvalidArgument, "no block exponents given");
    std::size_t best = 0;
    for (std::size_t i = 1; i < diag_exponents.size(); ++i)
        if (diag_exponents[i].value > diag_exponents[best].value) best = i;
    return diag_exponents[best];
}

BoundReport shape_bound_upper(const ShapeGraph& g, const StructuralReport& report, const BetaMap& beta_s,
                              bool refinement) {
    require_structure(report);
    BoundReport rep;
    rep.provenance = "shape-graph energy-entropy upper bound";
    rep.add_assumption("acyclic_except_self_loops", Outcome::Pass);
    rep.add_assumption("at_most_one_self_loop_per_vertex", Outcome::Pass);

    double beta = -kInf;
    for (std::size_t s : report.loop_labels) {
        const double b = beta_for(beta_s, s).value;
        rep.add_component("beta_" + label_name(s), b);
        beta = std::max(beta, b);
    }
    if (report.loop_labels.empty()) {
        rep.add_assumption("loop_labels_present", Outcome::Fail, "no self-loops: every long product vanishes");
    }
    rep.add_component("beta", beta);

    const auto ent = entropy_refinement(g);
    rep.add_component("k", static_cast<double>(report.label_count));
    rep.add_component("log_k", ent.log_k);
    double entropy = ent.log_k;
    if (report.contains_zero && report.k_star) {
        rep.add_component("k_star", static_cast<double>(*report.k_star));
        rep.add_component("log_k_star", *ent.log_k_star);
        entropy = *ent.log_k_star;
    }
    rep.add_component("log_rho_M", ent.log_rho_m);
    rep.add_component("log_max_outdegree", ent.log_max_outdegree);
    rep.upper = beta + entropy;
    if (refinement) {
        rep.refined_upper = beta + ent.log_rho_m;
        rep.add_assumption("refinement_is_heuristic", Outcome::Unchecked,
                           "beta + log rho(M) is reported for comparison only");
    }
    return rep;
}

BoundReport shape_bound_lower(const StructuralReport& report, const BetaMap& beta_s, bool nonneg_checked) {
    require_structure(report);
    if (report.w_set.empty()) throw Error(Errc::EmptyW, "no loop vertex is free of other loop ancestors");
    for (const auto& w : report.w_set) {
        if (!w.stabilization) {
            throw Error(Errc::StabilizationFailed, "powers of label " + label_name(w.label) +
                                                       " do not settle on vertex " + std::to_string(w.vertex + 1));
        }
        if (!w.disjoint_from_others) {
            throw Error(Errc::DisjointnessViolation,
                        "vertex " + std::to_string(w.vertex + 1) + " overlaps another vertex");
        }
    }
    if (!nonneg_checked) {
        throw Error(Errc::NonnegativityUnverified, "components are not certified entrywise nonnegative");
    }
    BoundReport rep;
    rep.provenance = "shape-graph loop lower bound";
    rep.add_assumption("w_nonempty", Outcome::Pass);
    rep.add_assumption("w_stabilization", Outcome::Pass);
    rep.add_assumption("w_disjointness", Outcome::Pass);
    rep.add_assumption("components_nonnegative", Outcome::Pass);
    double lower = -kInf;
    for (std::size_t s : report.w_labels) {
        const double b = beta_for(beta_s, s).value;
        rep.add_component("beta_" + label_name(s), b);
        lower = std::max(lower, b);
    }
    rep.lower = lower;
    return rep;
}

BetaMap estimate_loop_exponents(const MatrixFamily& f, const ShapeSet& s, const StructuralReport& report,
                                const McParams& p) {
    const MatrixFamily clean = f.map_atoms([&](const Matrix& m) { return drop_small(m, p.zero_tol); });
    BetaMap out;
    for (std::size_t label : report.loop_labels) {
        const MatrixFamily comp = component_family(clean, s, label);
        const bool diagonal = std::all_of(comp.atoms().begin(), comp.atoms().end(), is_diagonal);
        if (diagonal) {
            ExponentEstimate e;
            e.value = diagonal_exact_exponents(comp).max;
            e.method = EstimateMethod::ExactDiagonal;
            out[label] = e;
        } else {
            out[label] = top_exponent(comp, p.n, p.replicas, std::min(p.renorm_every, p.n));
        }
    }
    return out;
}

bool components_nonnegative(const MatrixFamily& f, const ShapeSet& s) {
    for (const auto& a : f.atoms())
        for (const auto& c : decompose(a, s).components)
            if ((c.array() < 0.0).any()) return false;
    return true;
}

SandwichRecord bound_sandwich_check(const MatrixFamily& f, const ShapeSet& s, const McParams& p,
                                    const BetaOverride& override_beta, bool throw_on_violation) {
    const MatrixFamily clean = f.map_atoms([&](const Matrix& m) { return drop_small(m, p.zero_tol); });
    for (const auto& a : clean.atoms()) (void)decompose(a, s);

    const ShapeGraph g = build_shape_graph(s);
    SandwichRecord rec;
    rec.structure = analyze_structure(g);
    BetaMap betas = estimate_loop_exponents(f, s, rec.structure, p);
    if (override_beta) override_beta(betas);

    rec.bounds = shape_bound_upper(g, rec.structure, betas, true);
    const bool nonneg = components_nonnegative(clean, s);
    std::optional<double> lower_se;
    try {
        const BoundReport low = shape_bound_lower(rec.structure, betas, nonneg);
        rec.bounds.lower = low.lower;
        double se = 0.0;
        for (std::size_t label : rec.structure.w_labels)
            if (betas.at(label).value == *low.lower) {
                se = betas.at(label).std_error;
                break;
            }
        lower_se = se;
        rec.bounds.add_assumption("lower_bound_hypotheses", Outcome::Pass);
    } catch (const Error& e) {
        if (exit_class(e.code()) != ErrorClass::Assumption) throw;
        rec.bounds.add_assumption("lower_bound_hypotheses", Outcome::Fail, e.what());
    }

    rec.mc_gamma1 = top_exponent(f, p.n, p.replicas, std::min(p.renorm_every, p.n));

    double beta_se = 0.0;
    const double beta = *rec.bounds.component("beta");
    for (std::size_t label : rec.structure.loop_labels)
        if (betas.at(label).value == beta) {
            beta_se = betas.at(label).std_error;
            break;
        }
    const double mc = rec.mc_gamma1.value;
    const double se = rec.mc_gamma1.std_error;
    rec.tolerance = p.se_multiplier * std::hypot(se, beta_se) + p.sandwich_tol;
    rec.upper_slack = *rec.bounds.upper - mc;
    bool ok = rec.upper_slack >= -rec.tolerance;
    if (rec.bounds.lower) {
        rec.lower_slack = mc - *rec.bounds.lower;
        const double low_tol = p.se_multiplier * std::hypot(se, *lower_se) + p.sandwich_tol;
        ok = ok && *rec.lower_slack >= -low_tol;
    }
    rec.verdict = ok;
    rec.bounds.add_assumption("sandwich", ok ? Outcome::Pass : Outcome::Fail);
    if (!ok && throw_on_violation) {
        std::string msg = "mc_gamma1 = " + fmt(mc) + " (se " + fmt(se) + "), upper = " + fmt(*rec.bounds.upper);
        if (rec.bounds.lower) msg += ", lower = " + fmt(*rec.bounds.lower);
        msg += ", tolerance = " + fmt(rec.tolerance);
        throw Error(Errc::SandwichViolated, msg);
    }
    return rec;
}

} // namespace lyapshape
