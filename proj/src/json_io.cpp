#include "lyapshape/json_io.hpp"

#include "lyapshape/error.hpp"

#include <cmath>
#include <limits>

namespace lyapshape {

namespace {

std::string child(const std::string& path, std::string_view key) { return path + "/" + std::string(key); }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

[[noreturn]] void fail(const std::string& path, const std::string& what, Errc code = Errc::ParseError) {
    throw ConfigError(code, what, path);
}

// Re-raise a library error with the location it came from.
template <class Fn>
auto at_path(const std::string& path, Fn fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.code(), e.detail(), path);
    }
}

const Json& need(const Json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path, "missing key \"" + std::string(key) + "\"");
    return *it;
}

const Json* maybe(const Json& obj, std::string_view key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::uint64_t to_u64(const Json& j, const std::string& path) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(path, "expected a nonnegative integer");
}

std::size_t to_size(const Json& j, const std::string& path) { return static_cast<std::size_t>(to_u64(j, path)); }

const Json& need_array(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

std::vector<Matrix> matrices_from_json(const Json& j, std::size_t dim, const std::string& path) {
    need_array(j, path);
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(matrix_from_json(j[i], dim, dim, child(path, i)));
    return out;
}

std::vector<double> numbers_from_json(const Json& j, const std::string& path) {
    need_array(j, path);
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(json_to_number(j[i], child(path, i)));
    return out;
}

Json optional_number(const std::optional<double>& x) { return x ? number_to_json(*x) : Json(nullptr); }

Json one_based(const std::vector<std::size_t>& xs) {
    Json out = Json::array();
    for (auto x : xs) out.push_back(x + 1);
    return out;
}

} // namespace

Json parse_json_text(std::string_view text, std::string_view source) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < byte; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string msg = e.what();
        if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
        throw Error(Errc::ParseError, std::string(source) + ": line " + std::to_string(line) + ", column " +
                                          std::to_string(col) + ": " + msg);
    }
}

std::size_t locate_line(std::string_view text, std::string_view pointer) {
    std::size_t pos = 0;
    std::size_t start = 0;
    while (start < pointer.size()) {
        if (pointer[start] == '/') ++start;
        const std::size_t end = std::min(pointer.find('/', start), pointer.size());
        const std::string_view token = pointer.substr(start, end - start);
        start = end;
        if (token.empty()) continue;
        if (token.find_first_not_of("0123456789") == std::string_view::npos) continue;  // array index
        const std::string quoted = "\"" + std::string(token) + "\"";
        std::size_t found = pos;
        while (true) {
            found = text.find(quoted, found);
            if (found == std::string_view::npos) return 0;
            std::size_t k = found + quoted.size();
            while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
            if (k < text.size() && text[k] == ':') break;
            found += quoted.size();
        }
        pos = found;
    }
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

Json number_to_json(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

double json_to_number(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    fail(path, "expected a number");
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& path) {
    if (cols == 0) cols = rows;
    need_array(j, path);
    const auto r = static_cast<Eigen::Index>(rows);
    const auto c = static_cast<Eigen::Index>(cols);
    Matrix m(r, c);
    const bool nested = !j.empty() && j[0].is_array();
    if (nested) {
        if (j.size() != rows) {
            fail(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()),
                 Errc::DimensionMismatch);
        }
        for (std::size_t i = 0; i < rows; ++i) {
            const auto rp = child(path, i);
            need_array(j[i], rp);
            if (j[i].size() != cols) {
                fail(rp, "expected " + std::to_string(cols) + " entries, got " + std::to_string(j[i].size()),
                     Errc::DimensionMismatch);
            }
            for (std::size_t k = 0; k < cols; ++k)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = json_to_number(j[i][k], child(rp, k));
        }
    } else {
        if (j.size() != rows * cols) {
            fail(path, "expected " + std::to_string(rows * cols) + " entries, got " + std::to_string(j.size()),
                 Errc::DimensionMismatch);
        }
        for (std::size_t i = 0; i < rows * cols; ++i)
            m(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) =
                json_to_number(j[i], child(path, i));
    }
    if (!m.allFinite()) fail(path, "matrix has a non-finite entry", Errc::NonFinite);
    return m;
}

Json shape_set_to_json(const ShapeSet& s) {
    Json labels = Json::array();
    for (const auto& l : s.labels()) {
        Json bits = Json::array();
        for (std::size_t i = 0; i < s.dim(); ++i)
            for (std::size_t k = 0; k < s.dim(); ++k) bits.push_back(l(i, k) ? 1 : 0);
        labels.push_back(std::move(bits));
    }
    return Json{{"dim", s.dim()}, {"labels", std::move(labels)}};
}

ShapeSet shape_set_from_json(const Json& j, const std::string& path) {
    const std::size_t d = to_size(need(j, "dim", path), child(path, "dim"));
    if (d < 1) fail(child(path, "dim"), "dim must be >= 1", Errc::InvalidArgument);
    const auto lp = child(path, "labels");
    const Json& labels = need_array(need(j, "labels", path), lp);
    std::vector<ShapeMask> masks;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto p = child(lp, i);
        const Matrix m = matrix_from_json(labels[i], d, d, p);
        for (Eigen::Index a = 0; a < m.size(); ++a)
            if (m.data()[a] != 0.0 && m.data()[a] != 1.0) fail(p, "label entries must be 0 or 1");
        masks.push_back(shape_of(m));
    }
    return at_path(lp, [&] { return validate_shape_set(std::move(masks)); });
}

MatrixFamily family_from_json(const Json& j, const std::optional<ShapeSet>& set, const std::string& path) {
    const std::size_t d = to_size(need(j, "dim", path), child(path, "dim"));
    if (d < 1) fail(child(path, "dim"), "dim must be >= 1", Errc::InvalidArgument);
    std::string kind = "finite_iid";
    if (const Json* k = maybe(j, "kind")) {
        if (!k->is_string()) fail(child(path, "kind"), "expected a string");
        kind = k->get<std::string>();
    }
    const std::uint64_t seed = maybe(j, "seed") ? to_u64(j["seed"], child(path, "seed")) : 0;

    auto read_probs = [&](std::size_t n_atoms) {
        if (const Json* p = maybe(j, "probs")) return numbers_from_json(*p, child(path, "probs"));
        if (n_atoms == 1) return std::vector<double>{1.0};
        fail(path, "missing key \"probs\"");
    };

    if (kind == "finite_iid") {
        auto atoms = matrices_from_json(need(j, "atoms", path), d, child(path, "atoms"));
        auto probs = read_probs(atoms.size());
        return at_path(child(path, "probs"),
                       [&] { return MatrixFamily::finite_iid(std::move(atoms), std::move(probs), seed); });
    }
    if (kind == "schedule") {
        auto atoms = matrices_from_json(need(j, "atoms", path), d, child(path, "atoms"));
        std::vector<std::size_t> pattern;
        if (const Json* p = maybe(j, "pattern")) {
            const auto pp = child(path, "pattern");
            need_array(*p, pp);
            for (std::size_t i = 0; i < p->size(); ++i) {
                const std::size_t idx = to_size((*p)[i], child(pp, i));
                if (idx < 1) fail(child(pp, i), "pattern entries are 1-based atom indices", Errc::InvalidArgument);
                pattern.push_back(idx - 1);
            }
        }
        return at_path(child(path, "pattern"),
                       [&] { return MatrixFamily::schedule(std::move(atoms), std::move(pattern)); });
    }
    if (kind == "composite") {
        if (!set) fail(path, "a composite family needs a shape_set", Errc::InvalidArgument);
        if (set->dim() != d) fail(child(path, "dim"), "family dim differs from shape_set dim", Errc::DimensionMismatch);
        const auto cp = child(path, "components");
        const Json& comps = need_array(need(j, "components", path), cp);
        std::vector<std::vector<Matrix>> components;
        for (std::size_t a = 0; a < comps.size(); ++a)
            components.push_back(matrices_from_json(comps[a], d, child(cp, a)));
        auto probs = read_probs(components.size());
        return at_path(cp, [&] {
            return MatrixFamily::composite(*set, std::move(components), std::move(probs), seed);
        });
    }
    fail(child(path, "kind"), "unknown family kind \"" + kind + "\"", Errc::InvalidArgument);
}

Json family_to_json(const MatrixFamily& f) {
    Json out{{"dim", f.dim()}, {"kind", std::string(to_string(f.kind()))}};
    Json atoms = Json::array();
    for (const auto& a : f.atoms()) atoms.push_back(matrix_to_json(a));
    out["atoms"] = std::move(atoms);
    if (f.kind() == FamilyKind::DeterministicSchedule) {
        Json pattern = Json::array();
        for (auto p : f.pattern()) pattern.push_back(p + 1);
        out["pattern"] = std::move(pattern);
    } else {
        out["probs"] = f.probs();
        out["seed"] = f.seed();
    }
    return out;
}

PerturbationSpec perturbation_from_json(const Json& j, const std::string& path) {
    PerturbationSpec p;
    p.dim = to_size(need(j, "dim", path), child(path, "dim"));
    p.rank = maybe(j, "rank") ? to_size(j["rank"], child(path, "rank")) : 1;
    if (p.dim < 1 || p.rank < 1) fail(path, "dim and rank must be >= 1", Errc::InvalidArgument);
    if (p.rank > p.dim) fail(child(path, "rank"), "rank exceeds dim", Errc::RankOutOfRange);
    if (const Json* b = maybe(j, "base")) {
        if (b->is_string()) {
            if (b->get<std::string>() != "identity") fail(child(path, "base"), "base must be a matrix or \"identity\"");
        } else {
            p.base = matrix_from_json(*b, p.dim, p.dim, child(path, "base"));
        }
    }
    p.v = matrix_from_json(need(j, "V", path), p.dim, p.rank, child(path, "V"));
    p.seed = maybe(j, "seed") ? to_u64(j["seed"], child(path, "seed")) : 0;
    const auto ap = child(path, "atoms");
    const Json& atoms = need_array(need(j, "atoms", path), ap);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const auto at = child(ap, i);
        PerturbationAtom a;
        a.eta = json_to_number(need(atoms[i], "eta", at), child(at, "eta"));
        a.u = matrix_from_json(need(atoms[i], "U", at), p.dim, p.rank, child(at, "U"));
        a.prob = maybe(atoms[i], "prob") ? json_to_number(atoms[i]["prob"], child(at, "prob"))
                                         : (atoms.size() == 1 ? 1.0 : 0.0);
        p.atoms.push_back(std::move(a));
    }
    at_path(ap, [&] {
        validate_perturbation(p);
        return 0;
    });
    return p;
}

Json perturbation_to_json(const PerturbationSpec& p) {
    Json out{{"dim", p.dim}, {"rank", p.rank}};
    out["base"] = p.base ? matrix_to_json(*p.base) : Json("identity");
    out["V"] = matrix_to_json(p.v);
    Json atoms = Json::array();
    for (const auto& a : p.atoms)
        atoms.push_back(Json{{"eta", number_to_json(a.eta)}, {"U", matrix_to_json(a.u)}, {"prob", a.prob}});
    out["atoms"] = std::move(atoms);
    out["seed"] = p.seed;
    return out;
}

Json estimate_to_json(const ExponentEstimate& e) {
    return Json{{"value", number_to_json(e.value)},
                {"std_error", number_to_json(e.std_error)},
                {"n_steps", e.n_steps},
                {"replicas", e.replicas},
                {"method", std::string(to_string(e.method))}};
}

Json structure_to_json(const StructuralReport& r) {
    Json w = Json::array();
    for (const auto& info : r.w_set) {
        w.push_back(Json{{"vertex", info.vertex + 1},
                         {"label", info.label + 1},
                         {"stabilization", info.stabilization ? Json(*info.stabilization) : Json(nullptr)},
                         {"disjoint_from_others", info.disjoint_from_others}});
    }
    return Json{{"label_count", r.label_count},
                {"vertex_count", r.vertex_count},
                {"contains_zero", r.contains_zero},
                {"acyclic_except_self_loops", r.acyclic_except_self_loops},
                {"at_most_one_self_loop_per_vertex", r.at_most_one_self_loop_per_vertex},
                {"loop_vertices", one_based(r.loop_vertices)},
                {"loop_labels", one_based(r.loop_labels)},
                {"k", r.label_count},
                {"k_star", r.k_star ? Json(*r.k_star) : Json(nullptr)},
                {"W", std::move(w)},
                {"W_labels", one_based(r.w_labels)},
                {"multi_loop_vertices", one_based(r.multi_loop_vertices)}};
}

Json graph_to_json(const ShapeGraph& g, const StructuralReport& r) {
    Json vertices = Json::array();
    Json edges = Json::array();
    for (std::size_t v = 0; v < g.vertex_count(); ++v) {
        vertices.push_back(Json{{"id", v + 1},
                                {"shape", g.vertices()[v].to_bitstring()},
                                {"zero", g.zero_vertex() == v}});
        for (std::size_t s = 0; s < g.label_count(); ++s)
            edges.push_back(Json{{"from", v + 1}, {"to", g.transition(v, s) + 1}, {"label", s + 1}});
    }
    return Json{{"dim", g.shape_set().dim()},
                {"shape_set", shape_set_to_json(g.shape_set())},
                {"vertices", std::move(vertices)},
                {"edges", std::move(edges)},
                {"structure", structure_to_json(r)}};
}

Json entropy_to_json(const EntropyRefinement& e) {
    return Json{{"log_k", number_to_json(e.log_k)},
                {"log_k_star", e.log_k_star ? number_to_json(*e.log_k_star) : Json(nullptr)},
                {"log_rho_M", number_to_json(e.log_rho_m)},
                {"log_max_outdegree", number_to_json(e.log_max_outdegree)},
                {"rho_converged", e.rho_converged}};
}

Json bound_report_to_json(const BoundReport& b) {
    Json comps = Json::object();
    for (const auto& [k, v] : b.components) comps[k] = number_to_json(v);
    Json assumptions = Json::array();
    for (const auto& a : b.assumptions) {
        assumptions.push_back(
            Json{{"name", a.name}, {"outcome", std::string(to_string(a.outcome))}, {"detail", a.detail}});
    }
    return Json{{"provenance", b.provenance},
                {"lower", optional_number(b.lower)},
                {"upper", optional_number(b.upper)},
                {"refined_upper_heuristic", optional_number(b.refined_upper)},
                {"components", std::move(comps)},
                {"assumptions", std::move(assumptions)}};
}

Json sandwich_to_json(const SandwichRecord& s) {
    return Json{{"mc_gamma1", estimate_to_json(s.mc_gamma1)},
                {"bounds", bound_report_to_json(s.bounds)},
                {"upper_slack", number_to_json(s.upper_slack)},
                {"lower_slack", optional_number(s.lower_slack)},
                {"tolerance", number_to_json(s.tolerance)},
                {"verdict", s.verdict ? "pass" : "fail"},
                {"structure", structure_to_json(s.structure)}};
}

Json duality_to_json(const DualityReport& d) {
    Json pairs = Json::array();
    for (const auto& p : d.gamma_pairs) {
        pairs.push_back(Json{{"r", p.r},
                             {"gamma_full", estimate_to_json(p.full)},
                             {"gamma_reduced", estimate_to_json(p.reduced)},
                             {"asserted", p.asserted},
                             {"agrees", p.agrees}});
    }
    return Json{{"sum_full", estimate_to_json(d.sum_full)},
                {"sum_reduced", estimate_to_json(d.sum_reduced)},
                {"e_log_eta", number_to_json(d.e_log_eta)},
                {"residual", number_to_json(d.residual)},
                {"residual_se", number_to_json(d.residual_se)},
                {"tolerance", number_to_json(d.tolerance)},
                {"within_tolerance", d.within_tolerance},
                {"gamma_pairs", std::move(pairs)}};
}

Json rank_one_to_json(const RankOneSpectrum& s) {
    Json ex = Json::array();
    for (double x : s.exponents) ex.push_back(number_to_json(x));
    return Json{{"exponents", std::move(ex)},
                {"e_log_eta", number_to_json(s.e_log_eta)},
                {"e_log_eta_vu", number_to_json(s.e_log_eta_vu)},
                {"warnings", s.warnings}};
}

} // namespace lyapshape
