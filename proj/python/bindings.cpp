#include "../tools/cli.hpp"
#include "lyapshape/bounds.hpp"
#include "lyapshape/cocycle.hpp"
#include "lyapshape/error.hpp"
#include "lyapshape/json_io.hpp"
#include "lyapshape/linalg.hpp"
#include "lyapshape/perturbation.hpp"
#include "lyapshape/shape_graph.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace lyapshape;

namespace {

// Reports cross the boundary as JSON text; the Python package decodes them.
std::string dump(const Json& j) { return j.dump(); }

ShapeMask mask_from_array(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw Error(Errc::DimensionMismatch, "shape label must be square");
    ShapeMask out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != 0.0) out.set(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return out;
}

ShapeSet make_shape_set(const std::vector<Eigen::MatrixXd>& labels) {
    std::vector<ShapeMask> masks;
    for (const auto& l : labels) masks.push_back(mask_from_array(l));
    return validate_shape_set(std::move(masks));
}

McParams mc_params(std::uint64_t n, std::uint64_t replicas, std::uint64_t renorm_every, double zero_tol) {
    McParams p;
    p.n = n;
    p.replicas = replicas;
    p.renorm_every = renorm_every;
    p.zero_tol = zero_tol;
    return p;
}

} // namespace

PYBIND11_MODULE(_lyapshape, m) {
    m.doc() = "Lyapunov exponent bounds from shape graphs";

    static py::exception<Error> error(m, "LyapshapeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = error;
            py::object inst = exc(e.what());
            inst.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error.ptr(), inst.ptr());
        }
    });

    py::class_<ShapeSet>(m, "ShapeSet")
        .def(py::init(&make_shape_set), py::arg("labels"))
        .def_property_readonly("dim", &ShapeSet::dim)
        .def("__len__", &ShapeSet::size)
        .def_property_readonly("labels", [](const ShapeSet& s) {
            std::vector<Eigen::MatrixXd> out;
            for (const auto& l : s.labels()) out.push_back(to_matrix(l));
            return out;
        })
        .def("to_json", [](const ShapeSet& s) { return dump(shape_set_to_json(s)); });

    m.def("shape_set_from_json", [](const std::string& text) { return shape_set_from_json(parse_json_text(text)); });

    py::class_<ShapeGraph>(m, "ShapeGraph")
        .def_property_readonly("vertex_count", &ShapeGraph::vertex_count)
        .def_property_readonly("contains_zero", &ShapeGraph::contains_zero)
        .def_property_readonly("vertices", [](const ShapeGraph& g) {
            std::vector<Eigen::MatrixXd> out;
            for (const auto& v : g.vertices()) out.push_back(to_matrix(v));
            return out;
        })
        .def("transition", &ShapeGraph::transition, py::arg("vertex"), py::arg("label"))
        .def("report_json", [](const ShapeGraph& g) { return dump(graph_to_json(g, analyze_structure(g))); })
        .def("entropy_json", [](const ShapeGraph& g) { return dump(entropy_to_json(entropy_refinement(g))); });

    m.def("build_shape_graph", &build_shape_graph, py::arg("shape_set"), py::arg("max_vertices") = kDefaultVertexBudget);
    m.def(
        "enumerate_nonzero_monomials",
        [](const ShapeGraph& g, std::size_t n, std::uint64_t budget) { return enumerate_nonzero_monomials(g, n, budget); },
        py::arg("graph"), py::arg("n"), py::arg("budget") = kDefaultMonomialBudget);

    py::class_<MatrixFamily>(m, "MatrixFamily")
        .def_static("finite_iid", &MatrixFamily::finite_iid, py::arg("atoms"), py::arg("probs"), py::arg("seed"))
        .def_static("schedule", &MatrixFamily::schedule, py::arg("atoms"), py::arg("pattern") = std::vector<std::size_t>{})
        .def_static(
            "from_json",
            [](const std::string& text, const std::optional<ShapeSet>& set) {
                return family_from_json(parse_json_text(text), set);
            },
            py::arg("text"), py::arg("shape_set") = std::nullopt)
        .def_property_readonly("dim", &MatrixFamily::dim)
        .def_property_readonly("seed", &MatrixFamily::seed)
        .def_property_readonly("kind", [](const MatrixFamily& f) { return std::string(to_string(f.kind())); })
        .def_property_readonly("atoms", &MatrixFamily::atoms)
        .def("atom_index", &MatrixFamily::atom_index, py::arg("replica"), py::arg("t"))
        .def("with_seed", &MatrixFamily::with_seed, py::arg("seed"))
        .def("to_json", [](const MatrixFamily& f) { return dump(family_to_json(f)); });

    m.def(
        "top_exponent",
        [](const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas, std::uint64_t renorm_every) {
            return dump(estimate_to_json(top_exponent(f, n, replicas, renorm_every)));
        },
        py::arg("family"), py::arg("n"), py::arg("replicas"), py::arg("renorm_every") = kDefaultRenormEvery);
    m.def(
        "spectrum",
        [](const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas) {
            Json out = Json::array();
            for (const auto& e : spectrum(f, n, replicas)) out.push_back(estimate_to_json(e));
            return dump(out);
        },
        py::arg("family"), py::arg("n"), py::arg("replicas"));
    m.def(
        "bound_sandwich_check",
        [](const MatrixFamily& f, const ShapeSet& s, std::uint64_t n, std::uint64_t replicas,
           std::uint64_t renorm_every, double zero_tol) {
            return dump(sandwich_to_json(
                bound_sandwich_check(f, s, mc_params(n, replicas, renorm_every, zero_tol), {}, false)));
        },
        py::arg("family"), py::arg("shape_set"), py::arg("n"), py::arg("replicas"),
        py::arg("renorm_every") = kDefaultRenormEvery, py::arg("zero_tol") = 0.0);

    m.def("compound_matrix", &compound_matrix, py::arg("m"), py::arg("r"));
    m.def("block_embedding_exponents", &block_embedding_exponents, py::arg("gammas"), py::arg("eta_mean"),
          py::arg("m"), py::arg("r"));
    m.def("rank_one_spectrum", [](const std::string& spec) {
        return dump(rank_one_to_json(rank_one_spectrum(perturbation_from_json(parse_json_text(spec)))));
    });
    m.def(
        "rank_m_duality",
        [](const std::string& spec, std::uint64_t n, std::uint64_t replicas) {
            return dump(duality_to_json(rank_m_duality(perturbation_from_json(parse_json_text(spec)), n, replicas)));
        },
        py::arg("spec"), py::arg("n"), py::arg("replicas"));
    m.def(
        "scaled_bounds",
        [](const std::string& spec, std::uint64_t n, std::uint64_t replicas) {
            const auto p = perturbation_from_json(parse_json_text(spec));
            return dump(bound_report_to_json(p.rank == 1 ? rank_one_scaled_bounds(p) : rank_m_scaled_bounds(p, n, replicas)));
        },
        py::arg("spec"), py::arg("n"), py::arg("replicas"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "lyapshape");
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
