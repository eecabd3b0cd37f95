#pragma once

// JSON documents for shape sets, families, perturbation specs and reports.
// Matrices are arrays of rows; a flat row-major array of d*d numbers is also
// accepted where the dimension is known. Infinite values are written as the
// strings "inf" / "-inf".

#include "lyapshape/bounds.hpp"
#include "lyapshape/cocycle.hpp"
#include "lyapshape/perturbation.hpp"
#include "lyapshape/shape_graph.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace lyapshape {

using Json = nlohmann::ordered_json;

/// Parses text; syntax errors become ParseError with "line L, column C".
Json parse_json_text(std::string_view text, std::string_view source = "config");

/// 1-based line of the value at `pointer` (e.g. "/family/probs") in `text`,
/// located by walking object keys; 0 when it cannot be found.
std::size_t locate_line(std::string_view text, std::string_view pointer);

Json number_to_json(double x);
double json_to_number(const Json& j, const std::string& path);

Json matrix_to_json(const Matrix& m);
/// rows x cols known (cols = 0 means square of `rows`); accepts nested rows or a flat array.
Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& path);

Json shape_set_to_json(const ShapeSet& s);
/// {"dim": d, "labels": [[bits...], ...]} with flat or nested bits.
ShapeSet shape_set_from_json(const Json& j, const std::string& path = "/shape_set");

/// {"dim", "kind": "finite_iid"|"schedule"|"composite", "atoms", "probs", "seed", "pattern"}.
/// A composite family lists "components": [[matrix per label], ...] and needs `set`.
MatrixFamily family_from_json(const Json& j, const std::optional<ShapeSet>& set, const std::string& path = "/family");
Json family_to_json(const MatrixFamily& f);

/// {"dim", "rank", "base": matrix | "identity", "V": matrix, "atoms": [{"eta", "U", "prob"}], "seed"}.
PerturbationSpec perturbation_from_json(const Json& j, const std::string& path = "/perturbation");
Json perturbation_to_json(const PerturbationSpec& p);

Json estimate_to_json(const ExponentEstimate& e);
Json structure_to_json(const StructuralReport& r);
Json graph_to_json(const ShapeGraph& g, const StructuralReport& r);
Json entropy_to_json(const EntropyRefinement& e);
Json bound_report_to_json(const BoundReport& b);
Json sandwich_to_json(const SandwichRecord& s);
Json duality_to_json(const DualityReport& d);
Json rank_one_to_json(const RankOneSpectrum& s);

} // namespace lyapshape
