#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lyapshape {

/// Every failure the library reports. Grouped by the CLI exit-code class
/// they map to (see `exit_class`).
enum class Errc {
    // validation (exit 2)
    InvalidArgument,
    DimensionMismatch,
    NonFinite,
    EmptyLabel,
    OverlappingLabels,
    UncoveredEntry,
    InvalidProbabilities,
    ParseError,
    RankOutOfRange,
    // assumption / structural (exit 3)
    StructuralViolation,
    MissingLoopExponent,
    EmptyW,
    DisjointnessViolation,
    StabilizationFailed,
    NonnegativityUnverified,
    ZeroDiagonalEntry,
    NotTriangular,
    NotDiagonal,
    CommutationViolated,
    RankDeficientV,
    SingularBase,
    // sandwich (exit 4)
    SandwichViolated,
    // numeric (exit 5)
    SingularCollapse,
    RankCollapse,
    SingularSample,
    VertexBudgetExceeded,
    BudgetExceeded,
    NonConvergence,
};

enum class ErrorClass { Validation, Assumption, Sandwich, Numeric };

ErrorClass exit_class(Errc code) noexcept;
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

    Errc code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

/// An error tied to a location in a JSON document (a JSON pointer such as
/// "/family/probs"), so front-ends can report the source line.
class ConfigError : public Error {
public:
    ConfigError(Errc code, const std::string& what, std::string pointer)
        : Error(code, what + " (at " + (pointer.empty() ? "/" : pointer) + ")"), pointer_(std::move(pointer)) {}

    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

} // namespace lyapshape
