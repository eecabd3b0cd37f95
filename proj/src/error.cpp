#include "lyapshape/error.hpp"

namespace lyapshape {

ErrorClass exit_class(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument:
    case Errc::DimensionMismatch:
    case Errc::NonFinite:
    case Errc::EmptyLabel:
    case Errc::OverlappingLabels:
    case Errc::UncoveredEntry:
    case Errc::InvalidProbabilities:
    case Errc::ParseError:
    case Errc::RankOutOfRange:
        return ErrorClass::Validation;
    case Errc::StructuralViolation:
    case Errc::MissingLoopExponent:
    case Errc::EmptyW:
    case Errc::DisjointnessViolation:
    case Errc::StabilizationFailed:
    case Errc::NonnegativityUnverified:
    case Errc::ZeroDiagonalEntry:
    case Errc::NotTriangular:
    case Errc::NotDiagonal:
    case Errc::CommutationViolated:
    case Errc::RankDeficientV:
    case Errc::SingularBase:
        return ErrorClass::Assumption;
    case Errc::SandwichViolated:
        return ErrorClass::Sandwich;
    case Errc::SingularCollapse:
    case Errc::RankCollapse:
    case Errc::SingularSample:
    case Errc::VertexBudgetExceeded:
    case Errc::BudgetExceeded:
    case Errc::NonConvergence:
        return ErrorClass::Numeric;
    }
    return ErrorClass::Numeric;
}

std::string_view to_string(Errc code) noexcept {
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::EmptyLabel: return "EmptyLabel";
    case Errc::OverlappingLabels: return "OverlappingLabels";
    case Errc::UncoveredEntry: return "UncoveredEntry";
    case Errc::InvalidProbabilities: return "InvalidProbabilities";
    case Errc::ParseError: return "ParseError";
    case Errc::RankOutOfRange: return "RankOutOfRange";
    case Errc::StructuralViolation: return "StructuralViolation";
    case Errc::MissingLoopExponent: return "MissingLoopExponent";
    case Errc::EmptyW: return "EmptyW";
    case Errc::DisjointnessViolation: return "DisjointnessViolation";
    case Errc::StabilizationFailed: return "StabilizationFailed";
    case Errc::NonnegativityUnverified: return "NonnegativityUnverified";
    case Errc::ZeroDiagonalEntry: return "ZeroDiagonalEntry";
    case Errc::NotTriangular: return "NotTriangular";
    case Errc::NotDiagonal: return "NotDiagonal";
    case Errc::CommutationViolated: return "CommutationViolated";
    case Errc::RankDeficientV: return "RankDeficientV";
    case Errc::SingularBase: return "SingularBase";
    case Errc::SandwichViolated: return "SandwichViolated";
    case Errc::SingularCollapse: return "SingularCollapse";
    case Errc::RankCollapse: return "RankCollapse";
    case Errc::SingularSample: return "SingularSample";
    case Errc::VertexBudgetExceeded: return "VertexBudgetExceeded";
    case Errc::BudgetExceeded: return "BudgetExceeded";
    case Errc::NonConvergence: return "NonConvergence";
    }
    return "Unknown";
}

} // namespace lyapshape
