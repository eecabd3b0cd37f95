#pragma once

// Batch front-end: validate, graph, estimate, bounds, perturb.

#include "lyapshape/error.hpp"
#include "lyapshape/json_io.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lyapshape::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kAssumption = 3,
    kSandwich = 4,
    kNumeric = 5,
};

int exit_code_for(ErrorClass c) noexcept;

struct AnalysisConfig {
    std::optional<ShapeSet> shape_set;
    std::optional<MatrixFamily> family;
    std::optional<PerturbationSpec> perturbation;
    std::uint64_t n = 100'000;
    std::uint64_t replicas = 16;
    std::uint64_t renorm_every = kDefaultRenormEvery;
    std::optional<std::uint64_t> seed;
    double zero_tol = 0.0;
    double sandwich_tol = 1e-9;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Parses and validates a config document. Every completed stage is appended
/// to `checks` (if given) before the next one runs. Throws Error/ConfigError.
AnalysisConfig load_config(const Json& doc, std::vector<Check>* checks = nullptr);

/// Runs one command line (args[0] is the program name). Reports go to `out`
/// (or --out), diagnostics to `err`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lyapshape::cli
