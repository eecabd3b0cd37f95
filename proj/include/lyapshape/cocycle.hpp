#pragma once

// Stationary matrix sequences and estimators for their Lyapunov exponents.

#include "lyapshape/linalg.hpp"
#include "lyapshape/shape_graph.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace lyapshape {

enum class FamilyKind { FiniteSupportIID, DeterministicSchedule, Composite };

std::string_view to_string(FamilyKind kind) noexcept;

/// A seedable stationary matrix sequence.
///
/// FiniteSupportIID draws atom j with probability probs[j] at every step.
/// DeterministicSchedule walks `pattern` (atom indices) periodically.
/// Composite is a FiniteSupportIID whose atoms are given per shape-set label;
/// the sampled matrix is the sum of the components.
class MatrixFamily {
public:
    static MatrixFamily finite_iid(std::vector<Matrix> atoms, std::vector<double> probs, std::uint64_t seed);
    /// Empty `pattern` means atoms in listed order.
    static MatrixFamily schedule(std::vector<Matrix> atoms, std::vector<std::size_t> pattern = {});
    static MatrixFamily composite(ShapeSet set, std::vector<std::vector<Matrix>> components,
                                  std::vector<double> probs, std::uint64_t seed);

    FamilyKind kind() const noexcept { return kind_; }
    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<Matrix>& atoms() const noexcept { return atoms_; }
    const std::vector<double>& probs() const noexcept { return probs_; }
    const std::vector<std::size_t>& pattern() const noexcept { return pattern_; }
    const std::optional<ShapeSet>& shape_set() const noexcept { return set_; }
    /// Per-atom components (Composite only).
    const std::vector<std::vector<Matrix>>& components() const noexcept { return components_; }

    /// True for schedules and single-atom families: every replica sees the same sequence.
    bool deterministic() const noexcept;

    /// Index of the atom used at step t (0-based) of `replica`.
    std::size_t atom_index(std::uint64_t replica, std::uint64_t t) const;
    const Matrix& at(std::uint64_t replica, std::uint64_t t) const { return atoms_[atom_index(replica, t)]; }

    /// Same kind, probabilities, pattern and seed with each atom replaced by
    /// fn(atom). The index stream is unchanged, so the result is coupled
    /// step-by-step with *this. `fn` may change the dimension.
    MatrixFamily map_atoms(const std::function<Matrix(const Matrix&)>& fn) const;
    MatrixFamily with_seed(std::uint64_t seed) const;

private:
    MatrixFamily() = default;

    FamilyKind kind_ = FamilyKind::FiniteSupportIID;
    std::size_t dim_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<Matrix> atoms_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
    std::vector<std::size_t> pattern_;
    std::optional<ShapeSet> set_;
    std::vector<std::vector<Matrix>> components_;
};

/// Component family (A_{n,j}) obtained by decomposing every atom along `s`.
/// Throws UncoveredEntry when an atom is not covered by the shape set.
MatrixFamily component_family(const MatrixFamily& f, const ShapeSet& s, std::size_t j);

enum class EstimateMethod { NormRenorm, QrSpectrum, ExactDiagonal, ExactExpectation };

std::string_view to_string(EstimateMethod m) noexcept;

struct ExponentEstimate {
    double value = 0.0;      ///< nats per step
    double std_error = 0.0;  ///< replica standard deviation / sqrt(replicas)
    std::uint64_t n_steps = 0;
    std::uint64_t replicas = 0;
    EstimateMethod method = EstimateMethod::NormRenorm;
};

enum class NormKind { L1, Frobenius };

inline constexpr std::uint64_t kDefaultRenormEvery = 16;

std::vector<Matrix> sample_sequence(const MatrixFamily& f, std::uint64_t n, std::uint64_t replica);

/// (1/n) log ||A_n ... A_1|| averaged over replicas. The running product is
/// renormalised every `renorm_every` steps. Deterministic families use one
/// replica and report std_error 0; stochastic ones need replicas >= 2.
ExponentEstimate top_exponent(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                              std::uint64_t renorm_every = kDefaultRenormEvery,
                              NormKind norm = NormKind::L1);

struct TopExponentTrace {
    ExponentEstimate estimate;
    std::vector<std::uint64_t> checkpoints;
    /// per_replica[r][c] = (1/m) log ||X_m|| at checkpoints[c]
    std::vector<std::vector<double>> per_replica;
};

/// top_exponent plus running estimates at the requested checkpoints (steps in [1, n]).
TopExponentTrace top_exponent_trace(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                                    std::uint64_t renorm_every, std::vector<std::uint64_t> checkpoints,
                                    NormKind norm = NormKind::L1);

/// Per-replica QR exponents, each row sorted descending.
std::vector<std::vector<double>> spectrum_replicas(const MatrixFamily& f, std::uint64_t n,
                                                   std::uint64_t replicas);

/// Full Lyapunov spectrum by QR reorthogonalisation, descending.
/// Throws RankCollapse on a non-invertible atom or an exactly zero R diagonal.
std::vector<ExponentEstimate> spectrum(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas);

/// Mean and standard error across rows.
ExponentEstimate aggregate(const std::vector<double>& per_replica, std::uint64_t n, EstimateMethod method);

/// E log|A_1(p,p)| for every p: exact expectation over atoms for finite
/// support, the period average for schedules. -inf where an atom has a zero.
std::vector<double> diagonal_log_expectations(const MatrixFamily& f);

/// E log|det A_1| exactly (or per period for schedules).
double expected_log_abs_det(const MatrixFamily& f);

struct DiagonalExponents {
    std::vector<double> betas;
    double max = 0.0;
};

/// Exact exponents of a diagonal finite-support cocycle.
/// Throws NotDiagonal, ZeroDiagonalEntry.
DiagonalExponents diagonal_exact_exponents(const MatrixFamily& f);

struct AlphaPair {
    double alpha_minus = 0.0;
    double alpha_plus = 0.0;
    std::uint64_t window = 0;
};

/// Finite-n proxy for the liminf/limsup of (1/m) sum_{k<=m} log|A_k(i,i)|:
/// min and max of the running average over m in [ceil(n/2), n] along replica 0.
/// Throws NotTriangular, ZeroDiagonalEntry.
AlphaPair alpha_bounds(const MatrixFamily& f, std::size_t i, std::uint64_t n);

/// lambda_min = -lim (1/n) log ||A_1^{-1} ... A_n^{-1}||. Throws SingularSample.
ExponentEstimate smallest_exponent_via_inverse(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                                               std::uint64_t renorm_every = kDefaultRenormEvery);

struct RegularityCheckpoint {
    std::uint64_t step = 0;
    std::vector<double> rates;  ///< (1/m) log sigma_i(X_m), descending
    double temperedness = 0.0;  ///< (1/m) log ||A_m||_1
};

struct RegularityReport {
    std::vector<RegularityCheckpoint> checkpoints;
    std::vector<double> gaps;  ///< per i: max - min of the rate over checkpoints
    double spread = 0.0;       ///< max over gaps
    double convergence_residual = 0.0;  ///< max_i |rate_i(n) - rate_i(n/2)|
    double temperedness = 0.0;  ///< max over m in [ceil(n/2), n] of (1/m) log ||A_m||_1
};

/// Trend diagnostic along replica 0 at checkpoints n/8, n/4, n/2, n. It never
/// certifies regularity. Requires n >= 8; throws RankCollapse on a singular step.
RegularityReport regularity_diagnostic(const MatrixFamily& f, std::uint64_t n);

} // namespace lyapshape
