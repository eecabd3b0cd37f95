#pragma once

// Rank-one and rank-m perturbation families A_n = eta_n A + U_n V^T:
// closed-form spectra, spectral-radius sandwiches, compound-matrix
// exponents of block embeddings and the rank-m duality identity.

#include "lyapshape/bounds.hpp"
#include "lyapshape/cocycle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lyapshape {

struct PerturbationAtom {
    double eta = 1.0;
    Matrix u;  ///< d x m
    double prob = 1.0;
};

/// Joint (eta, U) atoms share one probability vector. An absent base means A = I.
struct PerturbationSpec {
    std::size_t dim = 0;
    std::size_t rank = 1;
    std::optional<Matrix> base;
    Matrix v;  ///< d x m
    std::vector<PerturbationAtom> atoms;
    std::uint64_t seed = 0;
};

/// Shape and probability checks. Throws DimensionMismatch, InvalidProbabilities, NonFinite.
void validate_perturbation(const PerturbationSpec& spec);

Matrix base_matrix(const PerturbationSpec& spec);

/// eta_j A + U_j V^T per atom, sampled i.i.d. with the atom probabilities.
MatrixFamily perturbation_family(const PerturbationSpec& spec);

/// eta_j I_m + V^T A^{-1} U_j (m x m), coupled with perturbation_family.
MatrixFamily reduced_family(const PerturbationSpec& spec);

/// E log|eta_1|, exact over atoms; -inf if an atom has eta = 0.
double expected_log_abs_eta(const PerturbationSpec& spec);

inline constexpr double kCommutationTol = 1e-10;

struct RankOneSpectrum {
    std::vector<double> exponents;  ///< descending; -inf where an atom degenerates
    double e_log_eta = 0.0;
    double e_log_eta_vu = 0.0;      ///< E log|eta_1 + v^T u_1|
    std::vector<std::string> warnings;
};

/// Exact spectrum of eta_n I + u_n v^T. Requires rank 1 and an identity base.
/// The ordering hypothesis E log|eta| <= E log|eta + v^T u| only warns.
RankOneSpectrum rank_one_spectrum(const PerturbationSpec& spec);

/// Throws SingularBase, CommutationViolated (atom index and residual in the message).
BoundReport rank_one_scaled_bounds(const PerturbationSpec& spec);

/// Exponent r of the block matrix [[A_n, *], [0, eta_n I_m]] from the
/// descending exponents of (A_n). r = 1 gives max(eta_mean, gamma_1);
/// otherwise 2 <= r <= min(m, d) (RankOutOfRange).
double block_embedding_exponents(const std::vector<double>& gammas, double eta_mean, std::size_t m,
                                 std::size_t r);

struct GammaPair {
    std::size_t r = 0;  ///< 1-based
    ExponentEstimate full;
    ExponentEstimate reduced;
    bool asserted = false;  ///< gamma_r(A) clears E log|eta| by more than 3 std errors
    bool agrees = true;
};

struct DualityReport {
    ExponentEstimate sum_full;     ///< sum of the d exponents
    ExponentEstimate sum_reduced;  ///< sum of the m exponents
    double e_log_eta = 0.0;
    double residual = 0.0;         ///< sum_full - sum_reduced - (d - m) E log|eta|
    double residual_se = 0.0;
    double tolerance = 0.0;
    bool within_tolerance = false;
    std::vector<GammaPair> gamma_pairs;
};

/// Identity base only. Both spectra by QR on coupled streams; the residual
/// standard error comes from per-replica differences.
DualityReport rank_m_duality(const PerturbationSpec& spec, std::uint64_t n, std::uint64_t replicas,
                             double se_multiplier = 3.0, double abs_tol = 1e-9);

/// Interval [-log rho(A^{-1}) + c, log rho(A) + c] with c = max(E log|eta|, gamma_1 of the reduced family).
/// gamma_1 of the reduced family is exact for m = 1, Monte Carlo otherwise.
/// Throws SingularBase, RankDeficientV, CommutationViolated.
BoundReport rank_m_scaled_bounds(const PerturbationSpec& spec, std::uint64_t n, std::uint64_t replicas);

struct InvariantSubspaceCheck {
    double covector_residual = 0.0;  ///< max over samples of ||v^T A_n - (eta_n + v^T u_n) v^T||_inf
    double det_identity = 0.0;       ///< (d - 1) E log|eta| + E log|eta + v^T u|
    ExponentEstimate spectrum_sum;
    double det_residual = 0.0;
};

/// Rank 1, identity base.
InvariantSubspaceCheck invariant_subspace_identity_check(const PerturbationSpec& spec, std::uint64_t n_samples,
                                                         std::uint64_t n, std::uint64_t replicas);

} // namespace lyapshape
