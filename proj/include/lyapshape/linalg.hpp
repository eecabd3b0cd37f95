#pragma once

// Dense real matrix primitives used throughout the library.

#include <Eigen/Dense>

#include <cstddef>
#include <string_view>
#include <vector>

namespace lyapshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws DimensionMismatch unless `m` is square with dim >= 1, and NonFinite
/// if any entry is NaN or infinite.
void require_square_finite(const Matrix& m, std::string_view what = "matrix");

/// Maximum absolute column sum; the operator norm induced by the vector l1-norm.
double l1_operator_norm(const Matrix& m);
double frobenius_norm(const Matrix& m);
double frobenius_inner(const Matrix& a, const Matrix& b);

/// All r-element subsets of {0, ..., n-1} in lexicographic order.
std::vector<std::vector<std::size_t>> lexicographic_subsets(std::size_t n, std::size_t r);

/// The r-th compound (exterior power) matrix: entry (J, L) is the minor with
/// rows J and columns L, both indexed by `lexicographic_subsets(d, r)`.
Matrix compound_matrix(const Matrix& m, std::size_t r);

struct SpectralRadius {
    double value = 0.0;
    /// "schur" when the real Schur iteration converged, "gelfand" when the
    /// estimate ||m^(2^10)||^(1/2^10) was used instead.
    std::string_view method = "schur";
    bool converged = true;
};

/// Maximum eigenvalue modulus. Real Schur iteration capped at 1000*d sweeps;
/// on stagnation falls back to the Gelfand estimate and says so in the result.
SpectralRadius spectral_radius(const Matrix& m);

/// Singular values in descending order.
std::vector<double> singular_values(const Matrix& m);

struct QrFactors {
    Matrix q;
    Matrix r;
};

/// m = q * r with q orthogonal and r upper triangular with r(i,i) >= 0.
QrFactors qr_step(const Matrix& m);

/// In-place variant used by the hot loops: overwrites `m` with its Q factor and
/// writes diag(R) (nonnegative) to `rdiag`.
void qr_in_place(Matrix& m, Vector& rdiag);

} // namespace lyapshape
