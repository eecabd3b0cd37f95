#include "lyapshape/perturbation.hpp"

#include "lyapshape/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lyapshape {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log_abs(double x) { return x == 0.0 ? kNegInf : std::log(std::abs(x)); }

// c * x with 0 * (-inf) = 0
double scaled(double c, double x) { return c == 0.0 ? 0.0 : c * x; }

bool is_identity_base(const PerturbationSpec& spec) {
    return !spec.base || spec.base->isIdentity(0.0);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

struct BaseInfo {
    Matrix a;
    Matrix a_inv;
};

BaseInfo invert_base(const PerturbationSpec& spec) {
    BaseInfo b{base_matrix(spec), {}};
    Eigen::FullPivLU<Matrix> lu(b.a);
    if (!lu.isInvertible()) throw Error(Errc::SingularBase, "base matrix A is singular");
    b.a_inv = lu.inverse();
    return b;
}

void check_commutation(const PerturbationSpec& spec, const Matrix& a) {
    for (std::size_t j = 0; j < spec.atoms.size(); ++j) {
        const Matrix uvt = spec.atoms[j].u * spec.v.transpose();
        const double scale = a.norm() * uvt.norm();
        if (scale == 0.0) continue;
        const double residual = (a * uvt - uvt * a).norm() / scale;
        if (residual > kCommutationTol) {
            throw Error(Errc::CommutationViolated,
                        "atom " + std::to_string(j + 1) + ": relative residual " + fmt(residual));
        }
    }
}

void require_rank_one_identity(const PerturbationSpec& spec, const char* op) {
    if (spec.rank != 1 || !is_identity_base(spec)) {
        throw Error(Errc::InvalidArgument, std::string(op) + " needs rank 1 and an identity base");
    }
}

} // namespace

void validate_perturbation(const PerturbationSpec& spec) {
    const auto d = static_cast<Eigen::Index>(spec.dim);
    const auto m = static_cast<Eigen::Index>(spec.rank);
    if (spec.dim < 1 || spec.rank < 1) throw Error(Errc::InvalidArgument, "dim and rank must be >= 1");
    if (spec.rank > spec.dim) throw Error(Errc::RankOutOfRange, "rank exceeds dim");
    if (spec.v.rows() != d || spec.v.cols() != m) {
        throw Error(Errc::DimensionMismatch, "V must be " + std::to_string(d) + " x " + std::to_string(m));
    }
    if (!spec.v.allFinite()) throw Error(Errc::NonFinite, "V has a non-finite entry");
    if (spec.base) {
        require_square_finite(*spec.base, "base");
        if (spec.base->rows() != d) throw Error(Errc::DimensionMismatch, "base dim differs from dim");
    }
    if (spec.atoms.empty()) throw Error(Errc::InvalidArgument, "perturbation needs at least one atom");
    double sum = 0.0;
    for (std::size_t j = 0; j < spec.atoms.size(); ++j) {
        const auto& a = spec.atoms[j];
        const std::string where = "atom " + std::to_string(j + 1);
        if (a.u.rows() != d || a.u.cols() != m) throw Error(Errc::DimensionMismatch, where + ": U has wrong shape");
        if (!a.u.allFinite() || !std::isfinite(a.eta)) throw Error(Errc::NonFinite, where + " is not finite");
        if (!(a.prob > 0.0)) throw Error(Errc::InvalidProbabilities, where + ": probability is not positive");
        sum += a.prob;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(Errc::InvalidProbabilities, "probabilities sum to " + std::to_string(sum) + ", not 1");
    }
}

Matrix base_matrix(const PerturbationSpec& spec) {
    const auto d = static_cast<Eigen::Index>(spec.dim);
    return spec.base ? *spec.base : Matrix::Identity(d, d);
}

MatrixFamily perturbation_family(const PerturbationSpec& spec) {
    validate_perturbation(spec);
    const Matrix a = base_matrix(spec);
    std::vector<Matrix> atoms;
    std::vector<double> probs;
    for (const auto& at : spec.atoms) {
        atoms.push_back(at.eta * a + at.u * spec.v.transpose());
        probs.push_back(at.prob);
    }
    return MatrixFamily::finite_iid(std::move(atoms), std::move(probs), spec.seed);
}

MatrixFamily reduced_family(const PerturbationSpec& spec) {
    validate_perturbation(spec);
    const BaseInfo b = invert_base(spec);
    const auto m = static_cast<Eigen::Index>(spec.rank);
    std::vector<Matrix> atoms;
    std::vector<double> probs;
    for (const auto& at : spec.atoms) {
        atoms.push_back(at.eta * Matrix::Identity(m, m) + spec.v.transpose() * b.a_inv * at.u);
        probs.push_back(at.prob);
    }
    return MatrixFamily::finite_iid(std::move(atoms), std::move(probs), spec.seed);
}

double expected_log_abs_eta(const PerturbationSpec& spec) {
    double out = 0.0;
    for (const auto& a : spec.atoms) out += scaled(a.prob, safe_log_abs(a.eta));
    return out;
}

RankOneSpectrum rank_one_spectrum(const PerturbationSpec& spec) {
    validate_perturbation(spec);
    require_rank_one_identity(spec, "rank_one_spectrum");
    RankOneSpectrum out;
    out.e_log_eta = expected_log_abs_eta(spec);
    out.e_log_eta_vu = 0.0;
    for (std::size_t j = 0; j < spec.atoms.size(); ++j) {
        const auto& a = spec.atoms[j];
        const double top = a.eta + (spec.v.transpose() * a.u)(0, 0);
        if (top == 0.0) out.warnings.push_back("atom " + std::to_string(j + 1) + ": eta + v^T u = 0, exponent is -inf");
        if (a.eta == 0.0) out.warnings.push_back("atom " + std::to_string(j + 1) + ": eta = 0, exponent is -inf");
        out.e_log_eta_vu += scaled(a.prob, safe_log_abs(top));
    }
    if (out.e_log_eta > out.e_log_eta_vu) {
        out.warnings.push_back("ordering hypothesis fails: E log|eta| = " + fmt(out.e_log_eta) +
                               " > E log|eta + v^T u| = " + fmt(out.e_log_eta_vu));
    }
    out.exponents.push_back(out.e_log_eta_vu);
    for (std::size_t i = 1; i < spec.dim; ++i) out.exponents.push_back(out.e_log_eta);
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    return out;
}

BoundReport rank_one_scaled_bounds(const PerturbationSpec& spec) {
    validate_perturbation(spec);
    if (spec.rank != 1) throw Error(Errc::InvalidArgument, "rank_one_scaled_bounds needs rank 1");
    const BaseInfo b = invert_base(spec);
    check_commutation(spec, b.a);

    double center = 0.0;
    for (const auto& a : spec.atoms) {
        center += scaled(a.prob, safe_log_abs(a.eta + (spec.v.transpose() * b.a_inv * a.u)(0, 0)));
    }
    const double e_eta = expected_log_abs_eta(spec);
    const auto rho = spectral_radius(b.a);
    const auto rho_inv = spectral_radius(b.a_inv);

    BoundReport rep;
    rep.provenance = "rank-one scaled spectral-radius sandwich";
    rep.add_assumption("base_invertible", Outcome::Pass);
    rep.add_assumption("commutation", Outcome::Pass);
    rep.add_assumption("ordering", e_eta <= center ? Outcome::Pass : Outcome::Fail,
                       "E log|eta| <= E log|eta + v^T A^-1 u|");
    rep.add_component("center", center);
    rep.add_component("e_log_eta", e_eta);
    rep.add_component("log_rho_A", std::log(rho.value));
    rep.add_component("log_rho_A_inv", std::log(rho_inv.value));
    rep.lower = center - std::log(rho_inv.value);
    rep.upper = center + std::log(rho.value);
    return rep;
}

double block_embedding_exponents(const std::vector<double>& gammas, double eta_mean, std::size_t m,
                                 std::size_t r) {
    if (gammas.empty()) throw Error(Errc::InvalidArgument, "no exponents given");
    if (!std::is_sorted(gammas.begin(), gammas.end(), std::greater<>())) {
        throw Error(Errc::InvalidArgument, "exponents must be descending");
    }
    if (r == 1) return std::max(eta_mean, gammas.front());
    const std::size_t d = gammas.size();
    if (r < 2 || r > std::min(m, d)) {
        throw Error(Errc::RankOutOfRange, "r = " + std::to_string(r) + " outside [2, " +
                                              std::to_string(std::min(m, d)) + "]");
    }
    // best(q) = max_{0 <= l <= q} (gamma_1 + ... + gamma_l + (q - l) eta_mean)
    auto best = [&](std::size_t q) {
        double out = kNegInf;
        double prefix = 0.0;
        for (std::size_t l = 0; l <= q; ++l) {
            if (l > 0) prefix += gammas[l - 1];
            out = std::max(out, prefix + scaled(static_cast<double>(q - l), eta_mean));
        }
        return out;
    };
    const double hi = best(r);
    const double lo = best(r - 1);
    if (hi == kNegInf && lo == kNegInf) return kNegInf;
    return hi - lo;
}

DualityReport rank_m_duality(const PerturbationSpec& spec, std::uint64_t n, std::uint64_t replicas,
                             double se_multiplier, double abs_tol) {
    validate_perturbation(spec);
    if (!is_identity_base(spec)) throw Error(Errc::InvalidArgument, "rank_m_duality needs an identity base");
    const MatrixFamily full = perturbation_family(spec);
    const MatrixFamily red = reduced_family(spec);
    const auto rows_full = spectrum_replicas(full, n, replicas);
    const auto rows_red = spectrum_replicas(red, n, replicas);

    DualityReport rep;
    rep.e_log_eta = expected_log_abs_eta(spec);
    const double shift = scaled(static_cast<double>(spec.dim - spec.rank), rep.e_log_eta);
    std::vector<double> sums_full, sums_red, diffs;
    for (std::size_t r = 0; r < rows_full.size(); ++r) {
        double a = 0.0, b = 0.0;
        for (double x : rows_full[r]) a += x;
        for (double x : rows_red[r]) b += x;
        sums_full.push_back(a);
        sums_red.push_back(b);
        diffs.push_back(a - b - shift);
    }
    rep.sum_full = aggregate(sums_full, n, EstimateMethod::QrSpectrum);
    rep.sum_reduced = aggregate(sums_red, n, EstimateMethod::QrSpectrum);
    const ExponentEstimate d = aggregate(diffs, n, EstimateMethod::QrSpectrum);
    rep.residual = d.value;
    rep.residual_se = d.std_error;
    rep.tolerance = se_multiplier * rep.residual_se + abs_tol;
    rep.within_tolerance = std::abs(rep.residual) <= rep.tolerance;

    for (std::size_t r = 0; r < spec.rank; ++r) {
        std::vector<double> a, b;
        for (const auto& row : rows_full) a.push_back(row[r]);
        for (const auto& row : rows_red) b.push_back(row[r]);
        GammaPair gp;
        gp.r = r + 1;
        gp.full = aggregate(a, n, EstimateMethod::QrSpectrum);
        gp.reduced = aggregate(b, n, EstimateMethod::QrSpectrum);
        gp.asserted = gp.full.value - rep.e_log_eta > se_multiplier * gp.full.std_error;
        if (gp.asserted) {
            const double tol = se_multiplier * std::hypot(gp.full.std_error, gp.reduced.std_error) + abs_tol;
            gp.agrees = std::abs(gp.full.value - gp.reduced.value) <= tol;
        }
        rep.gamma_pairs.push_back(gp);
    }
    return rep;
}

BoundReport rank_m_scaled_bounds(const PerturbationSpec& spec, std::uint64_t n, std::uint64_t replicas) {
    validate_perturbation(spec);
    const BaseInfo b = invert_base(spec);
    if (Eigen::FullPivLU<Matrix>(spec.v).rank() != static_cast<Eigen::Index>(spec.rank)) {
        throw Error(Errc::RankDeficientV, "V does not have full column rank");
    }
    check_commutation(spec, b.a);

    const double e_eta = expected_log_abs_eta(spec);
    ExponentEstimate reduced;
    if (spec.rank == 1) {
        reduced.method = EstimateMethod::ExactExpectation;
        for (const auto& a : spec.atoms) {
            reduced.value += scaled(a.prob, safe_log_abs(a.eta + (spec.v.transpose() * b.a_inv * a.u)(0, 0)));
        }
    } else {
        reduced = top_exponent(reduced_family(spec), n, replicas, std::min<std::uint64_t>(kDefaultRenormEvery, n));
    }
    const double c = std::max(e_eta, reduced.value);
    const auto rho = spectral_radius(b.a);
    const auto rho_inv = spectral_radius(b.a_inv);

    BoundReport rep;
    rep.provenance = "rank-m scaled spectral-radius sandwich";
    rep.add_assumption("base_invertible", Outcome::Pass);
    rep.add_assumption("v_full_column_rank", Outcome::Pass);
    rep.add_assumption("commutation", Outcome::Pass);
    rep.add_component("e_log_eta", e_eta);
    rep.add_component("gamma1_reduced", reduced.value);
    rep.add_component("gamma1_reduced_se", reduced.std_error);
    rep.add_component("center", c);
    rep.add_component("log_rho_A", std::log(rho.value));
    rep.add_component("log_rho_A_inv", std::log(rho_inv.value));
    rep.lower = c - std::log(rho_inv.value);
    rep.upper = c + std::log(rho.value);
    return rep;
}

InvariantSubspaceCheck invariant_subspace_identity_check(const PerturbationSpec& spec, std::uint64_t n_samples,
                                                         std::uint64_t n, std::uint64_t replicas) {
    validate_perturbation(spec);
    require_rank_one_identity(spec, "invariant_subspace_identity_check");
    InvariantSubspaceCheck out;
    const MatrixFamily f = perturbation_family(spec);
    const Matrix vt = spec.v.transpose();
    for (std::uint64_t t = 0; t < n_samples; ++t) {
        const std::size_t j = f.atom_index(0, t);
        const auto& a = spec.atoms[j];
        const double lambda = a.eta + (vt * a.u)(0, 0);
        const Matrix res = vt * f.atoms()[j] - lambda * vt;
        out.covector_residual = std::max(out.covector_residual, res.cwiseAbs().maxCoeff());
    }
    const auto spec1 = rank_one_spectrum(spec);
    out.det_identity = scaled(static_cast<double>(spec.dim - 1), spec1.e_log_eta) + spec1.e_log_eta_vu;
    std::vector<double> sums;
    for (const auto& row : spectrum_replicas(f, n, replicas)) {
        double s = 0.0;
        for (double x : row) s += x;
        sums.push_back(s);
    }
    out.spectrum_sum = aggregate(sums, n, EstimateMethod::QrSpectrum);
    out.det_residual = out.spectrum_sum.value - out.det_identity;
    return out;
}

} // namespace lyapshape
