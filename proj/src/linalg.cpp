#include "lyapshape/linalg.hpp"

#include "lyapshape/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace lyapshape {

void require_square_finite(const Matrix& m, std::string_view what) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
        throw Error(Errc::DimensionMismatch,
                    std::string(what) + " must be square with dim >= 1, got " +
                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) {
        throw Error(Errc::NonFinite, std::string(what) + " has a non-finite entry");
    }
}

double l1_operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(Errc::DimensionMismatch, "frobenius_inner operands differ in shape");
    }
    return a.cwiseProduct(b).sum();
}

std::vector<std::vector<std::size_t>> lexicographic_subsets(std::size_t n, std::size_t r) {
    std::vector<std::vector<std::size_t>> out;
    if (r > n) return out;
    std::vector<std::size_t> idx(r);
    for (std::size_t i = 0; i < r; ++i) idx[i] = i;
    while (true) {
        out.push_back(idx);
        // rightmost position that can still advance
        std::size_t pos = r;
        while (pos > 0 && idx[pos - 1] == n - r + pos - 1) --pos;
        if (pos == 0) break;
        ++idx[pos - 1];
        for (std::size_t j = pos; j < r; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

Matrix compound_matrix(const Matrix& m, std::size_t r) {
    require_square_finite(m, "compound_matrix input");
    const auto d = static_cast<std::size_t>(m.rows());
    if (r < 1 || r > d) {
        throw Error(Errc::RankOutOfRange,
                    "compound order " + std::to_string(r) + " outside [1, " + std::to_string(d) + "]");
    }
    const auto subsets = lexicographic_subsets(d, r);
    const auto n = static_cast<Eigen::Index>(subsets.size());
    Matrix out(n, n);
    Matrix sub(r, r);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            const auto& rows = subsets[static_cast<std::size_t>(a)];
            const auto& cols = subsets[static_cast<std::size_t>(b)];
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < r; ++j)
                    sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
            out(a, b) = r == 1 ? sub(0, 0) : sub.partialPivLu().determinant();
        }
    }
    return out;
}

namespace {

// log ||m^(2^k)||_1 / 2^k with renormalisation after every squaring.
double gelfand_log_estimate(const Matrix& m, int squarings) {
    Matrix p = m;
    double log_scale = 0.0;  // p_true = exp(log_scale) * p
    for (int i = 0; i < squarings; ++i) {
        const double nrm = l1_operator_norm(p);
        if (nrm == 0.0) return -INFINITY;
        p /= nrm;
        log_scale += std::log(nrm);
        p = (p * p).eval();
        log_scale *= 2.0;
    }
    const double nrm = l1_operator_norm(p);
    if (nrm == 0.0) return -INFINITY;
    return (log_scale + std::log(nrm)) / std::ldexp(1.0, squarings);
}

} // namespace

SpectralRadius spectral_radius(const Matrix& m) {
    require_square_finite(m, "spectral_radius input");
    const auto d = m.rows();
    if (d == 1) return {std::abs(m(0, 0)), "schur", true};

    Eigen::EigenSolver<Matrix> solver;
    solver.setMaxIterations(static_cast<Eigen::Index>(1000 * d));
    solver.compute(m, /*computeEigenvectors=*/false);
    if (solver.info() == Eigen::Success) {
        return {solver.eigenvalues().cwiseAbs().maxCoeff(), "schur", true};
    }
    const double lg = gelfand_log_estimate(m, 10);
    return {std::isinf(lg) ? 0.0 : std::exp(lg), "gelfand", false};
}

std::vector<double> singular_values(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    std::vector<double> out(s.data(), s.data() + s.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

void qr_in_place(Matrix& a, Vector& rdiag) {
    const auto n = a.rows();
    rdiag.resize(n);
    // Householder reflectors stored column by column below the diagonal. The
    // workspace is reused because the estimators call this once per step.
    thread_local Matrix v;
    v.setZero(n, n);
    auto reflect = [&](Eigen::Index k) {
        for (Eigen::Index j = k; j < n; ++j) {
            double dot = 0.0;
            for (Eigen::Index i = k; i < n; ++i) dot += v(i, k) * a(i, j);
            dot *= 2.0;
            for (Eigen::Index i = k; i < n; ++i) a(i, j) -= dot * v(i, k);
        }
    };
    for (Eigen::Index k = 0; k < n; ++k) {
        auto x = a.col(k).tail(n - k);
        const double alpha = x.norm();
        if (alpha == 0.0) {
            rdiag(k) = 0.0;
            continue;
        }
        const double sign = x(0) >= 0.0 ? 1.0 : -1.0;
        auto vk = v.col(k).tail(n - k);
        vk = x;
        vk(0) += sign * alpha;
        vk /= vk.norm();
        reflect(k);
        rdiag(k) = a(k, k);
    }
    // Accumulate Q = H_0 H_1 ... H_{n-1} applied to the identity.
    a.setIdentity();
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        if (v.col(k).tail(n - k).squaredNorm() == 0.0) continue;
        reflect(k);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (rdiag(k) < 0.0) {
            rdiag(k) = -rdiag(k);
            a.col(k) = -a.col(k);
        }
    }
}

QrFactors qr_step(const Matrix& m) {
    require_square_finite(m, "qr_step input");
    Matrix q = m;
    Vector rdiag;
    qr_in_place(q, rdiag);
    // R = Q^T m is upper triangular up to rounding; zero the strict lower part
    // and pin the diagonal to the reflector values.
    Matrix r = (q.transpose() * m).triangularView<Eigen::Upper>();
    r.diagonal() = rdiag;
    return {std::move(q), std::move(r)};
}

} // namespace lyapshape
