#include "lyapshape/cocycle.hpp"

#include "lyapshape/error.hpp"
#include "lyapshape/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

namespace lyapshape {

std::string_view to_string(FamilyKind kind) noexcept {
    switch (kind) {
    case FamilyKind::FiniteSupportIID: return "finite_iid";
    case FamilyKind::DeterministicSchedule: return "schedule";
    case FamilyKind::Composite: return "composite";
    }
    return "unknown";
}

std::string_view to_string(EstimateMethod m) noexcept {
    switch (m) {
    case EstimateMethod::NormRenorm: return "norm-renorm";
    case EstimateMethod::QrSpectrum: return "qr-spectrum";
    case EstimateMethod::ExactDiagonal: return "exact-diagonal";
    case EstimateMethod::ExactExpectation: return "exact-expectation";
    }
    return "unknown";
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t check_atoms(const std::vector<Matrix>& atoms) {
    if (atoms.empty()) throw Error(Errc::InvalidArgument, "family needs at least one atom");
    const auto d = atoms.front().rows();
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        require_square_finite(atoms[j], "atom " + std::to_string(j + 1));
        if (atoms[j].rows() != d) {
            throw Error(Errc::DimensionMismatch, "atom " + std::to_string(j + 1) + " has dim " +
                                                     std::to_string(atoms[j].rows()) + ", expected " +
                                                     std::to_string(d));
        }
    }
    return static_cast<std::size_t>(d);
}

std::vector<double> check_probs(const std::vector<double>& probs, std::size_t n_atoms) {
    if (probs.size() != n_atoms) {
        throw Error(Errc::InvalidProbabilities, std::to_string(probs.size()) + " probabilities for " +
                                                    std::to_string(n_atoms) + " atoms");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (!(probs[j] > 0.0) || !std::isfinite(probs[j])) {
            throw Error(Errc::InvalidProbabilities, "probability " + std::to_string(j + 1) + " is not positive");
        }
        sum += probs[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw Error(Errc::InvalidProbabilities, "probabilities sum to " + std::to_string(sum) + ", not 1");
    }
    std::vector<double> cumulative(probs.size());
    std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
    return cumulative;
}

double matrix_norm(const Matrix& m, NormKind norm) {
    return norm == NormKind::L1 ? l1_operator_norm(m) : frobenius_norm(m);
}

std::uint64_t effective_replicas(const MatrixFamily& f, std::uint64_t replicas) {
    if (f.deterministic()) return 1;
    if (replicas < 2) {
        throw Error(Errc::InvalidArgument, "a stochastic family needs at least 2 replicas for a standard error");
    }
    return replicas;
}

// Runs fn(r) for r in [0, replicas) on a small thread pool. Results are
// placed by replica index; the first failing replica (lowest index) rethrows.
template <class Fn>
auto run_replicas(std::uint64_t replicas, Fn fn) -> std::vector<decltype(fn(std::uint64_t{}))> {
    using Result = decltype(fn(std::uint64_t{}));
    std::vector<Result> out(replicas);
    std::vector<std::exception_ptr> errors(replicas);
    const auto workers = static_cast<std::uint64_t>(
        std::min<std::uint64_t>(replicas, std::max(1u, std::thread::hardware_concurrency())));
    std::atomic<std::uint64_t> next{0};
    auto worker = [&] {
        for (std::uint64_t r = next++; r < replicas; r = next++) {
            try {
                out[r] = fn(r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

void require_steps(std::uint64_t n) {
    if (n < 1) throw Error(Errc::InvalidArgument, "number of steps must be >= 1");
}

void require_invertible_atoms(const MatrixFamily& f, Errc code) {
    Vector rdiag;
    for (std::size_t j = 0; j < f.atoms().size(); ++j) {
        Matrix q = f.atoms()[j];
        qr_in_place(q, rdiag);
        const double scale = rdiag.maxCoeff();
        if (!(rdiag.minCoeff() > 1e-14 * scale)) {
            throw Error(code, "atom " + std::to_string(j + 1) + " is singular");
        }
    }
}

} // namespace

MatrixFamily MatrixFamily::finite_iid(std::vector<Matrix> atoms, std::vector<double> probs, std::uint64_t seed) {
    MatrixFamily f;
    f.kind_ = FamilyKind::FiniteSupportIID;
    f.dim_ = check_atoms(atoms);
    f.cumulative_ = check_probs(probs, atoms.size());
    f.atoms_ = std::move(atoms);
    f.probs_ = std::move(probs);
    f.seed_ = seed;
    return f;
}

MatrixFamily MatrixFamily::schedule(std::vector<Matrix> atoms, std::vector<std::size_t> pattern) {
    MatrixFamily f;
    f.kind_ = FamilyKind::DeterministicSchedule;
    f.dim_ = check_atoms(atoms);
    if (pattern.empty()) {
        pattern.resize(atoms.size());
        std::iota(pattern.begin(), pattern.end(), std::size_t{0});
    }
    for (std::size_t idx : pattern)
        if (idx >= atoms.size()) {
            throw Error(Errc::InvalidArgument, "schedule pattern refers to atom " + std::to_string(idx + 1) +
                                                   " of " + std::to_string(atoms.size()));
        }
    f.atoms_ = std::move(atoms);
    f.pattern_ = std::move(pattern);
    return f;
}

MatrixFamily MatrixFamily::composite(ShapeSet set, std::vector<std::vector<Matrix>> components,
                                     std::vector<double> probs, std::uint64_t seed) {
    std::vector<Matrix> sums;
    sums.reserve(components.size());
    for (std::size_t a = 0; a < components.size(); ++a) {
        const auto& parts = components[a];
        if (parts.size() != set.size()) {
            throw Error(Errc::DimensionMismatch, "atom " + std::to_string(a + 1) + " has " +
                                                     std::to_string(parts.size()) + " components for " +
                                                     std::to_string(set.size()) + " labels");
        }
        const auto d = static_cast<Eigen::Index>(set.dim());
        Matrix sum = Matrix::Zero(d, d);
        for (std::size_t j = 0; j < parts.size(); ++j) {
            require_square_finite(parts[j], "component");
            if (parts[j].rows() != d) throw Error(Errc::DimensionMismatch, "component dim differs from shape set");
            if (!shape_of(parts[j]).subset_of(set.label(j))) {
                throw Error(Errc::UncoveredEntry, "component " + std::to_string(j + 1) + " of atom " +
                                                      std::to_string(a + 1) + " leaves its label's support");
            }
            sum += parts[j];
        }
        sums.push_back(std::move(sum));
    }
    MatrixFamily f = finite_iid(std::move(sums), std::move(probs), seed);
    f.kind_ = FamilyKind::Composite;
    f.set_ = std::move(set);
    f.components_ = std::move(components);
    return f;
}

bool MatrixFamily::deterministic() const noexcept {
    return kind_ == FamilyKind::DeterministicSchedule || atoms_.size() == 1;
}

std::size_t MatrixFamily::atom_index(std::uint64_t replica, std::uint64_t t) const {
    if (kind_ == FamilyKind::DeterministicSchedule) return pattern_[t % pattern_.size()];
    if (atoms_.size() == 1) return 0;
    const double u = CounterRng(seed_, replica).uniform(t);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
}

MatrixFamily MatrixFamily::map_atoms(const std::function<Matrix(const Matrix&)>& fn) const {
    MatrixFamily f = *this;
    if (f.kind_ == FamilyKind::Composite) f.kind_ = FamilyKind::FiniteSupportIID;
    f.set_.reset();
    f.components_.clear();
    for (auto& a : f.atoms_) a = fn(a);
    f.dim_ = check_atoms(f.atoms_);
    return f;
}

MatrixFamily MatrixFamily::with_seed(std::uint64_t seed) const {
    MatrixFamily f = *this;
    f.seed_ = seed;
    return f;
}

MatrixFamily component_family(const MatrixFamily& f, const ShapeSet& s, std::size_t j) {
    if (j >= s.size()) throw Error(Errc::InvalidArgument, "label index out of range");
    return f.map_atoms([&](const Matrix& a) { return decompose(a, s).components[j]; });
}

std::vector<Matrix> sample_sequence(const MatrixFamily& f, std::uint64_t n, std::uint64_t replica) {
    require_steps(n);
    std::vector<Matrix> out;
    out.reserve(n);
    for (std::uint64_t t = 0; t < n; ++t) out.push_back(f.at(replica, t));
    return out;
}

ExponentEstimate aggregate(const std::vector<double>& per_replica, std::uint64_t n, EstimateMethod method) {
    ExponentEstimate e;
    e.n_steps = n;
    e.replicas = per_replica.size();
    e.method = method;
    if (per_replica.empty()) return e;
    const double mean = std::accumulate(per_replica.begin(), per_replica.end(), 0.0) /
                        static_cast<double>(per_replica.size());
    e.value = mean;
    if (per_replica.size() >= 2 && std::isfinite(mean)) {
        double ss = 0.0;
        for (double x : per_replica) ss += (x - mean) * (x - mean);
        const auto r = static_cast<double>(per_replica.size());
        e.std_error = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
    }
    return e;
}

namespace {

// log ||A_n ... A_1|| along one replica, with optional running checkpoints.
double log_norm_path(const MatrixFamily& f, std::uint64_t replica, std::uint64_t n, std::uint64_t renorm_every,
                     NormKind norm, const std::vector<std::uint64_t>& checkpoints, std::vector<double>* trace) {
    const auto d = static_cast<Eigen::Index>(f.dim());
    Matrix m = Matrix::Identity(d, d);
    Matrix tmp(d, d);
    double total = 0.0;
    std::size_t cp = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
        tmp.noalias() = f.at(replica, t) * m;
        m.swap(tmp);
        const std::uint64_t step = t + 1;
        if (step % renorm_every == 0 || step == n) {
            const double nrm = matrix_norm(m, norm);
            if (nrm == 0.0) {
                throw Error(Errc::SingularCollapse, "running product is the zero matrix at step " +
                                                        std::to_string(step));
            }
            if (!std::isfinite(nrm)) {
                throw Error(Errc::NonConvergence, "running product overflowed at step " + std::to_string(step) +
                                                      "; lower renorm_every");
            }
            total += std::log(nrm);
            m /= nrm;
        }
        while (trace && cp < checkpoints.size() && checkpoints[cp] == step) {
            const double nrm = matrix_norm(m, norm);
            trace->push_back((total + (nrm > 0.0 ? std::log(nrm) : kNegInf)) / static_cast<double>(step));
            ++cp;
        }
    }
    return total;
}

} // namespace

TopExponentTrace top_exponent_trace(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                                    std::uint64_t renorm_every, std::vector<std::uint64_t> checkpoints,
                                    NormKind norm) {
    require_steps(n);
    if (renorm_every < 1 || renorm_every > n) {
        throw Error(Errc::InvalidArgument, "renorm_every must lie in [1, n]");
    }
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
    for (auto c : checkpoints)
        if (c < 1 || c > n) throw Error(Errc::InvalidArgument, "checkpoint outside [1, n]");

    const std::uint64_t reps = effective_replicas(f, replicas);
    struct Path {
        double value = 0.0;
        std::vector<double> trace;
    };
    auto paths = run_replicas(reps, [&](std::uint64_t r) {
        Path p;
        p.value = log_norm_path(f, r, n, renorm_every, norm, checkpoints, &p.trace) / static_cast<double>(n);
        return p;
    });

    TopExponentTrace out;
    std::vector<double> values;
    for (auto& p : paths) {
        values.push_back(p.value);
        out.per_replica.push_back(std::move(p.trace));
    }
    out.estimate = aggregate(values, n, EstimateMethod::NormRenorm);
    out.checkpoints = std::move(checkpoints);
    return out;
}

ExponentEstimate top_exponent(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                              std::uint64_t renorm_every, NormKind norm) {
    return top_exponent_trace(f, n, replicas, renorm_every, {}, norm).estimate;
}

std::vector<std::vector<double>> spectrum_replicas(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas) {
    require_steps(n);
    require_invertible_atoms(f, Errc::RankCollapse);
    const std::uint64_t reps = effective_replicas(f, replicas);
    const auto d = static_cast<Eigen::Index>(f.dim());
    return run_replicas(reps, [&](std::uint64_t r) {
        Matrix q = Matrix::Identity(d, d);
        Matrix z(d, d);
        Vector rdiag(d);
        Vector sums = Vector::Zero(d);
        for (std::uint64_t t = 0; t < n; ++t) {
            z.noalias() = f.at(r, t) * q;
            qr_in_place(z, rdiag);
            if ((rdiag.array() == 0.0).any()) {
                throw Error(Errc::RankCollapse, "zero R diagonal at step " + std::to_string(t + 1));
            }
            sums.array() += rdiag.array().log();
            q.swap(z);
        }
        std::vector<double> out(sums.data(), sums.data() + d);
        for (double& x : out) x /= static_cast<double>(n);
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    });
}

std::vector<ExponentEstimate> spectrum(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas) {
    const auto rows = spectrum_replicas(f, n, replicas);
    std::vector<ExponentEstimate> out;
    for (std::size_t i = 0; i < f.dim(); ++i) {
        std::vector<double> col;
        for (const auto& row : rows) col.push_back(row[i]);
        out.push_back(aggregate(col, n, EstimateMethod::QrSpectrum));
    }
    return out;
}

namespace {

// Weights of each atom in the stationary law: probabilities, or pattern
// frequencies for a schedule.
std::vector<double> stationary_weights(const MatrixFamily& f) {
    if (f.kind() != FamilyKind::DeterministicSchedule) return f.probs();
    std::vector<double> w(f.atoms().size(), 0.0);
    for (std::size_t idx : f.pattern()) w[idx] += 1.0 / static_cast<double>(f.pattern().size());
    return w;
}

} // namespace

std::vector<double> diagonal_log_expectations(const MatrixFamily& f) {
    const auto w = stationary_weights(f);
    std::vector<double> out(f.dim(), 0.0);
    for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        if (w[a] == 0.0) continue;
        for (std::size_t p = 0; p < f.dim(); ++p) {
            const double x = std::abs(f.atoms()[a](static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
            out[p] += x == 0.0 ? kNegInf : w[a] * std::log(x);
        }
    }
    return out;
}

double expected_log_abs_det(const MatrixFamily& f) {
    const auto w = stationary_weights(f);
    double out = 0.0;
    Vector rdiag;
    for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        if (w[a] == 0.0) continue;
        Matrix q = f.atoms()[a];
        qr_in_place(q, rdiag);
        out += w[a] * rdiag.array().log().sum();
    }
    return out;
}

DiagonalExponents diagonal_exact_exponents(const MatrixFamily& f) {
    for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        const Matrix& m = f.atoms()[a];
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                if (i != j && m(i, j) != 0.0) {
                    throw Error(Errc::NotDiagonal, "atom " + std::to_string(a + 1) + " is not diagonal");
                }
                if (i == j && m(i, j) == 0.0) {
                    throw Error(Errc::ZeroDiagonalEntry, "atom " + std::to_string(a + 1) + ", p = " +
                                                             std::to_string(i + 1));
                }
            }
    }
    DiagonalExponents out;
    out.betas = diagonal_log_expectations(f);
    out.max = *std::max_element(out.betas.begin(), out.betas.end());
    return out;
}

AlphaPair alpha_bounds(const MatrixFamily& f, std::size_t i, std::uint64_t n) {
    require_steps(n);
    if (i >= f.dim()) throw Error(Errc::InvalidArgument, "coordinate out of range");
    for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        const Matrix& m = f.atoms()[a];
        if (!m.triangularView<Eigen::StrictlyLower>().toDenseMatrix().isZero(0.0)) {
            throw Error(Errc::NotTriangular, "atom " + std::to_string(a + 1) + " is not upper triangular");
        }
        if (m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) == 0.0) {
            throw Error(Errc::ZeroDiagonalEntry, "atom " + std::to_string(a + 1) + ", p = " + std::to_string(i + 1));
        }
    }
    const std::uint64_t first = (n + 1) / 2;
    AlphaPair out;
    out.window = n - first + 1;
    out.alpha_minus = std::numeric_limits<double>::infinity();
    out.alpha_plus = -std::numeric_limits<double>::infinity();
    double s = 0.0;
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::uint64_t m = 1; m <= n; ++m) {
        s += std::log(std::abs(f.at(0, m - 1)(ii, ii)));
        if (m >= first) {
            const double avg = s / static_cast<double>(m);
            out.alpha_minus = std::min(out.alpha_minus, avg);
            out.alpha_plus = std::max(out.alpha_plus, avg);
        }
    }
    return out;
}

ExponentEstimate smallest_exponent_via_inverse(const MatrixFamily& f, std::uint64_t n, std::uint64_t replicas,
                                               std::uint64_t renorm_every) {
    require_steps(n);
    if (renorm_every < 1) throw Error(Errc::InvalidArgument, "renorm_every must be >= 1");
    std::vector<Matrix> inverses;
    for (std::size_t a = 0; a < f.atoms().size(); ++a) {
        Eigen::FullPivLU<Matrix> lu(f.atoms()[a]);
        if (!lu.isInvertible()) {
            throw Error(Errc::SingularSample, "atom " + std::to_string(a + 1) + " is not invertible");
        }
        inverses.push_back(lu.inverse());
    }
    const std::uint64_t reps = effective_replicas(f, replicas);
    const auto d = static_cast<Eigen::Index>(f.dim());
    auto values = run_replicas(reps, [&](std::uint64_t r) {
        Matrix m = Matrix::Identity(d, d);
        Matrix tmp(d, d);
        double total = 0.0;
        for (std::uint64_t t = 0; t < n; ++t) {
            // A_1^{-1} ... A_n^{-1}: new factors enter on the right
            tmp.noalias() = m * inverses[f.atom_index(r, t)];
            m.swap(tmp);
            if ((t + 1) % renorm_every == 0 || t + 1 == n) {
                const double nrm = l1_operator_norm(m);
                if (!(nrm > 0.0) || !std::isfinite(nrm)) {
                    throw Error(Errc::SingularSample, "inverse product degenerated at step " + std::to_string(t + 1));
                }
                total += std::log(nrm);
                m /= nrm;
            }
        }
        return -total / static_cast<double>(n);
    });
    return aggregate(values, n, EstimateMethod::NormRenorm);
}

RegularityReport regularity_diagnostic(const MatrixFamily& f, std::uint64_t n) {
    if (n < 8) throw Error(Errc::InvalidArgument, "regularity_diagnostic needs n >= 8");
    const std::vector<std::uint64_t> steps{n / 8, n / 4, n / 2, n};
    const auto d = static_cast<Eigen::Index>(f.dim());
    Matrix q = Matrix::Identity(d, d);
    Matrix z(d, d);
    Vector rdiag(d);
    Vector sums = Vector::Zero(d);

    RegularityReport rep;
    rep.temperedness = -std::numeric_limits<double>::infinity();
    const std::uint64_t tail_start = (n + 1) / 2;
    std::size_t next = 0;
    for (std::uint64_t t = 0; t < n; ++t) {
        const Matrix& a = f.at(0, t);
        const std::uint64_t m = t + 1;
        z.noalias() = a * q;
        qr_in_place(z, rdiag);
        if ((rdiag.array() == 0.0).any()) {
            throw Error(Errc::RankCollapse, "zero R diagonal at step " + std::to_string(m));
        }
        sums.array() += rdiag.array().log();
        q.swap(z);
        const double tempered = std::log(l1_operator_norm(a)) / static_cast<double>(m);
        if (m >= tail_start) rep.temperedness = std::max(rep.temperedness, tempered);
        while (next < steps.size() && steps[next] == m) {
            RegularityCheckpoint cp;
            cp.step = m;
            cp.rates.assign(sums.data(), sums.data() + d);
            for (double& x : cp.rates) x /= static_cast<double>(m);
            std::sort(cp.rates.begin(), cp.rates.end(), std::greater<>());
            cp.temperedness = tempered;
            rep.checkpoints.push_back(std::move(cp));
            ++next;
        }
    }
    rep.gaps.assign(f.dim(), 0.0);
    for (std::size_t i = 0; i < f.dim(); ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& cp : rep.checkpoints) {
            lo = std::min(lo, cp.rates[i]);
            hi = std::max(hi, cp.rates[i]);
        }
        rep.gaps[i] = hi - lo;
        rep.spread = std::max(rep.spread, rep.gaps[i]);
        const auto& last = rep.checkpoints.back().rates;
        const auto& half = rep.checkpoints[rep.checkpoints.size() - 2].rates;
        rep.convergence_residual = std::max(rep.convergence_residual, std::abs(last[i] - half[i]));
    }
    return rep;
}

} // namespace lyapshape
