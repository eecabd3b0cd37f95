#include "lyapshape/shape_mask.hpp"

#include "lyapshape/error.hpp"

#include <algorithm>
#include <cmath>

namespace lyapshape {

namespace {

void require_same_dim(const ShapeMask& a, const ShapeMask& b, std::string_view op) {
    if (a.dim() != b.dim()) {
        throw Error(Errc::DimensionMismatch, std::string(op) + ": masks of dim " +
                                                 std::to_string(a.dim()) + " and " +
                                                 std::to_string(b.dim()));
    }
}

} // namespace

ShapeMask ShapeMask::identity(std::size_t dim) {
    ShapeMask m(dim);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i);
    return m;
}

ShapeMask ShapeMask::from_bits(std::size_t dim, const std::vector<int>& bits) {
    if (bits.size() != dim * dim) {
        throw Error(Errc::InvalidArgument, "mask of dim " + std::to_string(dim) + " needs " +
                                               std::to_string(dim * dim) + " bits, got " +
                                               std::to_string(bits.size()));
    }
    ShapeMask m(dim);
    for (std::size_t k = 0; k < bits.size(); ++k) {
        if (bits[k] != 0 && bits[k] != 1) {
            throw Error(Errc::InvalidArgument, "mask entries must be 0 or 1");
        }
        m.bits_[k] = static_cast<std::uint8_t>(bits[k]);
    }
    return m;
}

ShapeMask ShapeMask::from_bitstring(std::size_t dim, std::string_view s) {
    std::vector<int> bits;
    bits.reserve(s.size());
    for (char c : s) {
        if (c != '0' && c != '1') throw Error(Errc::InvalidArgument, "bit-string must contain only 0/1");
        bits.push_back(c - '0');
    }
    return from_bits(dim, bits);
}

bool ShapeMask::is_zero() const noexcept {
    return std::all_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b == 0; });
}

std::size_t ShapeMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool ShapeMask::subset_of(const ShapeMask& other) const {
    require_same_dim(*this, other, "subset_of");
    for (std::size_t k = 0; k < bits_.size(); ++k)
        if (bits_[k] && !other.bits_[k]) return false;
    return true;
}

std::string ShapeMask::to_bitstring() const {
    std::string s(bits_.size(), '0');
    for (std::size_t k = 0; k < bits_.size(); ++k)
        if (bits_[k]) s[k] = '1';
    return s;
}

ShapeMask shape_of(const Matrix& m, double zero_tol) {
    if (!(zero_tol >= 0.0)) throw Error(Errc::InvalidArgument, "zero_tol must be >= 0");
    require_square_finite(m, "shape_of input");
    const auto d = static_cast<std::size_t>(m.rows());
    ShapeMask out(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (std::abs(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > zero_tol)
                out.set(i, j);
    return out;
}

ShapeMask bool_product(const ShapeMask& a, const ShapeMask& b) {
    require_same_dim(a, b, "bool_product");
    const std::size_t d = a.dim();
    ShapeMask out(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t t = 0; t < d; ++t) {
            if (!a(i, t)) continue;
            for (std::size_t j = 0; j < d; ++j)
                if (b(t, j)) out.set(i, j);
        }
    return out;
}

ShapeMask mask_and(const ShapeMask& a, const ShapeMask& b) {
    require_same_dim(a, b, "mask_and");
    ShapeMask out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) out.set(i, j, a(i, j) && b(i, j));
    return out;
}

ShapeMask mask_or(const ShapeMask& a, const ShapeMask& b) {
    require_same_dim(a, b, "mask_or");
    ShapeMask out(a.dim());
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = 0; j < a.dim(); ++j) out.set(i, j, a(i, j) || b(i, j));
    return out;
}

Matrix to_matrix(const ShapeMask& m) {
    const auto d = static_cast<Eigen::Index>(m.dim());
    Matrix out = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            if (m(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) out(i, j) = 1.0;
    return out;
}

} // namespace lyapshape
