#pragma once

#include "lyapshape/linalg.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lyapshape {

/// A d x d zero-one matrix recording which entries of a matrix are nonzero.
class ShapeMask {
public:
    ShapeMask() = default;
    explicit ShapeMask(std::size_t dim) : dim_(dim), bits_(dim * dim, 0) {}

    static ShapeMask zero(std::size_t dim) { return ShapeMask(dim); }
    static ShapeMask identity(std::size_t dim);
    /// Row-major bits; throws InvalidArgument on a size mismatch or a value other than 0/1.
    static ShapeMask from_bits(std::size_t dim, const std::vector<int>& bits);
    /// Row-major string of '0'/'1' characters of length dim*dim.
    static ShapeMask from_bitstring(std::size_t dim, std::string_view s);

    std::size_t dim() const noexcept { return dim_; }
    bool operator()(std::size_t i, std::size_t j) const { return bits_[i * dim_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool value = true) { bits_[i * dim_ + j] = value ? 1 : 0; }

    bool is_zero() const noexcept;
    std::size_t count() const noexcept;
    /// Support containment: every one of *this is also a one of `other`.
    bool subset_of(const ShapeMask& other) const;
    std::string to_bitstring() const;

    friend auto operator<=>(const ShapeMask&, const ShapeMask&) = default;
    friend bool operator==(const ShapeMask&, const ShapeMask&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Bit (i,j) is one iff |m(i,j)| > zero_tol.
ShapeMask shape_of(const Matrix& m, double zero_tol = 0.0);

/// Boolean-semiring product: (a*b)(i,j) = OR_t a(i,t) AND b(t,j).
ShapeMask bool_product(const ShapeMask& a, const ShapeMask& b);
ShapeMask mask_and(const ShapeMask& a, const ShapeMask& b);
ShapeMask mask_or(const ShapeMask& a, const ShapeMask& b);

/// The mask as a 0/1 dense matrix.
Matrix to_matrix(const ShapeMask& m);

} // namespace lyapshape
