/**
 * @file poly.hpp
 * @brief Truncated Taylor (monomial) basis of total degree <= m_max in d variables.
 *
 * Exponents are stored in graded lexicographic order: grouped by total degree,
 * and within one degree sorted so that higher powers of earlier coordinates
 * come first, e.g. for d = 2, m_max = 2:
 *
 *     1, x1, x2, x1^2, x1 x2, x2^2
 *
 * Each monomial is evaluated in shifted/scaled coordinates (x_j - center_j) / scale_j.
 * Raw monomials are center = 0, scale = 1.
 */
#pragma once

#include "pounet/errors.hpp"
#include "pounet/linalg.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pounet {

/// binomial(m_max + d, d): number of monomials of total degree <= m_max in d variables.
inline std::size_t basis_dim(std::size_t d, std::size_t m_max) {
    // Multiplicative form stays exact: each partial product is itself a binomial.
    std::uint64_t result = 1;
    for (std::size_t i = 1; i <= d; ++i) result = result * (m_max + i) / i;
    return static_cast<std::size_t>(result);
}

using MultiIndex = std::vector<unsigned>;

namespace detail {

// Appends all multi-indices of length `len` summing to `total`, first
// coordinate descending.
inline void append_grade(unsigned total, std::size_t len, MultiIndex& prefix, std::vector<MultiIndex>& out) {
    if (len == 1) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (unsigned first = total + 1; first-- > 0;) {
        prefix.push_back(first);
        append_grade(total - first, len - 1, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace detail

class MonomialBasis {
public:
    /// Raw monomials (center 0, unit scale).
    MonomialBasis(std::size_t dim_input, unsigned max_degree)
        : MonomialBasis(dim_input, max_degree, std::vector<double>(dim_input, 0.0),
                        std::vector<double>(dim_input, 1.0)) {}

    MonomialBasis(std::size_t dim_input, unsigned max_degree, std::vector<double> center, std::vector<double> scale)
        : dim_(dim_input), max_degree_(max_degree), center_(std::move(center)), scale_(std::move(scale)) {
        if (dim_ == 0) throw DimensionError("MonomialBasis: input dimension must be >= 1");
        if (center_.size() != dim_ || scale_.size() != dim_)
            throw DimensionError("MonomialBasis: center/scale must have one entry per coordinate");
        for (double s : scale_)
            if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("MonomialBasis: scale must be positive");
        if (!all_finite(center_)) throw NonFiniteError("MonomialBasis: non-finite center");

        MultiIndex prefix;
        for (unsigned g = 0; g <= max_degree_; ++g) detail::append_grade(g, dim_, prefix, exponents_);
    }

    /// Basis centered on the box midpoint and scaled by its half-widths.
    static MonomialBasis centered_on_box(std::span<const double> lower, std::span<const double> upper,
                                         unsigned max_degree) {
        if (lower.size() != upper.size()) throw DimensionError("MonomialBasis: box bounds differ in dimension");
        std::vector<double> c(lower.size()), s(lower.size());
        for (std::size_t j = 0; j < lower.size(); ++j) {
            c[j] = 0.5 * (lower[j] + upper[j]);
            s[j] = 0.5 * (upper[j] - lower[j]);
        }
        return {lower.size(), max_degree, std::move(c), std::move(s)};
    }

    std::size_t dim_input() const noexcept { return dim_; }
    unsigned max_degree() const noexcept { return max_degree_; }
    std::size_t size() const noexcept { return exponents_.size(); }
    const std::vector<MultiIndex>& exponents() const noexcept { return exponents_; }
    const std::vector<double>& center() const noexcept { return center_; }
    const std::vector<double>& scale() const noexcept { return scale_; }

    /// Writes P_beta(x) for every beta into `out` (length size()).
    void eval_into(std::span<const double> x, std::span<double> out) const {
        if (x.size() != dim_)
            throw DimensionError("eval_basis: point has dimension " + std::to_string(x.size()) + ", basis expects " +
                                 std::to_string(dim_));
        if (out.size() != exponents_.size()) throw DimensionError("eval_basis: output buffer has wrong length");
        // powers[j][p] = t_j^p
        thread_local std::vector<double> powers;
        const std::size_t stride = max_degree_ + 1;
        powers.assign(dim_ * stride, 1.0);
        for (std::size_t j = 0; j < dim_; ++j) {
            const double t = (x[j] - center_[j]) / scale_[j];
            for (std::size_t p = 1; p <= max_degree_; ++p) powers[j * stride + p] = powers[j * stride + p - 1] * t;
        }
        for (std::size_t b = 0; b < exponents_.size(); ++b) {
            double v = 1.0;
            const auto& k = exponents_[b];
            for (std::size_t j = 0; j < dim_; ++j) v *= powers[j * stride + k[j]];
            out[b] = v;
        }
    }

    friend bool operator==(const MonomialBasis&, const MonomialBasis&) = default;

private:
    std::size_t dim_;
    unsigned max_degree_;
    std::vector<double> center_;
    std::vector<double> scale_;
    std::vector<MultiIndex> exponents_;
};

inline std::vector<double> eval_basis(const MonomialBasis& basis, std::span<const double> x) {
    std::vector<double> out(basis.size());
    basis.eval_into(x, out);
    return out;
}

/// Basis values for every row of `xs`: an N x dim(V) matrix.
inline DenseMatrix eval_basis_batch(const MonomialBasis& basis, const DenseMatrix& xs) {
    if (xs.cols() != basis.dim_input())
        throw DimensionError("eval_basis: points have dimension " + std::to_string(xs.cols()) + ", basis expects " +
                             std::to_string(basis.dim_input()));
    DenseMatrix out(xs.rows(), basis.size());
    for (std::size_t i = 0; i < xs.rows(); ++i) basis.eval_into(xs.row(i), out.row(i));
    return out;
}

}  // namespace pounet
