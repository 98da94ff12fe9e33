/**
 * @file linalg.hpp
 * @brief Dense row-major matrices and (ridge-regularized) least-squares solves.
 *
 * Storage is a plain row-major vector of doubles. Heavy lifting is delegated
 * to Eigen through zero-copy maps, so callers never see Eigen types unless
 * they ask for them via DenseMatrix::map().
 *
 * Least squares:
 *   lambda > 0 : column-pivoted Householder QR of the augmented system
 *                [A; sqrt(lambda) I] c = [y; 0]
 *   lambda = 0 : minimum-norm solution through an SVD with singular values
 *                below rcond * sigma_max (default 1e-12) discarded. The SVD is taken of the
 *                triangular QR factor of A, so the cost is dominated by the
 *                O(n k^2) QR rather than a tall SVD.
 */
#pragma once

#include "pounet/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace pounet {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (entries_.size() != rows_ * cols_)
            throw DimensionError("DenseMatrix: " + std::to_string(entries_.size()) + " entries for a " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
        if (!all_finite(entries_)) throw NonFiniteError("DenseMatrix: non-finite entry");
    }

    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        entries_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
            entries_.insert(entries_.end(), r.begin(), r.end());
        }
        if (!all_finite(entries_)) throw NonFiniteError("DenseMatrix: non-finite entry");
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    template <class Derived>
    static DenseMatrix from_eigen(const Eigen::MatrixBase<Derived>& m) {
        DenseMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
        out.map() = m;
        if (!all_finite(out.entries_)) throw NonFiniteError("DenseMatrix: non-finite entry");
        return out;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return entries_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const { return {entries_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {entries_.data() + i * cols_, cols_}; }

    const std::vector<double>& entries() const noexcept { return entries_; }
    double* data() noexcept { return entries_.data(); }
    const double* data() const noexcept { return entries_.data(); }

    Eigen::Map<RowMajorMatrix> map() {
        return {entries_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
    }
    Eigen::Map<const RowMajorMatrix> map() const {
        return {entries_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
    }

    double frobenius_norm() const { return map().norm(); }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> entries_;
};

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                             std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    DenseMatrix out(a.rows(), b.cols());
    // Plain triple loop keeps the result independent of Eigen's blocking.
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out_row = out.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto b_row = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
        }
    }
    return out;
}

/// Relative singular-value cutoff for the unregularized solve.
inline constexpr double kSvdTruncation = 1e-12;

/// Minimizes |A c - y|^2 + lambda |c|^2. For lambda == 0 the minimum-norm
/// minimizer is returned, so rank-deficient A is fine; singular values at or
/// below rcond * sigma_max are treated as zero.
inline std::vector<double> solve_least_squares(const DenseMatrix& a, std::span<const double> y, double lambda,
                                               double rcond = kSvdTruncation) {
    const std::size_t n = a.rows();
    const std::size_t k = a.cols();
    if (n == 0 || k == 0) throw DimensionError("solve_least_squares: empty system");
    if (y.size() != n)
        throw DimensionError("solve_least_squares: rhs has " + std::to_string(y.size()) + " entries, matrix has " +
                             std::to_string(n) + " rows");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("solve_least_squares: lambda must be finite and nonnegative");
    if (!(rcond >= 0.0 && rcond < 1.0)) throw std::invalid_argument("solve_least_squares: rcond must lie in [0, 1)");
    if (!all_finite(a.entries()) || !all_finite(y)) throw NonFiniteError("solve_least_squares: non-finite input");

    const auto A = a.map();
    const Eigen::Map<const Eigen::VectorXd> rhs(y.data(), static_cast<Eigen::Index>(n));
    const auto ki = static_cast<Eigen::Index>(k);
    Eigen::VectorXd c;

    if (lambda > 0.0) {
        Eigen::MatrixXd aug(static_cast<Eigen::Index>(n + k), ki);
        aug.topRows(static_cast<Eigen::Index>(n)) = A;
        aug.bottomRows(ki).setZero();
        aug.bottomRows(ki).diagonal().setConstant(std::sqrt(lambda));
        Eigen::VectorXd rhs_aug = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n + k));
        rhs_aug.head(static_cast<Eigen::Index>(n)) = rhs;
        c = aug.colPivHouseholderQr().solve(rhs_aug);
    } else {
        // Reduce to a square problem first: A = Q R, then SVD of R.
        Eigen::MatrixXd r;
        Eigen::VectorXd qty;
        if (n > k) {
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
            r = qr.matrixQR().topRows(ki).triangularView<Eigen::Upper>();
            qty = (qr.householderQ().transpose() * rhs).head(ki);
        } else {
            r = A;
            qty = rhs;
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sigma = svd.singularValues();
        const double cutoff = rcond * (sigma.size() ? sigma(0) : 0.0);
        Eigen::VectorXd uty = svd.matrixU().transpose() * qty;
        for (Eigen::Index i = 0; i < sigma.size(); ++i) uty(i) = sigma(i) > cutoff ? uty(i) / sigma(i) : 0.0;
        c = svd.matrixV() * uty;
    }
    if (!c.allFinite()) throw NonFiniteError("solve_least_squares: solver produced non-finite coefficients");
    return {c.data(), c.data() + c.size()};
}

}  // namespace pounet
