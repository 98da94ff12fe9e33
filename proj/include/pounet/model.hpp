/**
 * @file model.hpp
 * @brief The POUnet approximant y(x) = sum_a phi_a(x) sum_b c_{a,b} P_b(x).
 *
 * Besides prediction this assembles the least-squares design matrix for a
 * frozen partition (column (a, b) at index a * dim(V) + b) and hands loss
 * gradients back to the partition network.
 */
#pragma once

#include "pounet/errors.hpp"
#include "pounet/linalg.hpp"
#include "pounet/poly.hpp"
#include "pounet/pou.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace pounet {

/// Point samples {(x_i, y_i)}. Exact duplicate rows of xs are dropped on
/// construction, keeping the first occurrence and its label.
class Dataset {
public:
    Dataset() = default;

    Dataset(DenseMatrix xs, std::vector<double> ys) {
        if (xs.rows() != ys.size())
            throw DimensionError("Dataset: " + std::to_string(xs.rows()) + " points but " + std::to_string(ys.size()) +
                                 " labels");
        if (xs.rows() == 0 || xs.cols() == 0) throw DimensionError("Dataset: need at least one point");
        if (!all_finite(xs.entries()) || !all_finite(ys)) throw NonFiniteError("Dataset: non-finite sample");

        std::map<std::vector<double>, std::size_t> seen;
        std::vector<double> kept_x;
        kept_x.reserve(xs.entries().size());
        for (std::size_t i = 0; i < xs.rows(); ++i) {
            std::vector<double> key(xs.row(i).begin(), xs.row(i).end());
            // +0.0 and -0.0 are the same point.
            for (auto& v : key) v += 0.0;
            if (!seen.emplace(key, i).second) continue;
            kept_x.insert(kept_x.end(), xs.row(i).begin(), xs.row(i).end());
            ys_.push_back(ys[i]);
        }
        xs_ = DenseMatrix(ys_.size(), xs.cols(), std::move(kept_x));
    }

    const DenseMatrix& xs() const noexcept { return xs_; }
    const std::vector<double>& ys() const noexcept { return ys_; }
    std::size_t size() const noexcept { return ys_.size(); }
    std::size_t dim() const noexcept { return xs_.cols(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    DenseMatrix xs_;
    std::vector<double> ys_;
};

namespace detail {

// Q(i, a) = c_a . P(x_i)
inline DenseMatrix local_values(const DenseMatrix& basis_vals, const DenseMatrix& coeffs) {
    DenseMatrix q(basis_vals.rows(), coeffs.rows());
    q.map().noalias() = basis_vals.map() * coeffs.map().transpose();
    return q;
}

inline std::vector<double> blend(const DenseMatrix& phi, const DenseMatrix& q) {
    std::vector<double> out(phi.rows());
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        double s = 0.0;
        auto pr = phi.row(i);
        auto qr = q.row(i);
        for (std::size_t a = 0; a < pr.size(); ++a) s += pr[a] * qr[a];
        out[i] = s;
    }
    return out;
}

}  // namespace detail

/// Entry (i, a * dim(V) + b) = phi_a(x_i) P_b(x_i), from precomputed values.
inline DenseMatrix assemble_design(const DenseMatrix& phi, const DenseMatrix& basis_vals) {
    if (phi.rows() != basis_vals.rows()) throw DimensionError("design_matrix: partition/basis row count mismatch");
    const std::size_t np = phi.cols(), nb = basis_vals.cols();
    DenseMatrix a(phi.rows(), np * nb);
    for (std::size_t i = 0; i < phi.rows(); ++i) {
        auto out = a.row(i);
        auto p = basis_vals.row(i);
        for (std::size_t al = 0; al < np; ++al) {
            const double w = phi(i, al);
            for (std::size_t b = 0; b < nb; ++b) out[al * nb + b] = w * p[b];
        }
    }
    return a;
}

template <PartitionNetwork Net>
class PouModel {
public:
    PouModel(Net net, MonomialBasis basis) : PouModel(std::move(net), basis, DenseMatrix(0, 0)) {}

    PouModel(Net net, MonomialBasis basis, DenseMatrix coeffs)
        : net_(std::move(net)), basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
        if (net_.dim_input() != basis_.dim_input())
            throw DimensionError("PouModel: partition and basis disagree on input dimension");
        if (coeffs_.empty()) coeffs_ = DenseMatrix(net_.n_part(), basis_.size());
        check_coeffs(coeffs_);
    }

    const Net& net() const noexcept { return net_; }
    Net& net() noexcept { return net_; }
    const MonomialBasis& basis() const noexcept { return basis_; }
    const DenseMatrix& coeffs() const noexcept { return coeffs_; }

    std::size_t n_part() const noexcept { return net_.n_part(); }
    std::size_t n_coeffs() const noexcept { return net_.n_part() * basis_.size(); }

    void set_coeffs(DenseMatrix c) {
        check_coeffs(c);
        coeffs_ = std::move(c);
    }

    /// Takes the flat alpha-major vector returned by the least-squares solve.
    void set_coeffs(std::span<const double> flat) {
        if (flat.size() != n_coeffs()) throw DimensionError("PouModel: coefficient vector has wrong length");
        set_coeffs(DenseMatrix(n_part(), basis_.size(), {flat.begin(), flat.end()}));
    }

    /// Standard normal coefficients.
    void randomize_coeffs(Rng& rng) {
        std::normal_distribution<double> normal(0.0, 1.0);
        DenseMatrix c(n_part(), basis_.size());
        for (std::size_t a = 0; a < c.rows(); ++a)
            for (std::size_t b = 0; b < c.cols(); ++b) c(a, b) = normal(rng);
        coeffs_ = std::move(c);
    }

private:
    void check_coeffs(const DenseMatrix& c) const {
        if (c.rows() != net_.n_part() || c.cols() != basis_.size())
            throw DimensionError("PouModel: coefficients must be " + std::to_string(net_.n_part()) + "x" +
                                 std::to_string(basis_.size()));
        if (!all_finite(c.entries())) throw NonFiniteError("PouModel: non-finite coefficient");
    }

    Net net_;
    MonomialBasis basis_;
    DenseMatrix coeffs_;
};

template <PartitionNetwork Net>
std::vector<double> predict(const PouModel<Net>& model, const DenseMatrix& xs) {
    const auto phi = eval_partitions(model.net(), xs);
    const auto p = eval_basis_batch(model.basis(), xs);
    return detail::blend(phi, detail::local_values(p, model.coeffs()));
}

template <PartitionNetwork Net>
DenseMatrix design_matrix(const Net& net, const MonomialBasis& basis, const DenseMatrix& xs) {
    return assemble_design(eval_partitions(net, xs), eval_basis_batch(basis, xs));
}

inline double sum_squared_residual(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size()) throw DimensionError("residual: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (yhat[i] - y[i]) * (yhat[i] - y[i]);
    return s;
}

/// Sum of squared residuals over the data (no 1/N).
template <PartitionNetwork Net>
double loss(const PouModel<Net>& model, const Dataset& data) {
    return sum_squared_residual(predict(model, data.xs()), data.ys());
}

/// Gradient of the summed loss w.r.t. xi at fixed c, from precomputed values:
/// upstream(i, a) = 2 r_i (c_a . P(x_i)).
template <PartitionNetwork Net>
ParamVector loss_grad_from(const Net& net, const typename Net::Forward& fwd, const DenseMatrix& q,
                           std::span<const double> residual) {
    DenseMatrix upstream(q.rows(), q.cols());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const double r2 = 2.0 * residual[i];
        auto out = upstream.row(i);
        auto qr = q.row(i);
        for (std::size_t a = 0; a < qr.size(); ++a) out[a] = r2 * qr[a];
    }
    return net.backward(fwd, upstream);
}

template <PartitionNetwork Net>
ParamVector loss_grad_xi(const PouModel<Net>& model, const Dataset& data) {
    const auto fwd = model.net().forward(data.xs());
    const auto q = detail::local_values(eval_basis_batch(model.basis(), data.xs()), model.coeffs());
    auto r = detail::blend(fwd.phi, q);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= data.ys()[i];
    return loss_grad_from(model.net(), fwd, q, r);
}

}  // namespace pounet
