/**
 * @file pou.hpp
 * @brief Learned partitions of unity.
 *
 * A partition network maps N points to an N x N_part matrix whose rows are
 * nonnegative and sum to one. Three implementations are provided:
 *
 *  - RbfNet: normalized Gaussians exp(-|x - c_a|^2 / s_a^2) / sum_b exp(...).
 *    Shapes are stored and optimized as log(s) so they stay positive.
 *  - ResNetPou: ReLU residual trunk followed by an affine head and softmax.
 *  - IndicatorPartition: frozen uniform cells on an interval; no parameters.
 *
 * All of them expose a two-stage evaluation: forward() returns the partition
 * values together with whatever the backward pass needs, and backward() turns
 * an upstream matrix U into dL/dxi for L = sum_{i,a} U(i,a) phi_a(x_i).
 */
#pragma once

#include "pounet/domain.hpp"
#include "pounet/errors.hpp"
#include "pounet/linalg.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace pounet {

// ---------------------------------------------------------------------------
// Flat parameter vectors
// ---------------------------------------------------------------------------

struct ParamBlock {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;

    std::size_t size() const noexcept { return rows * cols; }
    friend bool operator==(const ParamBlock&, const ParamBlock&) = default;
};

/// Describes how a flat vector maps onto the named blocks of one architecture.
struct ParamLayout {
    std::string architecture;
    std::vector<ParamBlock> blocks;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.size();
        return n;
    }
    friend bool operator==(const ParamLayout&, const ParamLayout&) = default;
};

struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

namespace detail {

using ColMatrix = Eigen::MatrixXd;

// Sequential writer/reader over a ParamVector, one block at a time.
class ParamWriter {
public:
    explicit ParamWriter(std::string arch) { out_.layout.architecture = std::move(arch); }

    template <class Derived>
    void put(std::string name, const Eigen::DenseBase<Derived>& m) {
        out_.layout.blocks.push_back({std::move(name), static_cast<std::size_t>(m.rows()),
                                      static_cast<std::size_t>(m.cols())});
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) out_.values.push_back(m(r, c));
    }

    ParamVector finish() && { return std::move(out_); }

private:
    ParamVector out_;
};

class ParamReader {
public:
    ParamReader(const ParamVector& p, const ParamLayout& expected) : p_(p) {
        if (p.layout != expected)
            throw DimensionError("parameter layout mismatch for architecture '" + expected.architecture + "'");
        if (p.values.size() != expected.total())
            throw DimensionError("parameter vector has " + std::to_string(p.values.size()) + " values, layout needs " +
                                 std::to_string(expected.total()));
        if (!all_finite(p.values)) throw NonFiniteError("non-finite parameter value");
    }

    template <class Derived>
    void get(Eigen::DenseBase<Derived>& m) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = p_.values[pos_++];
    }

private:
    const ParamVector& p_;
    std::size_t pos_ = 0;
};

inline bool finite(const ColMatrix& m) { return m.allFinite(); }

// Column-wise softmax with the max subtracted per column.
inline ColMatrix softmax_columns(const ColMatrix& logits) {
    ColMatrix out(logits.rows(), logits.cols());
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        const double mx = logits.col(j).maxCoeff();
        out.col(j) = (logits.col(j).array() - mx).exp();
        out.col(j) /= out.col(j).sum();
    }
    return out;
}

// d/dz of sum_a U_a softmax(z)_a, column by column: phi .* (U - <U, phi>).
inline ColMatrix softmax_backward(const ColMatrix& phi, const ColMatrix& upstream) {
    ColMatrix g = phi.cwiseProduct(upstream);
    const Eigen::RowVectorXd dots = g.colwise().sum();
    g -= phi * dots.asDiagonal();
    return g;
}

inline void check_points(const DenseMatrix& xs, std::size_t d, std::string_view who) {
    if (xs.cols() != d)
        throw DimensionError(std::string(who) + ": points have dimension " + std::to_string(xs.cols()) +
                             ", network expects " + std::to_string(d));
}

inline ColMatrix to_columns(const DenseMatrix& xs) { return xs.map().transpose(); }

inline ColMatrix upstream_columns(const DenseMatrix& upstream, std::size_t n_data, std::size_t n_part) {
    if (upstream.rows() != n_data || upstream.cols() != n_part)
        throw DimensionError("grad_partitions: upstream is " + std::to_string(upstream.rows()) + "x" +
                             std::to_string(upstream.cols()) + ", expected " + std::to_string(n_data) + "x" +
                             std::to_string(n_part));
    return upstream.map().transpose();
}

}  // namespace detail

/// The contract every partition architecture satisfies.
template <class Net>
concept PartitionNetwork = requires(const Net& net, Net& mut, const DenseMatrix& xs,
                                    const typename Net::Forward& fwd, const DenseMatrix& up, const ParamVector& p) {
    { net.n_part() } -> std::convertible_to<std::size_t>;
    { net.dim_input() } -> std::convertible_to<std::size_t>;
    { net.forward(xs) } -> std::same_as<typename Net::Forward>;
    { fwd.phi } -> std::convertible_to<const DenseMatrix&>;
    { net.backward(fwd, up) } -> std::same_as<ParamVector>;
    { net.params() } -> std::same_as<ParamVector>;
    { net.layout() } -> std::same_as<ParamLayout>;
    { mut.set_params(p) };
};

// ---------------------------------------------------------------------------
// POU #1: normalized Gaussian RBFs
// ---------------------------------------------------------------------------

class RbfNet {
public:
    static constexpr std::string_view kArchitecture = "rbf";

    struct Forward {
        DenseMatrix xs;
        DenseMatrix phi;
    };

    RbfNet() = default;

    /// centers: N_part x d; shapes: N_part positive widths.
    RbfNet(DenseMatrix centers, std::vector<double> shapes) : centers_(std::move(centers)) {
        if (shapes.size() != centers_.rows()) throw DimensionError("RbfNet: one shape per center required");
        if (centers_.rows() == 0 || centers_.cols() == 0) throw DimensionError("RbfNet: empty network");
        log_shapes_.resize(shapes.size());
        for (std::size_t a = 0; a < shapes.size(); ++a) {
            if (!(shapes[a] > 0.0) || !std::isfinite(shapes[a]))
                throw std::invalid_argument("RbfNet: shape parameters must be positive");
            log_shapes_[a] = std::log(shapes[a]);
        }
    }

    std::size_t n_part() const noexcept { return centers_.rows(); }
    std::size_t dim_input() const noexcept { return centers_.cols(); }
    const DenseMatrix& centers() const noexcept { return centers_; }
    std::vector<double> shapes() const {
        std::vector<double> s(log_shapes_.size());
        std::transform(log_shapes_.begin(), log_shapes_.end(), s.begin(), [](double l) { return std::exp(l); });
        return s;
    }

    ParamLayout layout() const {
        return {std::string(kArchitecture), {{"centers", n_part(), dim_input()}, {"log_shapes", n_part(), 1}}};
    }

    ParamVector params() const {
        ParamVector p{layout(), centers_.entries()};
        p.values.insert(p.values.end(), log_shapes_.begin(), log_shapes_.end());
        return p;
    }

    void set_params(const ParamVector& p) {
        const auto expected = layout();
        if (p.layout != expected) throw DimensionError("RbfNet: parameter layout mismatch");
        if (p.values.size() != expected.total()) throw DimensionError("RbfNet: parameter vector has wrong length");
        if (!all_finite(p.values)) throw NonFiniteError("RbfNet: non-finite parameter value");
        const std::size_t nc = n_part() * dim_input();
        centers_ = DenseMatrix(n_part(), dim_input(), {p.values.begin(), p.values.begin() + static_cast<long>(nc)});
        log_shapes_.assign(p.values.begin() + static_cast<long>(nc), p.values.end());
    }

    Forward forward(const DenseMatrix& xs) const {
        detail::check_points(xs, dim_input(), "RbfNet");
        check_finite();
        const std::size_t n = xs.rows(), np = n_part(), d = dim_input();
        std::vector<double> inv_s2(np);
        for (std::size_t a = 0; a < np; ++a) inv_s2[a] = std::exp(-2.0 * log_shapes_[a]);

        DenseMatrix phi(n, np);
        for (std::size_t i = 0; i < n; ++i) {
            auto x = xs.row(i);
            auto row = phi.row(i);
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < np; ++a) {
                auto c = centers_.row(a);
                double r2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) r2 += (x[j] - c[j]) * (x[j] - c[j]);
                row[a] = -r2 * inv_s2[a];
                mx = std::max(mx, row[a]);
            }
            double sum = 0.0;
            for (auto& v : row) sum += (v = std::exp(v - mx));
            for (auto& v : row) v /= sum;
        }
        return {xs, std::move(phi)};
    }

    ParamVector backward(const Forward& fwd, const DenseMatrix& upstream) const {
        const std::size_t n = fwd.xs.rows(), np = n_part(), d = dim_input();
        if (upstream.rows() != n || upstream.cols() != np)
            throw DimensionError("grad_partitions: upstream shape does not match partition output");
        ParamVector g{layout(), std::vector<double>(np * d + np, 0.0)};
        double* dc = g.values.data();
        double* dl = g.values.data() + np * d;
        std::vector<double> inv_s2(np);
        for (std::size_t a = 0; a < np; ++a) inv_s2[a] = std::exp(-2.0 * log_shapes_[a]);

        for (std::size_t i = 0; i < n; ++i) {
            auto phi = fwd.phi.row(i);
            auto u = upstream.row(i);
            auto x = fwd.xs.row(i);
            double dot = 0.0;
            for (std::size_t a = 0; a < np; ++a) dot += u[a] * phi[a];
            for (std::size_t a = 0; a < np; ++a) {
                // dL/dz_a for logit z_a = -|x - c_a|^2 exp(-2 l_a)
                const double dz = phi[a] * (u[a] - dot);
                if (dz == 0.0) continue;
                auto c = centers_.row(a);
                double r2 = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double diff = x[j] - c[j];
                    r2 += diff * diff;
                    dc[a * d + j] += dz * 2.0 * diff * inv_s2[a];
                }
                dl[a] += dz * 2.0 * r2 * inv_s2[a];
            }
        }
        return g;
    }

    friend bool operator==(const RbfNet&, const RbfNet&) = default;

private:
    void check_finite() const {
        if (!all_finite(centers_.entries()) || !all_finite(log_shapes_))
            throw NonFiniteError("RbfNet: non-finite parameter value");
    }

    DenseMatrix centers_;
    std::vector<double> log_shapes_;
};

// ---------------------------------------------------------------------------
// ReLU residual trunk shared by POU #2 and the scalar baseline regressor
// ---------------------------------------------------------------------------

/// h0 = relu(W_in x + b_in);  h_k = h_{k-1} + relu(W_k h_{k-1} + b_k),  k = 1..depth.
class ResNetTrunk {
public:
    struct Block {
        detail::ColMatrix weight;
        Eigen::VectorXd bias;
        friend bool operator==(const Block&, const Block&) = default;
    };

    struct Cache {
        detail::ColMatrix input;                   // d x N
        std::vector<detail::ColMatrix> pre;        // depth+1 pre-activations, w x N
        std::vector<detail::ColMatrix> hidden;     // depth+1 hidden states, w x N
    };

    ResNetTrunk() = default;
    ResNetTrunk(std::size_t dim_input, std::size_t width, std::size_t depth)
        : in_weight_(detail::ColMatrix::Zero(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(dim_input))),
          in_bias_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width))) {
        if (dim_input == 0 || width == 0 || depth == 0)
            throw std::invalid_argument("ResNetTrunk: dimension, width and depth must be >= 1");
        blocks_.assign(depth, {detail::ColMatrix::Zero(static_cast<Eigen::Index>(width),
                                                        static_cast<Eigen::Index>(width)),
                               Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width))});
    }

    std::size_t dim_input() const noexcept { return static_cast<std::size_t>(in_weight_.cols()); }
    std::size_t width() const noexcept { return static_cast<std::size_t>(in_weight_.rows()); }
    std::size_t depth() const noexcept { return blocks_.size(); }

    detail::ColMatrix& in_weight() noexcept { return in_weight_; }
    const detail::ColMatrix& in_weight() const noexcept { return in_weight_; }
    Eigen::VectorXd& in_bias() noexcept { return in_bias_; }
    const Eigen::VectorXd& in_bias() const noexcept { return in_bias_; }
    std::vector<Block>& blocks() noexcept { return blocks_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    void append_layout(std::vector<ParamBlock>& out) const {
        out.push_back({"in_weight", width(), dim_input()});
        out.push_back({"in_bias", width(), 1});
        for (std::size_t k = 0; k < depth(); ++k) {
            out.push_back({"block" + std::to_string(k) + "_weight", width(), width()});
            out.push_back({"block" + std::to_string(k) + "_bias", width(), 1});
        }
    }

    void write(detail::ParamWriter& w) const {
        w.put("in_weight", in_weight_);
        w.put("in_bias", in_bias_);
        for (std::size_t k = 0; k < depth(); ++k) {
            w.put("block" + std::to_string(k) + "_weight", blocks_[k].weight);
            w.put("block" + std::to_string(k) + "_bias", blocks_[k].bias);
        }
    }

    void read(detail::ParamReader& r) {
        r.get(in_weight_);
        r.get(in_bias_);
        for (auto& b : blocks_) {
            r.get(b.weight);
            r.get(b.bias);
        }
    }

    bool finite() const {
        if (!in_weight_.allFinite() || !in_bias_.allFinite()) return false;
        for (const auto& b : blocks_)
            if (!b.weight.allFinite() || !b.bias.allFinite()) return false;
        return true;
    }

    Cache forward(const DenseMatrix& xs) const {
        Cache c;
        c.input = detail::to_columns(xs);
        c.pre.reserve(depth() + 1);
        c.hidden.reserve(depth() + 1);
        c.pre.push_back((in_weight_ * c.input).colwise() + in_bias_);
        c.hidden.push_back(c.pre.back().cwiseMax(0.0));
        for (const auto& b : blocks_) {
            c.pre.push_back((b.weight * c.hidden.back()).colwise() + b.bias);
            c.hidden.push_back(c.hidden.back() + c.pre.back().cwiseMax(0.0));
        }
        return c;
    }

    /// Accumulates trunk gradients (in write() order) given dL/dh_depth.
    void backward(const Cache& c, detail::ColMatrix grad_h, detail::ParamWriter& w) const {
        const std::size_t D = depth();
        std::vector<detail::ColMatrix> dw(D);
        std::vector<Eigen::VectorXd> db(D);
        for (std::size_t k = D; k-- > 0;) {
            const detail::ColMatrix dz = (c.pre[k + 1].array() > 0.0).select(grad_h.array(), 0.0).matrix();
            dw[k] = dz * c.hidden[k].transpose();
            db[k] = dz.rowwise().sum();
            grad_h += blocks_[k].weight.transpose() * dz;
        }
        const detail::ColMatrix dz0 = (c.pre[0].array() > 0.0).select(grad_h.array(), 0.0).matrix();
        w.put("in_weight", detail::ColMatrix(dz0 * c.input.transpose()));
        w.put("in_bias", Eigen::VectorXd(dz0.rowwise().sum()));
        for (std::size_t k = 0; k < D; ++k) {
            w.put("block" + std::to_string(k) + "_weight", dw[k]);
            w.put("block" + std::to_string(k) + "_bias", db[k]);
        }
    }

    friend bool operator==(const ResNetTrunk&, const ResNetTrunk&) = default;

private:
    detail::ColMatrix in_weight_;
    Eigen::VectorXd in_bias_;
    std::vector<Block> blocks_;
};

// ---------------------------------------------------------------------------
// POU #2: ResNet + softmax
// ---------------------------------------------------------------------------

class ResNetPou {
public:
    static constexpr std::string_view kArchitecture = "resnet";

    struct Forward {
        ResNetTrunk::Cache trunk;
        detail::ColMatrix phi_cols;  // N_part x N
        DenseMatrix phi;             // N x N_part
    };

    ResNetPou() = default;
    ResNetPou(std::size_t dim_input, std::size_t width, std::size_t depth, std::size_t n_part)
        : trunk_(dim_input, width, depth),
          out_weight_(detail::ColMatrix::Zero(static_cast<Eigen::Index>(n_part), static_cast<Eigen::Index>(width))),
          out_bias_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_part))) {
        if (n_part == 0) throw std::invalid_argument("ResNetPou: need at least one partition");
    }

    std::size_t n_part() const noexcept { return static_cast<std::size_t>(out_weight_.rows()); }
    std::size_t dim_input() const noexcept { return trunk_.dim_input(); }
    std::size_t width() const noexcept { return trunk_.width(); }
    std::size_t depth() const noexcept { return trunk_.depth(); }

    ResNetTrunk& trunk() noexcept { return trunk_; }
    const ResNetTrunk& trunk() const noexcept { return trunk_; }
    detail::ColMatrix& out_weight() noexcept { return out_weight_; }
    Eigen::VectorXd& out_bias() noexcept { return out_bias_; }

    ParamLayout layout() const {
        ParamLayout l{std::string(kArchitecture), {}};
        trunk_.append_layout(l.blocks);
        l.blocks.push_back({"out_weight", n_part(), width()});
        l.blocks.push_back({"out_bias", n_part(), 1});
        return l;
    }

    ParamVector params() const {
        detail::ParamWriter w{std::string(kArchitecture)};
        trunk_.write(w);
        w.put("out_weight", out_weight_);
        w.put("out_bias", out_bias_);
        return std::move(w).finish();
    }

    void set_params(const ParamVector& p) {
        detail::ParamReader r(p, layout());
        trunk_.read(r);
        r.get(out_weight_);
        r.get(out_bias_);
    }

    Forward forward(const DenseMatrix& xs) const {
        detail::check_points(xs, dim_input(), "ResNetPou");
        if (!trunk_.finite() || !out_weight_.allFinite() || !out_bias_.allFinite())
            throw NonFiniteError("ResNetPou: non-finite parameter value");
        Forward f;
        f.trunk = trunk_.forward(xs);
        const detail::ColMatrix logits = (out_weight_ * f.trunk.hidden.back()).colwise() + out_bias_;
        f.phi_cols = detail::softmax_columns(logits);
        f.phi = DenseMatrix::from_eigen(f.phi_cols.transpose());
        return f;
    }

    ParamVector backward(const Forward& f, const DenseMatrix& upstream) const {
        const auto n = static_cast<std::size_t>(f.phi_cols.cols());
        const detail::ColMatrix u = detail::upstream_columns(upstream, n, n_part());
        const detail::ColMatrix dlogits = detail::softmax_backward(f.phi_cols, u);
        detail::ParamWriter w{std::string(kArchitecture)};
        trunk_.backward(f.trunk, out_weight_.transpose() * dlogits, w);
        w.put("out_weight", detail::ColMatrix(dlogits * f.trunk.hidden.back().transpose()));
        w.put("out_bias", Eigen::VectorXd(dlogits.rowwise().sum()));
        return std::move(w).finish();
    }

    friend bool operator==(const ResNetPou&, const ResNetPou&) = default;

private:
    ResNetTrunk trunk_;
    detail::ColMatrix out_weight_;
    Eigen::VectorXd out_bias_;
};

// ---------------------------------------------------------------------------
// Frozen indicator partition of an interval
// ---------------------------------------------------------------------------

/// N equal cells [lo + k h, lo + (k+1) h); the last cell also takes x = hi.
/// Points outside the interval go to the nearest end cell.
class IndicatorPartition {
public:
    static constexpr std::string_view kArchitecture = "indicator";

    struct Forward {
        DenseMatrix phi;
    };

    IndicatorPartition(std::size_t n_part, double lo, double hi) : n_part_(n_part), lo_(lo), hi_(hi) {
        if (n_part == 0 || !(lo < hi)) throw std::invalid_argument("IndicatorPartition: need n_part >= 1 and lo < hi");
    }

    std::size_t n_part() const noexcept { return n_part_; }
    std::size_t dim_input() const noexcept { return 1; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

    std::size_t cell_of(double x) const {
        const double t = (x - lo_) / (hi_ - lo_) * static_cast<double>(n_part_);
        if (!(t > 0.0)) return 0;
        return std::min(static_cast<std::size_t>(t), n_part_ - 1);
    }

    ParamLayout layout() const { return {std::string(kArchitecture), {}}; }
    ParamVector params() const { return {layout(), {}}; }
    void set_params(const ParamVector& p) {
        if (p.layout != layout() || !p.values.empty()) throw DimensionError("IndicatorPartition has no parameters");
    }

    Forward forward(const DenseMatrix& xs) const {
        detail::check_points(xs, 1, "IndicatorPartition");
        DenseMatrix phi(xs.rows(), n_part_);
        for (std::size_t i = 0; i < xs.rows(); ++i) phi(i, cell_of(xs(i, 0))) = 1.0;
        return {std::move(phi)};
    }

    ParamVector backward(const Forward& f, const DenseMatrix& upstream) const {
        if (upstream.rows() != f.phi.rows() || upstream.cols() != n_part_)
            throw DimensionError("grad_partitions: upstream shape does not match partition output");
        return params();
    }

private:
    std::size_t n_part_;
    double lo_, hi_;
};

static_assert(PartitionNetwork<RbfNet>);
static_assert(PartitionNetwork<ResNetPou>);
static_assert(PartitionNetwork<IndicatorPartition>);

// ---------------------------------------------------------------------------
// Free-function interface
// ---------------------------------------------------------------------------

template <PartitionNetwork Net>
DenseMatrix eval_partitions(const Net& net, const DenseMatrix& xs) {
    return net.forward(xs).phi;
}

template <PartitionNetwork Net>
ParamVector grad_partitions(const Net& net, const DenseMatrix& xs, const DenseMatrix& upstream) {
    return net.backward(net.forward(xs), upstream);
}

/// Centers uniform in the domain, unit shapes.
inline RbfNet init_rbf(std::size_t n_part, const Box& domain, Rng& rng) {
    if (n_part == 0) throw std::invalid_argument("init_rbf: need at least one partition");
    DenseMatrix centers(n_part, domain.dim());
    for (std::size_t a = 0; a < n_part; ++a) {
        const auto c = domain.sample(rng);
        std::copy(c.begin(), c.end(), centers.row(a).begin());
    }
    return {std::move(centers), std::vector<double>(n_part, 1.0)};
}

/// First layer: unit-norm random normals with the hyperplane pinned to a
/// uniformly drawn point of the box. Residual blocks: N(0, 1/width) weights,
/// zero bias. Head: zero, i.e. a uniform initial partition.
inline void init_trunk_box(ResNetTrunk& trunk, const Box& domain, Rng& rng) {
    if (domain.dim() != trunk.dim_input()) throw DimensionError("init_resnet_box: domain dimension mismatch");
    std::normal_distribution<double> normal(0.0, 1.0);
    auto& w_in = trunk.in_weight();
    for (Eigen::Index r = 0; r < w_in.rows(); ++r) {
        double norm2 = 0.0;
        do {
            for (Eigen::Index c = 0; c < w_in.cols(); ++c) w_in(r, c) = normal(rng);
            norm2 = w_in.row(r).squaredNorm();
        } while (norm2 < 1e-12);
        w_in.row(r) /= std::sqrt(norm2);
        const auto p = domain.sample(rng);
        double b = 0.0;
        for (Eigen::Index c = 0; c < w_in.cols(); ++c) b -= w_in(r, c) * p[static_cast<std::size_t>(c)];
        trunk.in_bias()(r) = b;
    }
    const double sd = 1.0 / std::sqrt(static_cast<double>(trunk.width()));
    std::normal_distribution<double> block_normal(0.0, sd);
    for (auto& blk : trunk.blocks()) {
        for (Eigen::Index c = 0; c < blk.weight.cols(); ++c)
            for (Eigen::Index r = 0; r < blk.weight.rows(); ++r) blk.weight(r, c) = block_normal(rng);
        blk.bias.setZero();
    }
}

/// Glorot-uniform weights, zero biases.
inline void init_trunk_glorot(ResNetTrunk& trunk, Rng& rng) {
    auto fill = [&rng](auto& m) {
        const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        std::uniform_real_distribution<double> u(-a, a);
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
    };
    fill(trunk.in_weight());
    trunk.in_bias().setZero();
    for (auto& blk : trunk.blocks()) {
        fill(blk.weight);
        blk.bias.setZero();
    }
}

inline ResNetPou init_resnet_box(std::size_t width, std::size_t depth, std::size_t n_part, const Box& domain,
                                 Rng& rng) {
    ResNetPou net(domain.dim(), width, depth, n_part);
    init_trunk_box(net.trunk(), domain, rng);
    return net;
}

}  // namespace pounet
