/**
 * @file bench.hpp
 * @brief Benchmark targets, datasets, metrics, the scalar ResNet baseline,
 *        partition diagnostics and the frozen-partition convergence oracle.
 */
#pragma once

#include "pounet/domain.hpp"
#include "pounet/errors.hpp"
#include "pounet/linalg.hpp"
#include "pounet/model.hpp"
#include "pounet/optim.hpp"
#include "pounet/poly.hpp"
#include "pounet/pou.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pounet::bench {

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

/// TRI(x; p) = 2 |p x - floor(p x + 1/2)| - 1, a triangle wave with period 1/p.
inline double tri_wave(double x, unsigned p) {
    if (p < 1) throw std::invalid_argument("tri_wave: frequency must be >= 1");
    const double px = static_cast<double>(p) * x;
    return 2.0 * std::abs(px - std::floor(px + 0.5)) - 1.0;
}

/// sin(2 pi x1) on the x1 axis, sin(2 pi x2) on the x2 axis.
inline double sine_cross(std::span<const double> x) {
    if (x.size() != 2) throw DimensionError("sine_cross: expects a point in R^2");
    if (x[1] == 0.0) return std::sin(2.0 * std::numbers::pi * x[0]);
    if (x[0] == 0.0) return std::sin(2.0 * std::numbers::pi * x[1]);
    throw std::domain_error("sine_cross: point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) +
                            ") is not on the cross");
}

enum class TargetKind { sine_cross, tri_wave, tri_wave_squared, custom };

inline std::string_view to_string(TargetKind k) {
    switch (k) {
        case TargetKind::sine_cross: return "sine_cross";
        case TargetKind::tri_wave: return "tri_wave";
        case TargetKind::tri_wave_squared: return "tri_wave_squared";
        case TargetKind::custom: return "custom";
    }
    return "?";
}

/// Formula frequency giving 2^p linear pieces on [0,1].
inline unsigned wave_cycles(unsigned p) {
    if (p < 1 || p > 31) throw std::invalid_argument("wave_cycles: frequency parameter must lie in [1, 31]");
    return 1u << (p - 1);
}

struct TargetFunction {
    TargetKind kind = TargetKind::tri_wave;
    unsigned frequency = 1;
    Box domain = Box::cube(1, 0.0, 1.0);
    std::function<double(std::span<const double>)> custom;

    double operator()(std::span<const double> x) const {
        switch (kind) {
            case TargetKind::sine_cross: return sine_cross(x);
            case TargetKind::tri_wave: return tri_wave(x[0], wave_cycles(frequency));
            case TargetKind::tri_wave_squared: {
                const double t = tri_wave(x[0], wave_cycles(frequency));
                return t * t;
            }
            case TargetKind::custom:
                if (!custom) throw std::invalid_argument("TargetFunction: custom target without a callable");
                return custom(x);
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

enum class Sampling { grid, uniform };

/// Samples on both axes of the cross {x1 = 0} U {x2 = 0} in [-1, 1]^2, x1 axis
/// first. The grid mode is equispaced including the endpoints; the origin is
/// only kept once.
inline Dataset make_cross_dataset(std::size_t n_per_axis, Sampling mode = Sampling::grid, Rng* rng = nullptr) {
    if (n_per_axis < 2) throw std::invalid_argument("make_cross_dataset: need at least 2 samples per axis");
    if (mode == Sampling::uniform && rng == nullptr)
        throw std::invalid_argument("make_cross_dataset: uniform sampling needs an rng");
    std::vector<double> t(n_per_axis);
    std::vector<double> xs, ys;
    for (int axis = 0; axis < 2; ++axis) {
        for (std::size_t i = 0; i < n_per_axis; ++i) {
            t[i] = mode == Sampling::grid
                       ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n_per_axis - 1)
                       : std::uniform_real_distribution<double>(-1.0, 1.0)(*rng);
        }
        for (double v : t) {
            const double p[2] = {axis == 0 ? v : 0.0, axis == 0 ? 0.0 : v};
            xs.insert(xs.end(), p, p + 2);
            ys.push_back(sine_cross(p));
        }
    }
    return {DenseMatrix(ys.size(), 2, std::move(xs)), std::move(ys)};
}

/// n_data iid uniform samples on [0, 1] labelled TRI(x; p) or TRI(x; p)^2.
inline Dataset make_wave_dataset(unsigned p, std::size_t n_data, TargetKind kind, Rng& rng) {
    if (n_data < 1) throw std::invalid_argument("make_wave_dataset: need at least one sample");
    if (kind != TargetKind::tri_wave && kind != TargetKind::tri_wave_squared)
        throw std::invalid_argument("make_wave_dataset: kind must be tri_wave or tri_wave_squared");
    TargetFunction f{kind, p, Box::cube(1, 0.0, 1.0), {}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> xs(n_data), ys(n_data);
    for (std::size_t i = 0; i < n_data; ++i) {
        xs[i] = u(rng);
        ys[i] = f(std::span<const double>(&xs[i], 1));
    }
    return {DenseMatrix(n_data, 1, std::move(xs)), std::move(ys)};
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double rms(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size() || y.empty()) throw DimensionError("rms: lengths differ or are zero");
    return std::sqrt(sum_squared_residual(yhat, y) / static_cast<double>(y.size()));
}

inline double relative_l2(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size()) throw DimensionError("relative_l2: lengths differ");
    const double ny = norm2(y);
    if (ny == 0.0) throw std::domain_error("relative_l2: reference has zero norm");
    return std::sqrt(sum_squared_residual(yhat, y)) / ny;
}

// ---------------------------------------------------------------------------
// Scalar ResNet baseline
// ---------------------------------------------------------------------------

/// Same trunk as ResNetPou; the head is a single affine output with no softmax.
class ScalarResNet {
public:
    static constexpr std::string_view kArchitecture = "resnet_scalar";

    ScalarResNet() = default;
    ScalarResNet(std::size_t dim_input, std::size_t width, std::size_t depth)
        : trunk_(dim_input, width, depth), head_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width))) {}

    ResNetTrunk& trunk() noexcept { return trunk_; }
    const ResNetTrunk& trunk() const noexcept { return trunk_; }
    Eigen::VectorXd& head() noexcept { return head_; }
    double& head_bias() noexcept { return head_bias_; }

    ParamLayout layout() const {
        ParamLayout l{std::string(kArchitecture), {}};
        trunk_.append_layout(l.blocks);
        l.blocks.push_back({"out_weight", 1, trunk_.width()});
        l.blocks.push_back({"out_bias", 1, 1});
        return l;
    }

    ParamVector params() const {
        detail::ParamWriter w{std::string(kArchitecture)};
        trunk_.write(w);
        w.put("out_weight", Eigen::RowVectorXd(head_.transpose()));
        w.put("out_bias", Eigen::Matrix<double, 1, 1>(head_bias_));
        return std::move(w).finish();
    }

    void set_params(const ParamVector& p) {
        detail::ParamReader r(p, layout());
        trunk_.read(r);
        Eigen::RowVectorXd h(head_.size());
        r.get(h);
        head_ = h.transpose();
        Eigen::Matrix<double, 1, 1> b;
        r.get(b);
        head_bias_ = b(0, 0);
    }

    std::vector<double> predict(const DenseMatrix& xs) const {
        const auto cache = trunk_.forward(xs);
        return output(cache);
    }

    /// MSE and its gradient in one pass.
    std::pair<double, ParamVector> mse_and_grad(const Dataset& data) const {
        const auto cache = trunk_.forward(data.xs());
        const auto yhat = output(cache);
        const double n = static_cast<double>(data.size());
        Eigen::RowVectorXd dy(static_cast<Eigen::Index>(data.size()));
        double sse = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double r = yhat[i] - data.ys()[i];
            sse += r * r;
            dy(static_cast<Eigen::Index>(i)) = 2.0 * r / n;
        }
        detail::ParamWriter w{std::string(kArchitecture)};
        trunk_.backward(cache, head_ * dy, w);
        w.put("out_weight", Eigen::RowVectorXd((cache.hidden.back() * dy.transpose()).transpose()));
        w.put("out_bias", Eigen::Matrix<double, 1, 1>(dy.sum()));
        return {sse / n, std::move(w).finish()};
    }

private:
    std::vector<double> output(const ResNetTrunk::Cache& cache) const {
        const Eigen::RowVectorXd y = (head_.transpose() * cache.hidden.back()).array() + head_bias_;
        return {y.data(), y.data() + y.size()};
    }

    ResNetTrunk trunk_;
    Eigen::VectorXd head_;
    double head_bias_ = 0.0;
};

struct BaselineResult {
    ScalarResNet model;
    TrainReport report;
};

/// Glorot-uniform weights and zero biases throughout, full-batch Adam on the MSE.
/// Returns the parameters with the lowest training loss seen.
inline BaselineResult baseline_resnet_fit(const Dataset& data, std::size_t width, std::size_t depth,
                                          std::size_t epochs, double lr, Rng& rng) {
    const auto start = std::chrono::steady_clock::now();
    ScalarResNet net(data.dim(), width, depth);
    init_trunk_glorot(net.trunk(), rng);
    const double a = std::sqrt(6.0 / static_cast<double>(width + 1));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index i = 0; i < net.head().size(); ++i) net.head()(i) = u(rng);

    const double y_norm = norm2(data.ys());
    const double n = static_cast<double>(data.size());
    TrainReport report;
    AdamState adam(net.params().size(), lr);
    ParamVector best = net.params();
    double best_mse = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        auto [mse, grad] = net.mse_and_grad(data);
        if (!std::isfinite(mse)) throw TrainingError("baseline diverged: non-finite loss", epoch);
        report.loss_trace.push_back(mse);
        report.lambda_trace.push_back(0.0);
        report.rel_l2_trace.push_back(std::sqrt(mse * n) / y_norm);
        if (mse < best_mse) {
            best_mse = mse;
            best = net.params();
            report.best_epoch = epoch;
        }
        auto [next_state, next_params] = adam_step(std::move(adam), net.params(), grad);
        adam = std::move(next_state);
        try {
            net.set_params(next_params);
        } catch (const std::exception& e) {
            throw TrainingError(std::string("baseline diverged: ") + e.what(), epoch);
        }
    }
    // The state after the final step is a candidate too.
    const double last = net.mse_and_grad(data).first;
    if (std::isfinite(last) && last < best_mse) {
        best_mse = last;
        best = net.params();
        report.best_epoch = epochs;
    }
    net.set_params(best);
    report.best_loss = best_mse;
    report.final_rel_l2 = relative_l2(net.predict(data.xs()), data.ys());
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(net), std::move(report)};
}

// ---------------------------------------------------------------------------
// Partition diagnostics
// ---------------------------------------------------------------------------

struct PartitionDiagnostics {
    std::vector<double> diameters;  ///< per partition, over the effective support
    std::vector<std::size_t> collapsed;
    std::size_t collapsed_count = 0;
    double tau = 1e-3;
};

inline constexpr double kDefaultSupportThreshold = 1e-3;

/// Effective support of partition a: sample points with phi_a > tau.
/// Diameter is the largest pairwise distance in that set.
inline PartitionDiagnostics partition_diagnostics(const DenseMatrix& partition_evals, const DenseMatrix& xs,
                                                  double tau = kDefaultSupportThreshold) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("partition_diagnostics: tau must lie in (0, 1)");
    if (partition_evals.rows() != xs.rows()) throw DimensionError("partition_diagnostics: row count mismatch");
    PartitionDiagnostics out;
    out.tau = tau;
    const std::size_t d = xs.cols();
    std::vector<std::size_t> support;
    for (std::size_t a = 0; a < partition_evals.cols(); ++a) {
        support.clear();
        for (std::size_t i = 0; i < xs.rows(); ++i)
            if (partition_evals(i, a) > tau) support.push_back(i);
        double diam = 0.0;
        if (d == 1) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (auto i : support) {
                lo = std::min(lo, xs(i, 0));
                hi = std::max(hi, xs(i, 0));
            }
            if (support.size() > 1) diam = hi - lo;
        } else {
            for (std::size_t s = 0; s < support.size(); ++s)
                for (std::size_t t = s + 1; t < support.size(); ++t) {
                    double d2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        const double diff = xs(support[s], j) - xs(support[t], j);
                        d2 += diff * diff;
                    }
                    diam = std::max(diam, d2);
                }
            diam = std::sqrt(diam);
        }
        out.diameters.push_back(diam);
    }
    out.collapsed = detect_collapse(partition_evals, tau);
    out.collapsed_count = out.collapsed.size();
    return out;
}

// ---------------------------------------------------------------------------
// Frozen-partition convergence oracle
// ---------------------------------------------------------------------------

struct ScalingPoint {
    std::size_t n_part = 0;
    double rms = 0.0;
};

/// Least-squares slope of log(rms) against log(n_part).
inline double loglog_slope(const std::vector<ScalingPoint>& pts) {
    if (pts.size() < 2) throw std::invalid_argument("loglog_slope: need at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& p : pts) {
        const double x = std::log(static_cast<double>(p.n_part));
        const double y = std::log(p.rms);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline constexpr std::size_t kOracleGridPoints = 2001;

/// For each N_part: uniform indicator cells on [0, 1], degree-m basis, exact
/// lambda = 0 fit on an equispaced grid, RMS of the residual. No training.
inline std::vector<ScalingPoint> theorem1_scaling_oracle(unsigned m, const std::vector<std::size_t>& n_part_list,
                                                         const std::function<double(double)>& target,
                                                         std::size_t n_points = kOracleGridPoints) {
    if (n_points < 2) throw std::invalid_argument("theorem1_scaling_oracle: need at least two grid points");
    std::vector<double> xs(n_points), ys(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        xs[i] = static_cast<double>(i) / static_cast<double>(n_points - 1);
        ys[i] = target(xs[i]);
    }
    const Dataset data(DenseMatrix(n_points, 1, xs), ys);
    const std::vector<double> lo{0.0}, hi{1.0};
    std::vector<ScalingPoint> out;
    for (std::size_t np : n_part_list) {
        IndicatorPartition part(np, 0.0, 1.0);
        PouModel<IndicatorPartition> model(part, MonomialBasis::centered_on_box(lo, hi, m));
        const auto a = design_matrix(model.net(), model.basis(), data.xs());
        model.set_coeffs(std::span<const double>(solve_least_squares(a, data.ys(), 0.0)));
        out.push_back({np, rms(predict(model, data.xs()), data.ys())});
    }
    return out;
}

}  // namespace pounet::bench
