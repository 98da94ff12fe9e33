/**
 * @file optim.hpp
 * @brief Adam, regularized LSGD and its two-phase wrapper.
 *
 * One LSGD epoch:
 *   1. c <- argmin |A(xi) c - y|^2 + lambda |c|^2        (exact solve)
 *   2. xi <- Adam step on the mean squared error at that c
 *   3. if the best data loss has not improved for n_stag epochs, lambda <- rho * lambda
 * After the last epoch c is re-solved with lambda = 0.
 *
 * Losses in reports are mean squared errors; the gradient handed to Adam is
 * that of the mean as well, so learning rates do not depend on N_data.
 */
#pragma once

#include "pounet/errors.hpp"
#include "pounet/linalg.hpp"
#include "pounet/model.hpp"
#include "pounet/pou.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pounet {

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::size_t step_count = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n_params, double learning_rate)
        : first_moment(n_params, 0.0), second_moment(n_params, 0.0), lr(learning_rate) {}

    friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// Bias-corrected Adam update. Pure: returns the advanced state and new parameters.
inline std::pair<AdamState, ParamVector> adam_step(AdamState state, ParamVector params, const ParamVector& grad) {
    const std::size_t n = params.values.size();
    if (grad.values.size() != n || state.first_moment.size() != n || state.second_moment.size() != n)
        throw DimensionError("adam_step: parameter, gradient and moment lengths differ");
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(grad.values[i]))
            throw NonFiniteError("adam_step: non-finite gradient at index " + std::to_string(i));

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.values[i];
        double& m = state.first_moment[i];
        double& v = state.second_moment[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        params.values[i] -= state.lr * (m / bc1) / (std::sqrt(v / bc2) + state.eps);
    }
    return {std::move(state), std::move(params)};
}

struct LsgdConfig {
    std::size_t n_epoch = 100;
    double lambda = 0.0;
    double rho = 0.0;
    std::size_t n_stag = 1;
    double lr = 1e-3;
    double rcond = kSvdTruncation;  ///< singular-value cutoff of the lambda = 0 solves

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("LsgdConfig: lambda must be >= 0");
        if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("LsgdConfig: rho must lie in [0, 1]");
        if (n_stag < 1) throw std::invalid_argument("LsgdConfig: n_stag must be >= 1");
        if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("LsgdConfig: lr must be >= 0");
        if (!(rcond >= 0.0 && rcond < 1.0)) throw std::invalid_argument("LsgdConfig: rcond must lie in [0, 1)");
    }
};

/// Relative improvement below which an epoch counts as stagnant.
inline constexpr double kStagnationTolerance = 1e-12;

struct TrainReport {
    std::vector<double> loss_trace;    ///< post-solve MSE per epoch
    std::vector<double> lambda_trace;  ///< lambda used in that epoch's solve
    std::vector<double> rel_l2_trace;
    std::vector<double> coeff_norm_trace;  ///< Frobenius norm of that epoch's c
    /// Index into loss_trace of the returned model, or loss_trace.size() when
    /// the state after the last gradient step won.
    std::size_t best_epoch = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    double final_rel_l2 = std::numeric_limits<double>::infinity();
    /// Two-phase runs: number of phase-1 epochs at the front of the traces.
    std::optional<std::size_t> phase_boundary;
    double wall_time = 0.0;
};

template <PartitionNetwork Net>
struct LsgdResult {
    PouModel<Net> best;         ///< lowest training loss seen, c re-solved with lambda = 0
    PouModel<Net> final_state;  ///< xi after the last epoch, c re-solved with lambda = 0
    TrainReport report;
};

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

namespace detail {

template <PartitionNetwork Net>
struct SolveOutcome {
    typename Net::Forward fwd;
    DenseMatrix q;
    std::vector<double> residual;
    double sse = 0.0;
};

// Solves for c at the network's current xi and installs it in the model.
template <PartitionNetwork Net>
SolveOutcome<Net> solve_coeffs(PouModel<Net>& model, const Dataset& data, const DenseMatrix& basis_vals,
                               double lambda, double rcond, std::size_t epoch) {
    SolveOutcome<Net> out{model.net().forward(data.xs()), {}, {}, 0.0};
    std::vector<double> c;
    try {
        c = solve_least_squares(assemble_design(out.fwd.phi, basis_vals), data.ys(), lambda, rcond);
    } catch (const std::exception& e) {
        throw TrainingError(std::string("least-squares solve failed: ") + e.what(), epoch);
    }
    model.set_coeffs(std::span<const double>(c));
    out.q = local_values(basis_vals, model.coeffs());
    out.residual = blend(out.fwd.phi, out.q);
    for (std::size_t i = 0; i < out.residual.size(); ++i) out.residual[i] -= data.ys()[i];
    for (double r : out.residual) out.sse += r * r;
    if (!std::isfinite(out.sse)) throw TrainingError("non-finite loss", epoch);
    return out;
}

}  // namespace detail

template <PartitionNetwork Net>
LsgdResult<Net> lsgd(PouModel<Net> model, const Dataset& data, const LsgdConfig& cfg) {
    cfg.validate();
    if (data.dim() != model.basis().dim_input()) throw DimensionError("lsgd: data dimension does not match model");
    const auto start = std::chrono::steady_clock::now();
    const double n = static_cast<double>(data.size());
    const double y_norm = norm2(data.ys());
    const DenseMatrix basis_vals = eval_basis_batch(model.basis(), data.xs());

    TrainReport report;
    AdamState adam(model.net().params().size(), cfg.lr);
    double lambda = cfg.lambda;
    double best_sse = std::numeric_limits<double>::infinity();
    ParamVector best_params = model.net().params();
    double stag_ref = std::numeric_limits<double>::infinity();
    std::size_t stagnant = 0;

    for (std::size_t epoch = 0; epoch < cfg.n_epoch; ++epoch) {
        auto s = detail::solve_coeffs(model, data, basis_vals, lambda, cfg.rcond, epoch);
        report.loss_trace.push_back(s.sse / n);
        report.lambda_trace.push_back(lambda);
        report.rel_l2_trace.push_back(y_norm > 0.0 ? std::sqrt(s.sse) / y_norm : std::sqrt(s.sse));
        report.coeff_norm_trace.push_back(model.coeffs().frobenius_norm());
        if (s.sse < best_sse) {
            best_sse = s.sse;
            best_params = model.net().params();
            report.best_epoch = epoch;
        }

        ParamVector grad = loss_grad_from(model.net(), s.fwd, s.q, s.residual);
        for (double& g : grad.values) g /= n;
        try {
            auto [next_state, next_params] = adam_step(std::move(adam), model.net().params(), grad);
            adam = std::move(next_state);
            model.net().set_params(next_params);
        } catch (const std::exception& e) {
            throw TrainingError(std::string("gradient step failed: ") + e.what(), epoch);
        }

        if (s.sse < stag_ref * (1.0 - kStagnationTolerance)) {
            stag_ref = s.sse;
            stagnant = 0;
        } else if (++stagnant >= cfg.n_stag) {
            lambda *= cfg.rho;
            stagnant = 0;
        }
    }

    PouModel<Net> final_state = model;
    const double final_sse = detail::solve_coeffs(final_state, data, basis_vals, 0.0, cfg.rcond, cfg.n_epoch).sse;

    PouModel<Net> best = model;
    double best_final_sse = final_sse;
    if (cfg.n_epoch == 0) {
        report.best_epoch = 0;
    } else {
        best.net().set_params(best_params);
        const double sse = detail::solve_coeffs(best, data, basis_vals, 0.0, cfg.rcond, report.best_epoch).sse;
        if (final_sse < sse) {
            best = final_state;
            report.best_epoch = cfg.n_epoch;
        } else {
            best_final_sse = sse;
        }
    }
    report.best_loss = best_final_sse / n;
    report.final_rel_l2 = y_norm > 0.0 ? std::sqrt(best_final_sse) / y_norm : std::sqrt(best_final_sse);
    report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {std::move(best), std::move(final_state), std::move(report)};
}

/// Phase 1 runs `pre` as given; phase 2 starts from phase 1's last state and
/// runs `main` with lambda = 0 and annealing disabled.
template <PartitionNetwork Net>
LsgdResult<Net> two_phase_lsgd(PouModel<Net> model, const Dataset& data, const LsgdConfig& pre,
                               LsgdConfig main) {
    main.lambda = 0.0;
    main.rho = 0.0;
    main.n_stag = std::max<std::size_t>(main.n_epoch, 1);
    if (pre.n_epoch == 0) {
        auto r = lsgd(std::move(model), data, main);
        r.report.phase_boundary = 0;
        return r;
    }

    auto p1 = lsgd(std::move(model), data, pre);
    auto p2 = lsgd(p1.final_state, data, main);

    TrainReport rep;
    const std::size_t boundary = p1.report.loss_trace.size();
    auto cat = [](std::vector<double> a, const std::vector<double>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    rep.loss_trace = cat(p1.report.loss_trace, p2.report.loss_trace);
    rep.lambda_trace = cat(p1.report.lambda_trace, p2.report.lambda_trace);
    rep.rel_l2_trace = cat(p1.report.rel_l2_trace, p2.report.rel_l2_trace);
    rep.coeff_norm_trace = cat(p1.report.coeff_norm_trace, p2.report.coeff_norm_trace);
    rep.phase_boundary = boundary;
    rep.wall_time = p1.report.wall_time + p2.report.wall_time;

    // Phase-1 "best" refers to its own sentinel when the post-loop state won;
    // that state is exactly phase 2's entry point.
    const bool phase1_wins = p1.report.best_loss < p2.report.best_loss;
    const TrainReport& w = phase1_wins ? p1.report : p2.report;
    rep.best_epoch = phase1_wins ? std::min(p1.report.best_epoch, boundary) : boundary + p2.report.best_epoch;
    rep.best_loss = w.best_loss;
    rep.final_rel_l2 = w.final_rel_l2;
    return {phase1_wins ? std::move(p1.best) : std::move(p2.best), std::move(p2.final_state), std::move(rep)};
}

/// Partitions whose largest value over the sample stays below tau.
inline std::vector<std::size_t> detect_collapse(const DenseMatrix& partition_evals, double tau) {
    if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("detect_collapse: tau must lie in [0, 1)");
    std::vector<std::size_t> collapsed;
    for (std::size_t a = 0; a < partition_evals.cols(); ++a) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < partition_evals.rows(); ++i) mx = std::max(mx, partition_evals(i, a));
        if (mx < tau) collapsed.push_back(a);
    }
    return collapsed;
}

}  // namespace pounet
