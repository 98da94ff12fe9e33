#include "oracles.hpp"
#include "pounet/bench.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <set>

using namespace pounet;
using namespace pounet::bench;

namespace {

double sin2pi(double x) { return std::sin(2.0 * std::numbers::pi * x); }

// Fits each cell of a uniform split of the grid separately through the normal
// equations with raw monomials in the local coordinate, then returns the RMS.
double per_cell_rms(unsigned m, std::size_t n_part, std::size_t n_points) {
    std::vector<std::vector<double>> cx(n_part), cy(n_part);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n_points - 1);
        const auto cell = std::min<std::size_t>(static_cast<std::size_t>(x * static_cast<double>(n_part)), n_part - 1);
        cx[cell].push_back(x);
        cy[cell].push_back(sin2pi(x));
    }
    double sse = 0.0;
    for (std::size_t a = 0; a < n_part; ++a) {
        const double mid = (static_cast<double>(a) + 0.5) / static_cast<double>(n_part);
        DenseMatrix v(cx[a].size(), m + 1);
        for (std::size_t i = 0; i < cx[a].size(); ++i)
            for (unsigned k = 0; k <= m; ++k) v(i, k) = std::pow((cx[a][i] - mid) * static_cast<double>(n_part), k);
        const auto c = oracle::normal_equations(v, cy[a], 0.0);
        for (std::size_t i = 0; i < cx[a].size(); ++i) {
            double f = 0.0;
            for (unsigned k = 0; k <= m; ++k) f += c[k] * v(i, k);
            sse += (f - cy[a][i]) * (f - cy[a][i]);
        }
    }
    return std::sqrt(sse / static_cast<double>(n_points));
}

}  // namespace

TEST(TriWave, UnitValues) {
    EXPECT_EQ(tri_wave(0.0, 1), -1.0);
    EXPECT_EQ(tri_wave(0.5, 1), 0.0);
    EXPECT_EQ(tri_wave(0.25, 1), -0.5);
    EXPECT_THROW(tri_wave(0.1, 0), std::invalid_argument);
}

TEST(TriWave, PeriodicAndBounded) {
    std::mt19937_64 rng(1);
    for (unsigned p = 1; p <= 5; ++p)
        for (double x : oracle::random_vector(200, rng, 0.0, 1.0)) {
            const double v = tri_wave(x, p);
            EXPECT_GE(v, -1.0);
            EXPECT_LE(v, 1.0);
            EXPECT_NEAR(tri_wave(x + 1.0 / p, p), v, 1e-12);
        }
}

TEST(TriWave, PieceCountOnUnitInterval) {
    // Count slope sign changes on a fine grid; 2^p linear pieces means 2^p - 1 kinks.
    for (unsigned p = 1; p <= 4; ++p) {
        const unsigned freq = wave_cycles(p);
        const std::size_t n = 4096 + 1;
        int kinks = 0;
        double prev_slope = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const double x0 = static_cast<double>(i - 1) / (n - 1), x1 = static_cast<double>(i) / (n - 1);
            const double s = tri_wave(x1, freq) - tri_wave(x0, freq);
            if (i > 1 && (s > 0) != (prev_slope > 0)) ++kinks;
            prev_slope = s;
        }
        EXPECT_EQ(kinks, static_cast<int>(freq) * 2 - 1) << p;
    }
}

TEST(TriWave, DatasetLabelsUseTwoToThePPieces) {
    Rng a(5);
    const auto d = make_wave_dataset(3, 200, TargetKind::tri_wave, a);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double x = d.xs()(i, 0);
        EXPECT_EQ(d.ys()[i], 2.0 * std::abs(4.0 * x - std::floor(4.0 * x + 0.5)) - 1.0);
    }
    EXPECT_EQ(wave_cycles(1), 1u);
    EXPECT_EQ(wave_cycles(5), 16u);
    EXPECT_THROW(wave_cycles(0), std::invalid_argument);
}

TEST(SineCross, Values) {
    EXPECT_NEAR(sine_cross(std::vector<double>{0.25, 0.0}), 1.0, 1e-15);
    EXPECT_EQ(sine_cross(std::vector<double>{0.0, 0.0}), 0.0);
    EXPECT_NEAR(sine_cross(std::vector<double>{0.0, -0.25}), -1.0, 1e-15);
    EXPECT_THROW(sine_cross(std::vector<double>{0.1, 0.1}), std::domain_error);
    EXPECT_THROW(sine_cross(std::vector<double>{0.1}), DimensionError);
}

TEST(CrossDataset, PaperSize) {
    const auto d = make_cross_dataset(501);
    EXPECT_EQ(d.size(), 1001u);
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_TRUE(d.xs()(i, 0) == 0.0 || d.xs()(i, 1) == 0.0);
}

TEST(CrossDataset, TinyHasNoDuplicates) {
    const auto d = make_cross_dataset(2);
    EXPECT_LE(d.size(), 4u);
    std::set<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < d.size(); ++i) rows.insert({d.xs()(i, 0), d.xs()(i, 1)});
    EXPECT_EQ(rows.size(), d.size());
}

TEST(CrossDataset, UniformModeOnManifold) {
    Rng rng(2);
    const auto d = make_cross_dataset(50, Sampling::uniform, &rng);
    EXPECT_LE(d.size(), 100u);
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_TRUE(d.xs()(i, 0) == 0.0 || d.xs()(i, 1) == 0.0);
        EXPECT_EQ(d.ys()[i], sine_cross(d.xs().row(i)));
    }
    EXPECT_THROW(make_cross_dataset(50, Sampling::uniform), std::invalid_argument);
    EXPECT_THROW(make_cross_dataset(1), std::invalid_argument);
}

TEST(WaveDataset, DeterministicAndInRange) {
    Rng a(3), b(3);
    const auto d1 = make_wave_dataset(3, 500, TargetKind::tri_wave, a);
    const auto d2 = make_wave_dataset(3, 500, TargetKind::tri_wave, b);
    EXPECT_EQ(d1.xs(), d2.xs());
    EXPECT_EQ(d1.ys(), d2.ys());
    for (double y : d1.ys()) {
        EXPECT_GE(y, -1.0);
        EXPECT_LE(y, 1.0);
    }
    Rng c(4);
    const auto sq = make_wave_dataset(2, 500, TargetKind::tri_wave_squared, c);
    for (std::size_t i = 0; i < sq.size(); ++i) {
        EXPECT_GE(sq.ys()[i], 0.0);
        EXPECT_LE(sq.ys()[i], 1.0);
        EXPECT_GE(sq.xs()(i, 0), 0.0);
        EXPECT_LE(sq.xs()(i, 0), 1.0);
    }
}

TEST(Metrics, Values) {
    const std::vector<double> y{1.0, -2.0, 3.0, 0.5};
    EXPECT_EQ(relative_l2(y, y), 0.0);
    EXPECT_EQ(rms(y, y), 0.0);
    EXPECT_DOUBLE_EQ(relative_l2(std::vector<double>(4, 0.0), y), 1.0);
    std::vector<double> shifted = y;
    for (auto& v : shifted) v += 0.3;
    EXPECT_NEAR(rms(shifted, y), 0.3, 1e-15);
    EXPECT_THROW(relative_l2(y, std::vector<double>(4, 0.0)), std::domain_error);
    EXPECT_THROW(rms(y, std::vector<double>(3, 0.0)), DimensionError);
}

TEST(Baseline, FitsConstantTarget) {
    Rng data_rng(5);
    std::vector<double> xs(200);
    for (auto& x : xs) x = std::uniform_real_distribution<double>(0.0, 1.0)(data_rng);
    const Dataset data(DenseMatrix(200, 1, xs), std::vector<double>(200, 0.7));
    Rng rng(6);
    const auto r = baseline_resnet_fit(data, 32, 8, 500, 1e-3, rng);
    EXPECT_LT(r.report.final_rel_l2, 1e-2);
    EXPECT_EQ(r.report.loss_trace.size(), 500u);
}

TEST(Baseline, Deterministic) {
    Rng d(7);
    const auto data = make_wave_dataset(2, 300, TargetKind::tri_wave, d);
    Rng a(8), b(8);
    const auto r1 = baseline_resnet_fit(data, 16, 8, 30, 1e-3, a);
    const auto r2 = baseline_resnet_fit(data, 16, 8, 30, 1e-3, b);
    EXPECT_EQ(r1.report.loss_trace, r2.report.loss_trace);
    EXPECT_EQ(r1.model.params(), r2.model.params());
}

TEST(Baseline, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(9);
    Rng init(10);
    ScalarResNet net(2, 5, 3);
    init_trunk_box(net.trunk(), Box::cube(2, 0.0, 1.0), init);
    auto p = net.params();
    oracle::jitter(p, rng, 0.5);
    net.set_params(p);
    const Dataset data(oracle::random_matrix(20, 2, rng, 0.0, 1.0), oracle::random_vector(20, rng));
    const auto g = net.mse_and_grad(data).second;
    const auto fd = oracle::central_difference(
        [&](const ParamVector& q) {
            auto copy = net;
            copy.set_params(q);
            return copy.mse_and_grad(data).first;
        },
        p);
    EXPECT_LT(oracle::relative_error(g.values, fd), 1e-5);
}

TEST(ScalingOracle, PolynomialIsExact) {
    for (unsigned m = 0; m <= 3; ++m) {
        const auto pts = theorem1_scaling_oracle(m, {1, 4, 8, 16, 32}, [m](double x) { return std::pow(x - 0.3, m) + 2.0; });
        for (const auto& p : pts) EXPECT_LE(p.rms, 1e-10) << m << " " << p.n_part;
    }
}

TEST(ScalingOracle, MatchesPerCellOracle) {
    for (unsigned m : {1u, 2u})
        for (const auto& p : theorem1_scaling_oracle(m, {4, 8, 16}, sin2pi, 801))
            EXPECT_NEAR(p.rms, per_cell_rms(m, p.n_part, 801), 1e-9 * p.rms + 1e-14);
}

TEST(ScalingOracle, QuarterPerDoublingForLinear) {
    const auto pts = theorem1_scaling_oracle(1, {4, 8, 16, 32}, sin2pi);
    for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_NEAR(pts[i].rms / pts[i - 1].rms, 0.25, 0.05);
}

TEST(ScalingOracle, SlopesFollowDegree) {
    const std::vector<std::size_t> np{4, 8, 16, 32};
    const double s1 = loglog_slope(theorem1_scaling_oracle(1, np, sin2pi));
    const double s2 = loglog_slope(theorem1_scaling_oracle(2, np, sin2pi));
    EXPECT_NEAR(s1, -2.0, 0.5);
    EXPECT_NEAR(s2, -3.0, 0.5);
    EXPECT_LT(s2, s1);
}

TEST(LoglogSlope, ExactPowerLaw) {
    EXPECT_NEAR(loglog_slope({{2, 1.0 / 8}, {4, 1.0 / 64}, {8, 1.0 / 512}}), -3.0, 1e-12);
    EXPECT_THROW(loglog_slope({{2, 1.0}}), std::invalid_argument);
}

TEST(PartitionDiagnostics, IndicatorQuarters) {
    const std::size_t n = 1001;
    DenseMatrix xs(n, 1);
    for (std::size_t i = 0; i < n; ++i) xs(i, 0) = static_cast<double>(i) / (n - 1);
    const auto diag = partition_diagnostics(eval_partitions(IndicatorPartition(4, 0.0, 1.0), xs), xs);
    ASSERT_EQ(diag.diameters.size(), 4u);
    for (double dm : diag.diameters) EXPECT_NEAR(dm, 0.25, 2.0 / (n - 1));
    EXPECT_EQ(diag.collapsed_count, 0u);
}

TEST(PartitionDiagnostics, SinglePointSupportAndPairwise) {
    const DenseMatrix xs{{0.0, 0.0}, {3.0, 4.0}, {1.0, 1.0}};
    const DenseMatrix phi{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
    const auto diag = partition_diagnostics(phi, xs);
    EXPECT_NEAR(diag.diameters[0], std::sqrt(2.0), 1e-15);
    EXPECT_EQ(diag.diameters[1], 0.0);
    EXPECT_THROW(partition_diagnostics(phi, xs, 0.0), std::invalid_argument);
}

TEST(PartitionDiagnostics, UniformPartitionNotCollapsed) {
    DenseMatrix phi(6, 3);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t a = 0; a < 3; ++a) phi(i, a) = 1.0 / 3.0;
    DenseMatrix xs(6, 1);
    EXPECT_EQ(partition_diagnostics(phi, xs).collapsed_count, 0u);
}
