#pragma once

#include "pounet/errors.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pounet {

/// Every stochastic routine takes one of these by reference; seeding it is
/// the only source of run-to-run variation.
using Rng = std::mt19937_64;

/// Axis-aligned hyper-rectangle [lower_j, upper_j].
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    Box() = default;
    Box(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size() || lower.empty())
            throw DimensionError("Box: bounds must be non-empty and of equal dimension");
        for (std::size_t j = 0; j < lower.size(); ++j)
            if (!(lower[j] < upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j]))
                throw std::invalid_argument("Box: need finite lower < upper in every coordinate");
    }

    static Box cube(std::size_t d, double lo, double hi) { return {std::vector<double>(d, lo), std::vector<double>(d, hi)}; }

    std::size_t dim() const noexcept { return lower.size(); }

    bool contains(const double* x) const {
        for (std::size_t j = 0; j < dim(); ++j)
            if (x[j] < lower[j] || x[j] > upper[j]) return false;
        return true;
    }

    std::vector<double> sample(Rng& rng) const {
        std::vector<double> x(dim());
        for (std::size_t j = 0; j < dim(); ++j) x[j] = std::uniform_real_distribution<double>(lower[j], upper[j])(rng);
        return x;
    }

    friend bool operator==(const Box&, const Box&) = default;
};

}  // namespace pounet
