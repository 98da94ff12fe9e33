// Test-only reference computations. Nothing here calls into the solver or
// basis code paths it is used to check.
#pragma once

#include "pounet/linalg.hpp"
#include "pounet/pou.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using pounet::DenseMatrix;
using pounet::ParamVector;

/// Gaussian elimination with partial pivoting on (A^T A + lambda I) c = A^T y.
inline std::vector<double> normal_equations(const DenseMatrix& a, const std::vector<double>& y, double lambda) {
    const std::size_t n = a.rows(), k = a.cols();
    std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += a(i, r) * a(i, c);
            m[r][c] = s + (r == c ? lambda : 0.0);
        }
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a(i, r) * y[i];
        m[r][k] = s;
    }
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (std::size_t r = col + 1; r < k; ++r) {
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> x(k);
    for (std::size_t r = k; r-- > 0;) {
        double s = m[r][k];
        for (std::size_t c = r + 1; c < k; ++c) s -= m[r][c] * x[c];
        x[r] = s / m[r][r];
    }
    return x;
}

/// All multi-indices in {0..m}^d with |k| <= m, in no particular order.
inline std::vector<std::vector<unsigned>> brute_multi_indices(std::size_t d, unsigned m) {
    std::vector<std::vector<unsigned>> out;
    std::vector<unsigned> k(d, 0);
    while (true) {
        unsigned total = 0;
        for (auto v : k) total += v;
        if (total <= m) out.push_back(k);
        std::size_t j = 0;
        while (j < d && ++k[j] > m) k[j++] = 0;
        if (j == d) break;
    }
    return out;
}

inline double monomial(const std::vector<unsigned>& k, const std::vector<double>& x, const std::vector<double>& center,
                       const std::vector<double>& scale) {
    double v = 1.0;
    for (std::size_t j = 0; j < k.size(); ++j) v *= std::pow((x[j] - center[j]) / scale[j], static_cast<int>(k[j]));
    return v;
}

/// Central differences of f over every entry of p.
inline std::vector<double> central_difference(const std::function<double(const ParamVector&)>& f, ParamVector p,
                                              double h = 1e-6) {
    std::vector<double> g(p.values.size());
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        const double orig = p.values[i];
        p.values[i] = orig + h;
        const double fp = f(p);
        p.values[i] = orig - h;
        const double fm = f(p);
        p.values[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// |a - b| / max(|b|, floor), measured in the 2-norm.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1e-8) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), floor);
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

/// Perturbs every parameter by N(0, sd) so ReLU kinks and heads are generic.
inline void jitter(ParamVector& p, std::mt19937_64& rng, double sd) {
    std::normal_distribution<double> n(0.0, sd);
    for (auto& v : p.values) v += n(rng);
}

}  // namespace oracle
