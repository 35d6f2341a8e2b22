#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "maguq/core.hpp"

namespace maguq::uq {

inline constexpr double kXiHalfWidth = 1.7320508075688772;  // sqrt(3)

struct Rule1d {
    Eigen::VectorXd nodes;    // on [-sqrt(3), sqrt(3)]
    Eigen::VectorXd weights;  // sum to 1 (uniform density folded in)
};

/// Degree-p Gauss-Legendre rule mapped to the unit-variance uniform support.
/// The p+1 point rule integrates polynomials up to degree 2p+1 against the
/// uniform density exactly.
inline Rule1d gauss_legendre_1d(int degree) {
    if (degree < 0) throw ConfigError("gauss-legendre: degree must be nonnegative");
    const int n = degree + 1;
    Rule1d rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);

    // Newton iteration on P_n with the Chebyshev-like initial guess;
    // standard construction on [-1, 1].
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            if (n == 1) p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pm = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes(i) = -x * kXiHalfWidth;
        rule.nodes(n - 1 - i) = x * kXiHalfWidth;
        rule.weights(i) = 0.5 * w;  // /2: fold in the uniform density
        rule.weights(n - 1 - i) = 0.5 * w;
    }
    if (n % 2 == 1) rule.nodes(n / 2) = 0.0;
    return rule;
}

/// Full tensor Gauss-Legendre grid over Xi = [-sqrt(3), sqrt(3)]^M. Node k's
/// per-dimension digit is k expanded in base (p+1), dimension 0 most
/// significant. M = 0 yields the single empty node with weight 1.
struct CollocationGrid {
    int dimension = 0;
    int points_per_dim = 1;
    Eigen::MatrixXd nodes;    // N_c x M
    Eigen::VectorXd weights;  // N_c, sum to 1
    Rule1d rule;

    std::int64_t size() const { return nodes.rows(); }
};

inline CollocationGrid tensor_grid(int degree, int dimension, std::int64_t node_budget = 100000) {
    if (dimension < 0) throw ConfigError("tensor grid: dimension must be nonnegative");
    const Rule1d rule = gauss_legendre_1d(degree);
    const int ppd = static_cast<int>(rule.nodes.size());

    double count = 1.0;
    for (int d = 0; d < dimension; ++d) {
        count *= ppd;
        if (count > static_cast<double>(node_budget))
            throw BudgetError("tensor grid: " + std::to_string(ppd) + "^" +
                              std::to_string(dimension) + " collocation nodes exceed the budget of " +
                              std::to_string(node_budget));
    }
    const std::int64_t n_c = static_cast<std::int64_t>(count);

    CollocationGrid grid;
    grid.dimension = dimension;
    grid.points_per_dim = ppd;
    grid.rule = rule;
    grid.nodes.resize(n_c, dimension);
    grid.weights.resize(n_c);
    for (std::int64_t k = 0; k < n_c; ++k) {
        double w = 1.0;
        std::int64_t rest = k;
        for (int d = dimension - 1; d >= 0; --d) {
            const int digit = static_cast<int>(rest % ppd);
            rest /= ppd;
            grid.nodes(k, d) = rule.nodes(digit);
            w *= rule.weights(digit);
        }
        grid.weights(k) = w;
    }
    return grid;
}

/// Tensor-product Lagrange interpolation through the grid nodes (barycentric
/// per dimension). Exact at the nodes and for per-dimension degree <= p data.
inline double interpolate_surrogate(const CollocationGrid& grid, const Eigen::VectorXd& values,
                                    const Eigen::VectorXd& xi) {
    if (values.size() != grid.size())
        throw ConfigError("surrogate: nodal value count does not match the grid");
    if (xi.size() != grid.dimension)
        throw ConfigError("surrogate: query dimension does not match the grid");
    const int ppd = grid.points_per_dim;
    const auto& x = grid.rule.nodes;

    // Barycentric weights of the 1D node set (same in every dimension).
    Eigen::VectorXd bary(ppd);
    for (int i = 0; i < ppd; ++i) {
        double w = 1.0;
        for (int j = 0; j < ppd; ++j)
            if (j != i) w /= (x(i) - x(j));
        bary(i) = w;
    }

    // Per-dimension basis values at the query point.
    Eigen::MatrixXd basis(grid.dimension, ppd);
    for (int d = 0; d < grid.dimension; ++d) {
        int exact = -1;
        for (int i = 0; i < ppd; ++i)
            if (xi(d) == x(i)) exact = i;
        if (exact >= 0) {
            basis.row(d).setZero();
            basis(d, exact) = 1.0;
            continue;
        }
        double denom = 0.0;
        for (int i = 0; i < ppd; ++i) {
            const double t = bary(i) / (xi(d) - x(i));
            basis(d, i) = t;
            denom += t;
        }
        basis.row(d) /= denom;
    }

    double acc = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k) {
        double phi = 1.0;
        std::int64_t rest = k;
        for (int d = grid.dimension - 1; d >= 0; --d) {
            phi *= basis(d, static_cast<int>(rest % ppd));
            rest /= ppd;
        }
        acc += phi * values(k);
    }
    return acc;
}

}  // namespace maguq::uq
