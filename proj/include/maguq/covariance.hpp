#pragma once

#include <cmath>

#include "maguq/core.hpp"

namespace maguq::kle {

enum class KernelKind { ExponentialL1 };

/// Stationary covariance of the random reluctivity field,
/// Cov(x, y) = sigma^2 * exp(-|x - y|_1 / d).
struct CovarianceKernel {
    KernelKind kind = KernelKind::ExponentialL1;
    double sigma = 1.0;  // field standard deviation
    double d = 2.0;      // correlation length, m

    CovarianceKernel() = default;
    CovarianceKernel(double sigma_, double d_) : sigma(sigma_), d(d_) {
        if (sigma < 0.0) throw ConfigError("covariance: sigma must be nonnegative");
        if (d <= 0.0) throw ConfigError("covariance: correlation length must be positive");
    }

    double operator()(const Point2& x, const Point2& y) const {
        return sigma * sigma * std::exp(-l1_distance(x, y) / d);
    }
};

}  // namespace maguq::kle
