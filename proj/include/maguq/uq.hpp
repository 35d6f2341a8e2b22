#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "maguq/collocation.hpp"
#include "maguq/core.hpp"
#include "maguq/fem.hpp"
#include "maguq/kle.hpp"

namespace maguq::uq {

/// Per-node quantity-of-interest values. Nodes whose field realization was
/// non-positive are rejected and carry no value.
struct NodeEvaluations {
    Eigen::VectorXd values;      // inductance per node, H/m
    std::vector<char> rejected;  // 1 = invalid field sample
    int rejected_count = 0;
};

/// Inductance of the primary coil at one field realization.
inline double evaluate_inductance(const fem::AffineStiffness& stiffness,
                                  const Eigen::VectorXd& f, const fem::MaterialConfig& mat,
                                  const Eigen::VectorXd& xi, fem::SpdSolver& solver,
                                  const std::string& label) {
    const fem::SpMat k = stiffness.at(xi);
    const fem::FemSolution sol = solver.solve(k, f, label);
    return fem::inductance(fem::energy(k, sol.a), mat.current);
}

/// Decoupled deterministic solves at every collocation node. Results are
/// written per node index, so they do not depend on the schedule.
inline NodeEvaluations run_collocation(const CollocationGrid& grid, const kle::KleModel& model,
                                       const fem::AffineStiffness& stiffness,
                                       const Eigen::VectorXd& f, const fem::MaterialConfig& mat,
                                       int threads = 1) {
    if (grid.dimension != model.modes())
        throw ConfigError("collocation: grid dimension " + std::to_string(grid.dimension) +
                          " does not match model modes " + std::to_string(model.modes()));
    if (stiffness.modes() != model.modes())
        throw ConfigError("collocation: affine decomposition does not match the model");

    NodeEvaluations out;
    out.values.resize(grid.size());
    out.rejected.assign(static_cast<std::size_t>(grid.size()), 0);

    std::vector<std::unique_ptr<fem::SpdSolver>> solvers(static_cast<std::size_t>(std::max(threads, 1)));
    parallel_for_workers(static_cast<std::size_t>(grid.size()), threads, [&](int tid, std::size_t k) {
        auto& solver = solvers[static_cast<std::size_t>(tid)];
        if (!solver) solver = std::make_unique<fem::SpdSolver>(stiffness.k_mean);
        const Eigen::VectorXd xi = grid.nodes.row(static_cast<Eigen::Index>(k)).transpose();
        const kle::FieldSample sample = kle::sample_field(model, xi);
        if (!sample.valid) {
            out.rejected[k] = 1;
            out.values(static_cast<Eigen::Index>(k)) = 0.0;
            return;
        }
        out.values(static_cast<Eigen::Index>(k)) = evaluate_inductance(
            stiffness, f, mat, xi, *solver, "collocation node " + std::to_string(k));
    });
    for (char r : out.rejected) out.rejected_count += r;
    if (out.rejected_count == grid.size())
        throw NumericalError("collocation: every node was rejected (non-positive field realizations)");
    return out;
}

struct MomentReport {
    double mean = 0.0;  // L_mu, H/m
    double std = 0.0;   // L_std, H/m
    int modes = 0;
    std::int64_t node_count = 0;
    int rejected = 0;
    double d = 0.0;
    double sigma = 0.0;
};

/// Quadrature moments: mean first, then the centered second moment. Rejected
/// nodes are excluded with their weight renormalized away (and reported).
inline MomentReport moments(const NodeEvaluations& evals, const CollocationGrid& grid,
                            const kle::KleModel& model) {
    if (evals.values.size() != grid.size())
        throw ConfigError("moments: value and weight counts do not match");

    double wsum = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k)
        if (!evals.rejected[static_cast<std::size_t>(k)]) wsum += grid.weights(k);
    if (wsum <= 0.0)
        throw NumericalError("moments: every collocation node was rejected "
                             "(field realizations non-positive)");

    double mean = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k)
        if (!evals.rejected[static_cast<std::size_t>(k)])
            mean += grid.weights(k) / wsum * evals.values(k);

    double var = 0.0;
    for (std::int64_t k = 0; k < grid.size(); ++k)
        if (!evals.rejected[static_cast<std::size_t>(k)]) {
            const double dev = evals.values(k) - mean;
            var += grid.weights(k) / wsum * dev * dev;
        }

    MomentReport r;
    r.mean = mean;
    r.std = std::sqrt(std::max(var, 0.0));
    r.modes = model.modes();
    r.node_count = grid.size();
    r.rejected = evals.rejected_count;
    r.d = model.kernel.d;
    r.sigma = model.kernel.sigma;
    return r;
}

struct McEstimate {
    double mean = 0.0;
    double std = 0.0;
    double se_mean = 0.0;  // standard error of the mean
    double se_std = 0.0;   // delta-method standard error of the std
    int samples = 0;
    int rejected = 0;
};

/// Plain Monte Carlo reference estimate with xi ~ U[-sqrt(3), sqrt(3)]^M.
/// The xi draws are generated sequentially from the seed, so the estimate is
/// independent of the evaluation schedule.
inline McEstimate monte_carlo(const kle::KleModel& model, const fem::AffineStiffness& stiffness,
                              const Eigen::VectorXd& f, const fem::MaterialConfig& mat,
                              int n_samples, std::uint64_t seed, int threads = 1) {
    const int m = model.modes();
    Eigen::MatrixXd xis(n_samples, m);
    {
        std::mt19937_64 rng(seed ^ 0xa5a5a5a5deadbeefull);
        std::uniform_real_distribution<double> uni(-kXiHalfWidth, kXiHalfWidth);
        for (int k = 0; k < n_samples; ++k)
            for (int i = 0; i < m; ++i) xis(k, i) = uni(rng);
    }

    Eigen::VectorXd values(n_samples);
    std::vector<char> rejected(static_cast<std::size_t>(n_samples), 0);
    std::vector<std::unique_ptr<fem::SpdSolver>> solvers(static_cast<std::size_t>(std::max(threads, 1)));
    parallel_for_workers(static_cast<std::size_t>(n_samples), threads, [&](int tid, std::size_t k) {
        auto& solver = solvers[static_cast<std::size_t>(tid)];
        if (!solver) solver = std::make_unique<fem::SpdSolver>(stiffness.k_mean);
        const Eigen::VectorXd xi = xis.row(static_cast<Eigen::Index>(k)).transpose();
        const kle::FieldSample sample = kle::sample_field(model, xi);
        if (!sample.valid) {
            rejected[k] = 1;
            values(static_cast<Eigen::Index>(k)) = 0.0;
            return;
        }
        values(static_cast<Eigen::Index>(k)) =
            evaluate_inductance(stiffness, f, mat, xi, *solver, "mc sample " + std::to_string(k));
    });

    McEstimate e;
    double sum = 0.0;
    int n = 0;
    for (int k = 0; k < n_samples; ++k)
        if (!rejected[static_cast<std::size_t>(k)]) {
            sum += values(k);
            ++n;
        }
    e.rejected = n_samples - n;
    e.samples = n;
    if (n == 0) throw NumericalError("monte carlo: every sample was rejected");
    e.mean = sum / n;

    double m2 = 0.0, m4 = 0.0;
    for (int k = 0; k < n_samples; ++k)
        if (!rejected[static_cast<std::size_t>(k)]) {
            const double dev = values(k) - e.mean;
            m2 += dev * dev;
            m4 += dev * dev * dev * dev;
        }
    m2 /= n;
    m4 /= n;
    e.std = std::sqrt(std::max(m2, 0.0));
    e.se_mean = e.std / std::sqrt(static_cast<double>(n));
    if (m2 > 0.0)
        e.se_std = std::sqrt(std::max(m4 - m2 * m2, 0.0) / (4.0 * m2 * static_cast<double>(n)));
    return e;
}

}  // namespace maguq::uq
