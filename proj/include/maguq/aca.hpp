#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <vector>

#include "maguq/core.hpp"

namespace maguq::hmat {

/// Rank-k factorization U * V^T of a p x q block.
struct LowRankBlock {
    Eigen::MatrixXd U;  // p x k
    Eigen::MatrixXd V;  // q x k

    int rank() const { return static_cast<int>(U.cols()); }

    Eigen::MatrixXd materialize() const { return U * V.transpose(); }
};

using EntryFn = std::function<double(int, int)>;

/// Adaptive cross approximation with partial pivoting.
///
/// Appends rank-1 crosses u_k v_k^T built from residual rows/columns until
/// ||u_k|| * ||v_k|| <= epsilon * ||S_k||_F, where ||S_k||_F is the running
/// Frobenius-norm estimate of the accumulated approximant, or until the rank
/// cap. Because the pivot walk can stall before it has visited structure the
/// kernel hides from it (the l1 kernel's axis-aligned kinks do this), every
/// stop is checked against a sample of unused residual rows; a row that
/// still carries weight restarts the walk there. Exactly low-rank blocks are
/// reproduced to round-off; an all-zero block yields rank 0.
inline LowRankBlock aca_approximate(const EntryFn& entry, int p, int q, double epsilon,
                                    int k_max) {
    if (p <= 0 || q <= 0) throw ConfigError("aca: block extents must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("aca: epsilon must lie in (0, 1)");
    k_max = std::min({k_max, p, q});

    std::vector<Eigen::VectorXd> us, vs;
    std::vector<char> row_used(static_cast<std::size_t>(p), 0);
    double frob_sq = 0.0;  // ||S_k||_F^2 of the accumulated approximant
    int next_row = 0;

    auto residual_row = [&](int i) {
        Eigen::VectorXd r(q);
        for (int j = 0; j < q; ++j) r(j) = entry(i, j);
        for (std::size_t m = 0; m < us.size(); ++m) r -= us[m](i) * vs[m];
        return r;
    };

    auto first_unused = [&]() -> int {
        for (int i = 0; i < p; ++i)
            if (!row_used[static_cast<std::size_t>(i)]) return i;
        return -1;
    };

    // One partial-pivoting sweep; returns false when no usable pivot row is
    // left (all remaining residual rows vanish).
    auto sweep = [&]() -> bool {
        while (static_cast<int>(us.size()) < k_max) {
            int pivot_row = -1;
            Eigen::VectorXd r;
            while (true) {
                const int candidate =
                    (next_row >= 0 && next_row < p && !row_used[static_cast<std::size_t>(next_row)])
                        ? next_row
                        : first_unused();
                if (candidate < 0) break;
                r = residual_row(candidate);
                row_used[static_cast<std::size_t>(candidate)] = 1;
                if (r.cwiseAbs().maxCoeff() > std::numeric_limits<double>::min()) {
                    pivot_row = candidate;
                    break;
                }
                next_row = -1;
            }
            if (pivot_row < 0) return false;

            int pivot_col = 0;
            r.cwiseAbs().maxCoeff(&pivot_col);
            const double pivot = r(pivot_col);

            Eigen::VectorXd v = r / pivot;
            Eigen::VectorXd u(p);
            for (int i = 0; i < p; ++i) u(i) = entry(i, pivot_col);
            for (std::size_t m = 0; m < us.size(); ++m) u -= vs[m](pivot_col) * us[m];

            const double nu = u.norm(), nv = v.norm();
            if (nu * nv == 0.0) continue;

            // Running Frobenius estimate of S_k = S_{k-1} + u v^T.
            double cross = 0.0;
            for (std::size_t m = 0; m < us.size(); ++m) cross += us[m].dot(u) * vs[m].dot(v);
            frob_sq += 2.0 * cross + nu * nu * nv * nv;
            frob_sq = std::max(frob_sq, 0.0);

            us.push_back(std::move(u));
            vs.push_back(std::move(v));

            // Next pivot row: largest new-column magnitude among unused rows.
            next_row = -1;
            double best = -1.0;
            const Eigen::VectorXd& ulast = us.back();
            for (int i = 0; i < p; ++i) {
                if (row_used[static_cast<std::size_t>(i)]) continue;
                const double a = std::abs(ulast(i));
                if (a > best) {
                    best = a;
                    next_row = i;
                }
            }

            if (nu * nv <= epsilon * std::sqrt(frob_sq)) return true;
        }
        return true;
    };

    while (true) {
        if (!sweep()) break;                        // residual exhausted: exact
        if (static_cast<int>(us.size()) >= k_max) break;

        // Verification: sample unused rows; a residual row whose weight would
        // push ||R||_F above epsilon * ||S||_F reopens the sweep there.
        std::vector<int> unused;
        for (int i = 0; i < p; ++i)
            if (!row_used[static_cast<std::size_t>(i)]) unused.push_back(i);
        if (unused.empty()) break;
        const int samples = std::min<int>(static_cast<int>(unused.size()), 32);
        const double accept = epsilon * std::sqrt(std::max(frob_sq, 0.0) / p);
        int worst_row = -1;
        double worst_norm = 0.0;
        for (int s = 0; s < samples; ++s) {
            const int i = unused[static_cast<std::size_t>(s) * unused.size() / samples];
            const double rn = residual_row(i).norm();
            if (rn > worst_norm) {
                worst_norm = rn;
                worst_row = i;
            }
        }
        if (worst_row < 0 || worst_norm <= accept) break;
        next_row = worst_row;
    }

    LowRankBlock block;
    const int k = static_cast<int>(us.size());
    block.U.resize(p, k);
    block.V.resize(q, k);
    for (int m = 0; m < k; ++m) {
        block.U.col(m) = us[static_cast<std::size_t>(m)];
        block.V.col(m) = vs[static_cast<std::size_t>(m)];
    }
    return block;
}

}  // namespace maguq::hmat
