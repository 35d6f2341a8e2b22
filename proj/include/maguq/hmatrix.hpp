#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "maguq/aca.hpp"
#include "maguq/block_tree.hpp"
#include "maguq/cluster_tree.hpp"
#include "maguq/core.hpp"
#include "maguq/covariance.hpp"
#include "maguq/mesh.hpp"

namespace maguq::hmat {

/// One stored leaf: dense at inadmissible leaves, factorized at admissible
/// ones. Index ranges live in cluster (permuted) coordinates.
struct HBlock {
    int row_begin = 0, row_end = 0;
    int col_begin = 0, col_end = 0;
    bool low_rank = false;
    Eigen::MatrixXd dense;
    LowRankBlock lr;

    int rows() const { return row_end - row_begin; }
    int cols() const { return col_end - col_begin; }
};

/// Hierarchical representation of the Galerkin covariance matrix. The block
/// layout tiles the N x N index square exactly once; `tree.perm` maps block
/// positions back to the caller's element order.
struct HMatrix {
    ClusterTree tree;
    double eta = 1.0;
    double epsilon = 0.01;
    int k_max = 128;
    std::vector<HBlock> blocks;

    int n() const { return tree.size(); }

    int max_rank() const {
        int k = 0;
        for (const auto& b : blocks)
            if (b.low_rank) k = std::max(k, b.lr.rank());
        return k;
    }
};

/// Galerkin entry with one-point centroid quadrature:
/// A_ij = Cov(c_i, c_j) * area_i * area_j.
inline double covariance_entry(std::span<const mesh::ElementGeometry> geoms,
                               const kle::CovarianceKernel& kernel, int i, int j) {
    const auto& gi = geoms[static_cast<std::size_t>(i)];
    const auto& gj = geoms[static_cast<std::size_t>(j)];
    return kernel(gi.centroid, gj.centroid) * gi.area * gj.area;
}

/// Dense assembly of the same matrix; the comparison oracle for tests and
/// for relative_error_dense.
inline Eigen::MatrixXd dense_covariance(std::span<const mesh::ElementGeometry> geoms,
                                        const kle::CovarianceKernel& kernel) {
    const int n = static_cast<int>(geoms.size());
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) a(i, j) = covariance_entry(geoms, kernel, i, j);
    return a;
}

inline HMatrix assemble_covariance_hmatrix(std::span<const mesh::ElementGeometry> geoms,
                                           const kle::CovarianceKernel& kernel, int n_min,
                                           double eta, double epsilon, int k_max = 128,
                                           int threads = 1) {
    HMatrix h;
    h.tree = build_cluster_tree(geoms, n_min);
    h.eta = eta;
    h.epsilon = epsilon;
    h.k_max = k_max;

    const BlockClusterTree bt = build_block_cluster_tree(h.tree, eta);
    h.blocks.resize(bt.leaves.size());

    parallel_for(bt.leaves.size(), threads, [&](std::size_t li) {
        const BlockNode& node = bt.nodes[static_cast<std::size_t>(bt.leaves[li])];
        const ClusterNode& t = h.tree.nodes[static_cast<std::size_t>(node.row_cluster)];
        const ClusterNode& s = h.tree.nodes[static_cast<std::size_t>(node.col_cluster)];
        HBlock& blk = h.blocks[li];
        blk.row_begin = t.begin;
        blk.row_end = t.end;
        blk.col_begin = s.begin;
        blk.col_end = s.end;

        auto entry = [&](int i, int j) {
            return covariance_entry(geoms, kernel,
                                    h.tree.perm[static_cast<std::size_t>(t.begin + i)],
                                    h.tree.perm[static_cast<std::size_t>(s.begin + j)]);
        };
        if (node.kind == BlockKind::Admissible) {
            blk.low_rank = true;
            const int cap = std::min({k_max, t.size(), s.size()});
            blk.lr = aca_approximate(entry, t.size(), s.size(), epsilon, cap);
        } else {
            blk.low_rank = false;
            blk.dense.resize(t.size(), s.size());
            for (int j = 0; j < s.size(); ++j)
                for (int i = 0; i < t.size(); ++i) blk.dense(i, j) = entry(i, j);
        }
    });
    return h;
}

namespace detail {

template <bool Transpose>
Eigen::VectorXd apply(const HMatrix& h, const Eigen::VectorXd& x) {
    if (x.size() != h.n())
        throw ConfigError("hmatvec: vector length " + std::to_string(x.size()) +
                          " does not match matrix size " + std::to_string(h.n()));
    const auto& perm = h.tree.perm;
    Eigen::VectorXd xp(h.n()), yp = Eigen::VectorXd::Zero(h.n());
    for (int i = 0; i < h.n(); ++i) xp(i) = x(perm[static_cast<std::size_t>(i)]);

    for (const auto& b : h.blocks) {
        const int rb = Transpose ? b.col_begin : b.row_begin;
        const int rn = Transpose ? b.cols() : b.rows();
        const int cb = Transpose ? b.row_begin : b.col_begin;
        const int cn = Transpose ? b.rows() : b.cols();
        const auto xs = xp.segment(cb, cn);
        if (b.low_rank) {
            if (b.lr.rank() == 0) continue;
            if constexpr (Transpose)
                yp.segment(rb, rn).noalias() += b.lr.V * (b.lr.U.transpose() * xs);
            else
                yp.segment(rb, rn).noalias() += b.lr.U * (b.lr.V.transpose() * xs);
        } else {
            if constexpr (Transpose)
                yp.segment(rb, rn).noalias() += b.dense.transpose() * xs;
            else
                yp.segment(rb, rn).noalias() += b.dense * xs;
        }
    }

    Eigen::VectorXd y(h.n());
    for (int i = 0; i < h.n(); ++i) y(perm[static_cast<std::size_t>(i)]) = yp(i);
    return y;
}

}  // namespace detail

/// y = A~ x, with x and y in the original element order.
inline Eigen::VectorXd hmatvec(const HMatrix& h, const Eigen::VectorXd& x) {
    return detail::apply<false>(h, x);
}

inline Eigen::VectorXd hmatvec_transpose(const HMatrix& h, const Eigen::VectorXd& x) {
    return detail::apply<true>(h, x);
}

/// y = (A~ + A~^T)/2 x. The blockwise compression is symmetric only up to
/// its tolerance; eigensolvers get the exactly symmetric part.
inline Eigen::VectorXd hmatvec_symmetrized(const HMatrix& h, const Eigen::VectorXd& x) {
    return 0.5 * (detail::apply<false>(h, x) + detail::apply<true>(h, x));
}

struct MemoryReport {
    std::uint64_t bytes_stored = 0;  // block payload + tree overhead
    std::uint64_t bytes_dense = 0;   // N * N * 8
    double ratio = 0.0;
    int max_rank = 0;
};

inline MemoryReport memory_report(const HMatrix& h) {
    MemoryReport r;
    for (const auto& b : h.blocks) {
        if (b.low_rank)
            r.bytes_stored += 8ull * static_cast<std::uint64_t>(b.lr.rank()) *
                              static_cast<std::uint64_t>(b.rows() + b.cols());
        else
            r.bytes_stored +=
                8ull * static_cast<std::uint64_t>(b.rows()) * static_cast<std::uint64_t>(b.cols());
    }
    r.bytes_stored += h.blocks.size() * sizeof(HBlock) + h.tree.nodes.size() * sizeof(ClusterNode) +
                      h.tree.perm.size() * sizeof(int);
    r.bytes_dense = 8ull * static_cast<std::uint64_t>(h.n()) * static_cast<std::uint64_t>(h.n());
    r.ratio = static_cast<double>(r.bytes_stored) / static_cast<double>(r.bytes_dense);
    r.max_rank = h.max_rank();
    return r;
}

namespace detail {

/// Largest singular value of the operator pair (apply, apply^T) via power
/// iteration on the normal equations; deterministic start vector.
inline double spectral_norm(int n, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
                            const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply_t,
                            int max_iter = 50, double stagnation = 1e-6) {
    Eigen::VectorXd x(n);
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    for (int i = 0; i < n; ++i) {
        state = state * 6364136223846793005ull + 1442695040888963407ull;
        x(i) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    }
    double norm = x.norm();
    if (norm == 0.0) return 0.0;
    x /= norm;

    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = apply(x);
        const double yn = y.norm();
        if (yn == 0.0) return 0.0;
        Eigen::VectorXd z = apply_t(y);
        const double zn = z.norm();
        const double estimate = std::sqrt(zn);  // ||A^T A x|| -> sigma^2 at the fixed point
        if (it > 0 && std::abs(estimate - sigma) <= stagnation * estimate) {
            sigma = estimate;
            break;
        }
        sigma = estimate;
        if (zn == 0.0) break;
        x = z / zn;
    }
    return sigma;
}

}  // namespace detail

/// Relative l2 error ||A - A~||_2 / ||A||_2 against dense assembly of the
/// same entries. Returns nullopt when the dense matrix would exceed the
/// memory budget.
inline std::optional<double> relative_error_dense(const HMatrix& h,
                                                  const kle::CovarianceKernel& kernel,
                                                  std::span<const mesh::ElementGeometry> geoms,
                                                  std::uint64_t budget_bytes = 2ull << 30) {
    const int n = h.n();
    if (static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n) * 8ull > budget_bytes)
        return std::nullopt;
    if (static_cast<int>(geoms.size()) != n)
        throw ConfigError("relative_error_dense: geometry count does not match matrix size");

    const Eigen::MatrixXd a = dense_covariance(geoms, kernel);
    auto diff = [&](const Eigen::VectorXd& x) { return (a * x - hmatvec(h, x)).eval(); };
    auto diff_t = [&](const Eigen::VectorXd& x) {
        return (a.transpose() * x - hmatvec_transpose(h, x)).eval();
    };
    auto full = [&](const Eigen::VectorXd& x) { return (a * x).eval(); };
    auto full_t = [&](const Eigen::VectorXd& x) { return (a.transpose() * x).eval(); };

    const double na = detail::spectral_norm(n, full, full_t);
    if (na == 0.0) return 0.0;
    return detail::spectral_norm(n, diff, diff_t) / na;
}

}  // namespace maguq::hmat
