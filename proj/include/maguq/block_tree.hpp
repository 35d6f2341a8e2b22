#pragma once

#include <vector>

#include "maguq/cluster_tree.hpp"
#include "maguq/core.hpp"

namespace maguq::hmat {

/// Admissibility test on the cluster boxes:
/// min(diam(Q_t), diam(Q_s)) <= eta * dist(Q_t, Q_s).
inline bool admissible(const Rect& qt, const Rect& qs, double eta) {
    return std::min(qt.diameter(), qs.diameter()) <= eta * rect_distance(qt, qs);
}

enum class BlockKind { Admissible, Inadmissible, Subdivided };

/// One block b = t x s referencing two clusters of the same level.
struct BlockNode {
    int row_cluster = -1;
    int col_cluster = -1;
    BlockKind kind = BlockKind::Subdivided;
    std::array<int, 4> son{-1, -1, -1, -1};
    int son_count = 0;
};

/// Quadtree of cluster products rooted at I x I. Leaves are either admissible
/// (low-rank candidates) or inadmissible with both clusters being tree leaves.
struct BlockClusterTree {
    std::vector<BlockNode> nodes;
    std::vector<int> leaves;  // indices into nodes, in build order
    double eta = 1.0;
};

namespace detail {

inline int build_block_rec(BlockClusterTree& bt, const ClusterTree& tree, int row, int col) {
    const int id = static_cast<int>(bt.nodes.size());
    bt.nodes.push_back({row, col, BlockKind::Subdivided, {-1, -1, -1, -1}, 0});
    const ClusterNode& t = tree.nodes[static_cast<std::size_t>(row)];
    const ClusterNode& s = tree.nodes[static_cast<std::size_t>(col)];

    if (admissible(t.box, s.box, bt.eta)) {
        bt.nodes[static_cast<std::size_t>(id)].kind = BlockKind::Admissible;
        bt.leaves.push_back(id);
        return id;
    }
    if (t.is_leaf() && s.is_leaf()) {
        bt.nodes[static_cast<std::size_t>(id)].kind = BlockKind::Inadmissible;
        bt.leaves.push_back(id);
        return id;
    }

    // A leaf cluster paired with a deeper one stands in for its own son so
    // that the recursion stays level-synchronous.
    const std::array<int, 2> row_sons = t.is_leaf() ? std::array<int, 2>{row, -1} : t.son;
    const std::array<int, 2> col_sons = s.is_leaf() ? std::array<int, 2>{col, -1} : s.son;
    for (int r : row_sons) {
        if (r < 0) continue;
        for (int c : col_sons) {
            if (c < 0) continue;
            const int child = build_block_rec(bt, tree, r, c);
            BlockNode& n = bt.nodes[static_cast<std::size_t>(id)];
            n.son[static_cast<std::size_t>(n.son_count++)] = child;
        }
    }
    return id;
}

}  // namespace detail

inline BlockClusterTree build_block_cluster_tree(const ClusterTree& tree, double eta) {
    if (eta <= 0.0) throw ConfigError("block cluster tree: eta must be positive");
    BlockClusterTree bt;
    bt.eta = eta;
    detail::build_block_rec(bt, tree, 0, 0);
    return bt;
}

}  // namespace maguq::hmat
