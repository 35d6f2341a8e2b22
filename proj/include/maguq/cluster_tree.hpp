#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "maguq/core.hpp"
#include "maguq/mesh.hpp"

namespace maguq::hmat {

/// One cluster: a contiguous slice [begin, end) of the tree's permutation
/// array plus the axis-parallel box enclosing its members' element boxes.
struct ClusterNode {
    int begin = 0;
    int end = 0;
    Rect box{};
    int level = 0;
    std::array<int, 2> son{-1, -1};

    int size() const { return end - begin; }
    bool is_leaf() const { return son[0] < 0; }
};

/// Geometric bisection tree over element indices. nodes[0] is the root and
/// holds the full index set; a non-leaf's slice is the disjoint union of its
/// sons' slices; leaves hold at most n_min indices.
struct ClusterTree {
    std::vector<ClusterNode> nodes;
    std::vector<int> perm;  // tree position -> element index
    int n_min = 1;

    int size() const { return static_cast<int>(perm.size()); }

    int depth() const {
        int d = 0;
        for (const auto& n : nodes) d = std::max(d, n.level);
        return d;
    }
};

namespace detail {

inline Rect bounding_box(std::span<const mesh::ElementGeometry> geoms,
                         std::span<const int> members) {
    Rect box = geoms[static_cast<std::size_t>(members.front())].bbox;
    for (int i : members.subspan(1)) box.expand(geoms[static_cast<std::size_t>(i)].bbox);
    return box;
}

inline int build_cluster_rec(ClusterTree& tree, std::span<const mesh::ElementGeometry> geoms,
                             int begin, int end, int level) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    {
        auto members = std::span<const int>(tree.perm).subspan(
            static_cast<std::size_t>(begin), static_cast<std::size_t>(end - begin));
        ClusterNode& n = tree.nodes.back();
        n.begin = begin;
        n.end = end;
        n.level = level;
        n.box = bounding_box(geoms, members);
    }
    if (end - begin <= tree.n_min) return id;

    const Rect box = tree.nodes[static_cast<std::size_t>(id)].box;
    const bool split_x = box.width() >= box.height();
    auto coord = [&](int e) {
        const Point2& c = geoms[static_cast<std::size_t>(e)].centroid;
        return split_x ? c.x : c.y;
    };

    // Midpoint bisection of the longest axis, assigning by centroid side.
    const double mid = split_x ? 0.5 * (box.lo.x + box.hi.x) : 0.5 * (box.lo.y + box.hi.y);
    auto first = tree.perm.begin() + begin;
    auto last = tree.perm.begin() + end;
    auto pivot = std::partition(first, last, [&](int e) { return coord(e) < mid; });

    // Degenerate split (all centroids on one side): median split on the same axis.
    if (pivot == first || pivot == last) {
        auto mid_it = first + (end - begin) / 2;
        std::nth_element(first, mid_it, last,
                         [&](int a, int b) { return coord(a) < coord(b); });
        pivot = mid_it;
    }

    const int split = begin + static_cast<int>(pivot - first);
    const int s0 = build_cluster_rec(tree, geoms, begin, split, level + 1);
    const int s1 = build_cluster_rec(tree, geoms, split, end, level + 1);
    tree.nodes[static_cast<std::size_t>(id)].son = {s0, s1};
    return id;
}

}  // namespace detail

inline ClusterTree build_cluster_tree(std::span<const mesh::ElementGeometry> geoms, int n_min) {
    if (geoms.empty()) throw ConfigError("cluster tree: need at least one element");
    if (n_min < 1) throw ConfigError("cluster tree: n_min must be at least 1");
    ClusterTree tree;
    tree.n_min = n_min;
    tree.perm.resize(geoms.size());
    std::iota(tree.perm.begin(), tree.perm.end(), 0);
    tree.nodes.reserve(2 * geoms.size() / static_cast<std::size_t>(n_min) + 8);
    detail::build_cluster_rec(tree, geoms, 0, static_cast<int>(geoms.size()), 0);
    return tree;
}

}  // namespace maguq::hmat
