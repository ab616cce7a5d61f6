// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/aabb.hpp>
#include <grtx/error.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

namespace grtx {

constexpr int kMinArity = 2;
constexpr int kMaxArity = 6;

// Wide BVH node: each child slot carries the child's bounds, so expanding a
// node tests every child box with no further fetch. count == 0 marks an
// internal child (index = node id); count > 0 marks a leaf range
// [index, index + count) into prim_order.
struct BvhChild {
    Aabb bounds;
    uint32_t index = 0;
    uint32_t count = 0;
    bool is_leaf() const { return count > 0; }
};

struct BvhNode {
    std::array<BvhChild, kMaxArity> child;
    uint32_t child_count = 0;
};

struct Bvh {
    int arity = 2;
    uint32_t leaf_size = 4;
    std::vector<BvhNode> nodes;        // nodes[0] is the root
    std::vector<uint32_t> prim_order;  // permutation of 0..N-1
    Aabb root_bounds;
    uint32_t height = 0;  // levels of BvhNode from root to deepest node

    size_t prim_count() const { return prim_order.size(); }
};

namespace detail {

struct BvhBuilder {
    const std::vector<Aabb>& bounds;
    std::vector<Vec3> centroids;
    Bvh& bvh;

    Aabb range_bounds(uint32_t first, uint32_t count) const {
        Aabb b;
        for (uint32_t i = first; i < first + count; ++i) b.extend(bounds[bvh.prim_order[i]]);
        return b;
    }

    // Longest-axis median split of the centroid set, fanned out over up to
    // `arity` near-equal chunks. Ties broken by primitive id so the build is
    // a pure function of the input.
    void sort_range(uint32_t first, uint32_t count) {
        Aabb cb;
        for (uint32_t i = first; i < first + count; ++i) cb.extend(centroids[bvh.prim_order[i]]);
        const int axis = cb.longest_axis();
        std::sort(bvh.prim_order.begin() + first, bvh.prim_order.begin() + first + count,
                  [&](uint32_t a, uint32_t b) {
                      const double ca = centroids[a][axis], cbv = centroids[b][axis];
                      return ca != cbv ? ca < cbv : a < b;
                  });
    }

    uint32_t build_node(uint32_t first, uint32_t count, uint32_t depth) {
        bvh.height = std::max(bvh.height, depth + 1);
        const uint32_t node_id = uint32_t(bvh.nodes.size());
        bvh.nodes.emplace_back();

        uint32_t n_children = count <= bvh.leaf_size
                                  ? 1u
                                  : std::min<uint32_t>(uint32_t(bvh.arity), count);
        if (n_children > 1) sort_range(first, count);

        for (uint32_t c = 0; c < n_children; ++c) {
            const uint32_t lo = first + uint32_t(uint64_t(count) * c / n_children);
            const uint32_t hi = first + uint32_t(uint64_t(count) * (c + 1) / n_children);
            BvhChild slot;
            if (hi - lo <= bvh.leaf_size) {
                slot.index = lo;
                slot.count = hi - lo;
                slot.bounds = range_bounds(lo, hi - lo);
            } else {
                const uint32_t child_id = build_node(lo, hi - lo, depth + 1);
                slot.index = child_id;
                slot.count = 0;
                // union over the child's own slots; max/min only, so nesting
                // is exact
                Aabb b;
                for (uint32_t s = 0; s < bvh.nodes[child_id].child_count; ++s)
                    b.extend(bvh.nodes[child_id].child[s].bounds);
                slot.bounds = b;
            }
            BvhNode& node = bvh.nodes[node_id];
            node.child[node.child_count++] = slot;
        }
        return node_id;
    }
};

}  // namespace detail

inline Bvh build_bvh(const std::vector<Aabb>& prim_bounds, int arity, uint32_t leaf_size) {
    if (arity < kMinArity || arity > kMaxArity)
        throw ShapeError("build_bvh: arity must be in 2..6");
    if (prim_bounds.empty()) throw ShapeError("build_bvh: no primitives");
    if (leaf_size == 0) throw ShapeError("build_bvh: leaf_size must be >= 1");

    Bvh bvh;
    bvh.arity = arity;
    bvh.leaf_size = leaf_size;
    bvh.prim_order.resize(prim_bounds.size());
    std::iota(bvh.prim_order.begin(), bvh.prim_order.end(), 0u);

    detail::BvhBuilder builder{prim_bounds, {}, bvh};
    builder.centroids.reserve(prim_bounds.size());
    for (const Aabb& b : prim_bounds) builder.centroids.push_back(b.center());
    builder.build_node(0, uint32_t(prim_bounds.size()), 0);

    Aabb root;
    for (uint32_t s = 0; s < bvh.nodes[0].child_count; ++s)
        root.extend(bvh.nodes[0].child[s].bounds);
    bvh.root_bounds = root;
    return bvh;
}

// Recursive structural check: child slot bounds nest exactly in the parent
// slot bounds, every primitive is reachable exactly once, child counts are
// sane. Used by tests and by debug assertions.
inline void validate_bvh(const Bvh& bvh, const std::vector<Aabb>& prim_bounds) {
    std::vector<uint32_t> seen(prim_bounds.size(), 0);
    std::vector<bool> node_seen(bvh.nodes.size(), false);

    const auto walk = [&](auto&& self, uint32_t node_id, const Aabb* parent) -> void {
        if (node_id >= bvh.nodes.size()) throw TraversalError("validate_bvh: child id out of range");
        if (node_seen[node_id]) throw TraversalError("validate_bvh: node reachable twice");
        node_seen[node_id] = true;
        const BvhNode& node = bvh.nodes[node_id];
        if (node.child_count == 0 || node.child_count > uint32_t(bvh.arity))
            throw TraversalError("validate_bvh: bad child count");
        for (uint32_t s = 0; s < node.child_count; ++s) {
            const BvhChild& c = node.child[s];
            if (parent && !parent->contains(c.bounds))
                throw TraversalError("validate_bvh: child escapes parent bounds");
            if (c.is_leaf()) {
                for (uint32_t i = c.index; i < c.index + c.count; ++i) {
                    if (i >= bvh.prim_order.size())
                        throw TraversalError("validate_bvh: leaf range out of bounds");
                    const uint32_t prim = bvh.prim_order[i];
                    if (++seen[prim] > 1)
                        throw TraversalError("validate_bvh: primitive covered twice");
                    if (!c.bounds.contains(prim_bounds[prim]))
                        throw TraversalError("validate_bvh: primitive escapes leaf bounds");
                }
            } else {
                self(self, c.index, &c.bounds);
            }
        }
    };
    walk(walk, 0, nullptr);
    for (uint32_t n : seen)
        if (n != 1) throw TraversalError("validate_bvh: primitive not covered");
}

}  // namespace grtx
