// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/bvh.hpp>
#include <grtx/mesh.hpp>
#include <grtx/scene.hpp>

#include <atomic>
#include <cstring>
#include <unordered_map>

namespace grtx {

// Mahalanobis radius at which a Gaussian is truncated to a bounded
// ellipsoid. Fixed uses kappa directly; Adaptive solves
// o * exp(-kappa^2/2) = alpha_min for kappa, clamped to [0.5, 4].
struct CutoffPolicy {
    enum class Kind { Fixed, Adaptive } kind = Kind::Fixed;
    double value = 3.0;  // kappa for Fixed, alpha_min for Adaptive

    static CutoffPolicy fixed(double kappa) { return {Kind::Fixed, kappa}; }
    static CutoffPolicy adaptive(double alpha_min) { return {Kind::Adaptive, alpha_min}; }
};

inline double cutoff_radius(const Gaussian& g, const CutoffPolicy& policy) {
    if (policy.kind == CutoffPolicy::Kind::Fixed) {
        if (!(policy.value > 0.0)) throw DataError("cutoff_radius: kappa must be > 0");
        return policy.value;
    }
    const double alpha_min = policy.value;
    if (!(alpha_min > 0.0 && alpha_min < 1.0))
        throw DataError("cutoff_radius: alpha_min must be in (0, 1)");
    if (g.opacity <= alpha_min) return 0.5;
    const double k = std::sqrt(2.0 * std::log(g.opacity / alpha_min));
    return std::clamp(k, 0.5, 4.0);
}

// M = Translate(mean) * Rot(q) * Scale(kappa * scale), mapping the unit ball
// onto the cutoff ellipsoid, plus its analytic inverse.
inline std::pair<Affine, Affine> world_from_local(const Gaussian& g, double kappa_eff) {
    const Vec3 s = g.scale * kappa_eff;
    if (!(s.x > 0 && s.y > 0 && s.z > 0))
        throw DegenerateGeometryError("world_from_local: non-positive scaled axis");
    const Mat3 r = rotation_matrix(g.rotation);

    Affine fwd;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) fwd.linear.m[i][j] = r.m[i][j] * s[j];
    fwd.translation = g.mean;

    Affine inv;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) inv.linear.m[i][j] = r.m[j][i] / s[i];
    inv.translation = -(inv.linear * g.mean);
    return {fwd, inv};
}

// Tight world AABB of the cutoff ellipsoid: half extent along axis i is
// kappa * sqrt(Sigma_ii).
inline Aabb gaussian_aabb(const Gaussian& g, double kappa_eff) {
    const Mat3 r = rotation_matrix(g.rotation);
    Vec3 half;
    for (int i = 0; i < 3; ++i) {
        const double sii = r.m[i][0] * r.m[i][0] * g.scale.x * g.scale.x +
                           r.m[i][1] * r.m[i][1] * g.scale.y * g.scale.y +
                           r.m[i][2] * r.m[i][2] * g.scale.z * g.scale.z;
        half[i] = kappa_eff * std::sqrt(sii);
    }
    return {g.mean - half, g.mean + half};
}

enum class AccelKind : uint32_t { Monolithic = 0, TwoLevel = 1 };
enum class BlasKind : uint32_t { UnitSphere = 0, Icosphere20 = 1, Icosphere80 = 2 };

inline int blas_subdiv(BlasKind k) { return k == BlasKind::Icosphere80 ? 1 : 0; }

struct Instance {
    Affine world_from_local;
    Affine local_from_world;
    uint32_t gaussian_id = 0;
};

// Deterministic byte layout of a serialized structure. Every node, instance
// record and primitive block has a fixed address; those addresses double as
// node identifiers for counters, checkpoints and the cache model.
//
// Size model: a BVH node is arity slots of 32 bytes (24-byte AABB + 4-byte
// index + 4-byte flags); a TLAS instance record is 64 bytes (48-byte 3x4
// matrix + 8-byte BLAS ref + 8-byte id); a triangle record is 40 bytes
// (36-byte vertices + 4-byte Gaussian id); the unit-sphere primitive is 16
// bytes; the header is 64 bytes.
struct AccelLayout {
    uint64_t node_stride = 64;
    uint64_t header_bytes = 64;
    uint64_t top_node_base = 0, top_node_count = 0;
    uint64_t instance_base = 0, instance_count = 0;
    uint64_t blas_node_base = 0, blas_node_count = 0;
    uint64_t blas_tri_base = 0, blas_tri_count = 0;
    uint64_t sphere_base = 0, sphere_bytes = 0;
    uint64_t tri_base = 0, tri_count = 0;
    uint64_t total_bytes = 0;

    uint64_t top_node_addr(uint64_t i) const { return top_node_base + i * node_stride; }
    uint64_t instance_addr(uint64_t order_pos) const { return instance_base + order_pos * 64; }
    uint64_t blas_node_addr(uint64_t i) const { return blas_node_base + i * node_stride; }
    uint64_t blas_tri_addr(uint64_t order_pos) const { return blas_tri_base + order_pos * 40; }
    uint64_t tri_addr(uint64_t order_pos) const { return tri_base + order_pos * 40; }
};

struct MonoTri {
    Vec3 v0, v1, v2;
    uint32_t gaussian_id = 0;
};

struct AccelStructure {
    AccelKind kind = AccelKind::TwoLevel;
    int arity = 2;
    CutoffPolicy cutoff;
    std::vector<double> kappa;  // effective cutoff per Gaussian

    // two-level
    BlasKind blas_kind = BlasKind::UnitSphere;
    Bvh tlas;
    std::vector<Instance> instances;
    Bvh blas_bvh;       // icosphere BLAS only
    TriMesh blas_mesh;  // icosphere BLAS only, insphere radius 1

    // monolithic
    Bvh bvh;
    TriMesh proxy_mesh;
    std::vector<MonoTri> tris;  // index = gaussian_id * faces + face
    // Per-Gaussian proxy AABBs indexed for point containment. A ray starting
    // inside a proxy sees only its far faces, whose leaf boxes do not bound
    // the canonical (ellipsoid-entry) hit distance, so distance culling could
    // skip them; the traversal instead discovers such Gaussians through this
    // index at the start of each round.
    Bvh origin_index;
    std::vector<uint32_t> rep_tri_pos;  // gaussian id -> one of its triangle order positions

    AccelLayout layout;
    // leaf block start (order position) -> primitive count, for resolving
    // checkpointed leaf blocks during replay
    std::unordered_map<uint64_t, uint32_t> top_leaf_counts;
    std::unordered_map<uint64_t, uint32_t> blas_leaf_counts;
    uint64_t build_id = 0;

    const Bvh& top_bvh() const { return kind == AccelKind::Monolithic ? bvh : tlas; }
    size_t gaussian_count() const {
        return kind == AccelKind::Monolithic
                   ? (proxy_mesh.faces.empty() ? 0 : tris.size() / proxy_mesh.faces.size())
                   : instances.size();
    }
};

namespace detail {

inline uint64_t next_build_id() {
    static std::atomic<uint64_t> counter{1};
    return counter.fetch_add(1);
}

inline void index_leaf_blocks(const Bvh& bvh, std::unordered_map<uint64_t, uint32_t>& out) {
    for (const BvhNode& node : bvh.nodes)
        for (uint32_t s = 0; s < node.child_count; ++s)
            if (node.child[s].is_leaf()) out.emplace(node.child[s].index, node.child[s].count);
}

inline void compute_layout(AccelStructure& as) {
    AccelLayout& l = as.layout;
    l.node_stride = uint64_t(as.arity) * 32;
    uint64_t off = l.header_bytes;
    l.top_node_base = off;
    l.top_node_count = as.top_bvh().nodes.size();
    off += l.top_node_count * l.node_stride;
    if (as.kind == AccelKind::TwoLevel) {
        l.instance_base = off;
        l.instance_count = as.instances.size();
        off += l.instance_count * 64;
        if (as.blas_kind == BlasKind::UnitSphere) {
            l.sphere_base = off;
            l.sphere_bytes = 16;
            off += l.sphere_bytes;
        } else {
            l.blas_node_base = off;
            l.blas_node_count = as.blas_bvh.nodes.size();
            off += l.blas_node_count * l.node_stride;
            l.blas_tri_base = off;
            l.blas_tri_count = as.blas_mesh.faces.size();
            off += l.blas_tri_count * 40;
        }
    } else {
        l.tri_base = off;
        l.tri_count = as.tris.size();
        off += l.tri_count * 40;
    }
    l.total_bytes = off;
}

inline std::vector<double> effective_cutoffs(const Scene& scene, const CutoffPolicy& policy) {
    std::vector<double> kappa;
    kappa.reserve(scene.size());
    for (const Gaussian& g : scene.gaussians) kappa.push_back(cutoff_radius(g, policy));
    return kappa;
}

}  // namespace detail

// One BVH over every instanced proxy triangle; each triangle is tagged with
// its Gaussian id, and each Gaussian contributes one contiguous block of
// `mesh.faces.size()` triangles to the primitive array.
inline AccelStructure build_monolithic(const Scene& scene, const TriMesh& mesh,
                                       const CutoffPolicy& cutoff, int arity) {
    if (scene.size() == 0) throw ShapeError("build_monolithic: empty scene");
    AccelStructure as;
    as.kind = AccelKind::Monolithic;
    as.arity = arity;
    as.cutoff = cutoff;
    as.proxy_mesh = mesh;
    as.kappa = detail::effective_cutoffs(scene, cutoff);

    const size_t F = mesh.faces.size();
    as.tris.reserve(scene.size() * F);
    std::vector<Aabb> bounds;
    bounds.reserve(scene.size() * F);
    for (size_t i = 0; i < scene.size(); ++i) {
        const Affine fwd = world_from_local(scene[i], as.kappa[i]).first;
        for (const auto& f : mesh.faces) {
            MonoTri t;
            t.v0 = fwd.apply_point(mesh.vertices[f[0]]);
            t.v1 = fwd.apply_point(mesh.vertices[f[1]]);
            t.v2 = fwd.apply_point(mesh.vertices[f[2]]);
            t.gaussian_id = uint32_t(i);
            Aabb b;
            b.extend(t.v0);
            b.extend(t.v1);
            b.extend(t.v2);
            bounds.push_back(b);
            as.tris.push_back(t);
        }
    }
    as.bvh = build_bvh(bounds, arity, 4);
    detail::index_leaf_blocks(as.bvh, as.top_leaf_counts);

    std::vector<Aabb> proxy_boxes(scene.size());
    for (size_t i = 0; i < scene.size(); ++i)
        for (size_t f = 0; f < F; ++f) proxy_boxes[i].extend(bounds[i * F + f]);
    as.origin_index = build_bvh(proxy_boxes, 2, 8);
    as.rep_tri_pos.assign(scene.size(), ~0u);
    for (uint32_t pos = 0; pos < as.bvh.prim_order.size(); ++pos) {
        const uint32_t gid = as.tris[as.bvh.prim_order[pos]].gaussian_id;
        if (as.rep_tri_pos[gid] == ~0u) as.rep_tri_pos[gid] = pos;
    }

    detail::compute_layout(as);
    as.build_id = detail::next_build_id();
    return as;
}

// TLAS over one instance leaf per Gaussian; a single BLAS (unit sphere or
// icosphere template) is stored once and shared by every instance.
inline AccelStructure build_two_level(const Scene& scene, BlasKind blas,
                                      const CutoffPolicy& cutoff, int arity) {
    if (scene.size() == 0) throw ShapeError("build_two_level: empty scene");
    AccelStructure as;
    as.kind = AccelKind::TwoLevel;
    as.arity = arity;
    as.cutoff = cutoff;
    as.blas_kind = blas;
    as.kappa = detail::effective_cutoffs(scene, cutoff);

    as.instances.reserve(scene.size());
    std::vector<Aabb> bounds;
    bounds.reserve(scene.size());
    for (size_t i = 0; i < scene.size(); ++i) {
        auto [fwd, inv] = world_from_local(scene[i], as.kappa[i]);
        as.instances.push_back({fwd, inv, uint32_t(i)});
        bounds.push_back(gaussian_aabb(scene[i], as.kappa[i]));
    }
    as.tlas = build_bvh(bounds, arity, 1);
    detail::index_leaf_blocks(as.tlas, as.top_leaf_counts);

    if (blas != BlasKind::UnitSphere) {
        as.blas_mesh = icosahedron_mesh(blas_subdiv(blas));
        std::vector<Aabb> tb;
        tb.reserve(as.blas_mesh.faces.size());
        for (const auto& f : as.blas_mesh.faces) {
            Aabb b;
            b.extend(as.blas_mesh.vertices[f[0]]);
            b.extend(as.blas_mesh.vertices[f[1]]);
            b.extend(as.blas_mesh.vertices[f[2]]);
            tb.push_back(b);
        }
        as.blas_bvh = build_bvh(tb, arity, 4);
        detail::index_leaf_blocks(as.blas_bvh, as.blas_leaf_counts);
    }
    detail::compute_layout(as);
    as.build_id = detail::next_build_id();
    return as;
}

// ---- serialization ---------------------------------------------------------

namespace detail {

struct ByteWriter {
    std::vector<unsigned char> bytes;
    void u32(uint32_t v) { append(&v, 4); }
    void u64(uint64_t v) { append(&v, 8); }
    void f32(float v) { append(&v, 4); }
    void raw(const void* p, size_t n) { append(p, n); }
    void pad_to(size_t off) { bytes.resize(off, 0); }

private:
    void append(const void* p, size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        bytes.insert(bytes.end(), c, c + n);
    }
};

inline void serialize_bvh_nodes(ByteWriter& w, const Bvh& bvh, int arity,
                                uint64_t leaf_payload_base, uint64_t leaf_record_bytes,
                                uint64_t child_node_base, uint64_t node_stride) {
    for (const BvhNode& node : bvh.nodes) {
        for (int s = 0; s < arity; ++s) {
            if (uint32_t(s) < node.child_count) {
                const BvhChild& c = node.child[s];
                for (int a = 0; a < 3; ++a) w.f32(float(c.bounds.min[a]));
                for (int a = 0; a < 3; ++a) w.f32(float(c.bounds.max[a]));
                if (c.is_leaf()) {
                    const uint64_t addr = leaf_payload_base + uint64_t(c.index) * leaf_record_bytes;
                    w.u32(uint32_t(addr / 16));  // 16-byte-aligned address key
                    w.u32(1u | 2u | (c.count << 2));
                } else {
                    const uint64_t addr = child_node_base + uint64_t(c.index) * node_stride;
                    w.u32(uint32_t(addr / 16));
                    w.u32(1u);
                }
            } else {
                for (int i = 0; i < 8; ++i) w.u32(0);  // empty slot
            }
        }
    }
}

}  // namespace detail

// Versioned binary container; identical inputs produce byte-identical
// output. The byte offsets match AccelLayout exactly.
inline std::vector<unsigned char> serialize(const AccelStructure& as) {
    detail::ByteWriter w;
    const AccelLayout& l = as.layout;
    w.raw("GRTXAS01", 8);
    w.u32(1);  // container version
    w.u32(uint32_t(as.kind));
    w.u32(uint32_t(as.arity));
    w.u32(as.kind == AccelKind::Monolithic ? uint32_t(as.proxy_mesh.faces.size())
                                           : uint32_t(as.blas_kind));
    w.u64(l.top_node_count);
    w.u64(l.instance_count);
    w.u64(l.blas_node_count);
    w.u64(l.blas_tri_count + l.sphere_bytes / 16);
    w.u64(l.tri_count);
    w.pad_to(l.header_bytes);

    if (as.kind == AccelKind::Monolithic) {
        detail::serialize_bvh_nodes(w, as.bvh, as.arity, l.tri_base, 40, l.top_node_base,
                                    l.node_stride);
        w.pad_to(l.tri_base);
        for (uint32_t order_pos : as.bvh.prim_order) {
            const MonoTri& t = as.tris[order_pos];
            for (const Vec3* v : {&t.v0, &t.v1, &t.v2})
                for (int a = 0; a < 3; ++a) w.f32(float((*v)[a]));
            w.u32(t.gaussian_id);
        }
    } else {
        detail::serialize_bvh_nodes(w, as.tlas, as.arity, l.instance_base, 64, l.top_node_base,
                                    l.node_stride);
        w.pad_to(l.instance_base);
        const uint64_t blas_ref =
            as.blas_kind == BlasKind::UnitSphere ? l.sphere_base : l.blas_node_base;
        for (uint32_t order_pos : as.tlas.prim_order) {
            const Instance& inst = as.instances[order_pos];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) w.f32(float(inst.local_from_world.linear.m[i][j]));
                w.f32(float(inst.local_from_world.translation[i]));
            }
            w.u64(blas_ref);
            w.u64(inst.gaussian_id);
        }
        if (as.blas_kind == BlasKind::UnitSphere) {
            for (int i = 0; i < 3; ++i) w.f32(0.0f);
            w.f32(1.0f);
        } else {
            detail::serialize_bvh_nodes(w, as.blas_bvh, as.arity, l.blas_tri_base, 40,
                                        l.blas_node_base, l.node_stride);
            w.pad_to(l.blas_tri_base);
            for (uint32_t order_pos : as.blas_bvh.prim_order) {
                const auto& f = as.blas_mesh.faces[order_pos];
                for (int v = 0; v < 3; ++v)
                    for (int a = 0; a < 3; ++a) w.f32(float(as.blas_mesh.vertices[f[v]][a]));
                w.u32(0);  // template triangles carry no Gaussian id
            }
        }
    }
    w.pad_to(l.total_bytes);
    return w.bytes;
}

struct AccelStats {
    uint64_t node_count = 0;  // BVH nodes plus instance leaves
    uint64_t height = 0;
    uint64_t size_bytes = 0;
    uint64_t top_node_count = 0;
    uint64_t instance_count = 0;
    uint64_t blas_node_count = 0;
    uint64_t triangle_count = 0;
    uint64_t triangle_bytes = 0;
    uint64_t shared_blas_bytes = 0;
};

inline AccelStats as_stats(const AccelStructure& as) {
    const AccelLayout& l = as.layout;
    AccelStats s;
    s.size_bytes = l.total_bytes;
    s.top_node_count = l.top_node_count;
    if (as.kind == AccelKind::Monolithic) {
        s.node_count = l.top_node_count;
        s.height = as.bvh.height;
        s.triangle_count = l.tri_count;
        s.triangle_bytes = l.tri_count * 40;
    } else {
        const uint64_t blas_nodes =
            as.blas_kind == BlasKind::UnitSphere ? 1 : l.blas_node_count;
        s.node_count = l.top_node_count + l.instance_count + blas_nodes;
        s.instance_count = l.instance_count;
        s.blas_node_count = blas_nodes;
        s.height = as.tlas.height + 1 +
                   (as.blas_kind == BlasKind::UnitSphere ? 0 : as.blas_bvh.height);
        s.triangle_count = l.blas_tri_count;
        s.triangle_bytes = l.blas_tri_count * 40;
        s.shared_blas_bytes = as.blas_kind == BlasKind::UnitSphere
                                  ? l.sphere_bytes
                                  : l.blas_node_count * l.node_stride + l.blas_tri_count * 40;
    }
    return s;
}

}  // namespace grtx
