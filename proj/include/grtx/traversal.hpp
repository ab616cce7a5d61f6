// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/accel.hpp>
#include <grtx/checkpoint.hpp>
#include <grtx/intersect.hpp>
#include <grtx/kbuffer.hpp>
#include <grtx/metrics.hpp>

#include <algorithm>
#include <optional>

namespace grtx {

struct TraceLimits {
    uint32_t max_stack_depth = 96;
    uint32_t hit_list_capacity = 4096;
};

struct RoundResult {
    size_t buffer_size = 0;      // k-buffer occupancy after the round
    bool root_traversal = true;  // false when the round replayed checkpoints
};

namespace detail {

// What a serialized-layout address points at.
struct ResolvedRef {
    enum class Kind { TopNode, Instance, BlasNode, BlasPayload, Sphere, TopPayload } kind;
    uint64_t index = 0;  // node index or payload order position
};

inline ResolvedRef resolve_address(const AccelStructure& as, uint64_t addr) {
    const AccelLayout& l = as.layout;
    const auto in = [addr](uint64_t base, uint64_t count, uint64_t stride) {
        return count > 0 && addr >= base && addr < base + count * stride;
    };
    const auto index_of = [addr](uint64_t base, uint64_t stride) {
        if ((addr - base) % stride != 0)
            throw StructureMismatchError("checkpoint ref is misaligned for this structure");
        return (addr - base) / stride;
    };
    if (in(l.top_node_base, l.top_node_count, l.node_stride))
        return {ResolvedRef::Kind::TopNode, index_of(l.top_node_base, l.node_stride)};
    if (in(l.instance_base, l.instance_count, 64))
        return {ResolvedRef::Kind::Instance, index_of(l.instance_base, 64)};
    if (in(l.blas_node_base, l.blas_node_count, l.node_stride))
        return {ResolvedRef::Kind::BlasNode, index_of(l.blas_node_base, l.node_stride)};
    if (in(l.blas_tri_base, l.blas_tri_count, 40))
        return {ResolvedRef::Kind::BlasPayload, index_of(l.blas_tri_base, 40)};
    if (l.sphere_bytes > 0 && addr == l.sphere_base) return {ResolvedRef::Kind::Sphere, 0};
    if (in(l.tri_base, l.tri_count, 40))
        return {ResolvedRef::Kind::TopPayload, index_of(l.tri_base, 40)};
    throw StructureMismatchError("checkpoint ref does not resolve into this structure");
}

struct TraceEntry {
    double t = 0.0;          // box/primitive entry distance at push time
    uint64_t addr = 0;       // serialized-layout address
    uint64_t tlas_leaf = kNoTlasLeaf;
};

}  // namespace grtx::detail

// Instrumented stack traversal over either structure variant, implementing
// the k-buffer any-hit protocol with distance-based culling, and optionally
// the checkpoint/replay mechanism.
//
// Every Gaussian reports one canonical hit per ray — the cutoff-ellipsoid
// entry distance (ellipsoid_hit_t) — regardless of which proxy face or
// sphere test discovered it. Proxies therefore influence traversal cost and
// counters, never the hit set or its ordering, and all regimes blend in the
// same order. Hits are accepted on (resume, t_max] using the (t, id) key.
class Traverser {
public:
    Traverser(const Scene& scene, const AccelStructure& as, TraceLimits limits = {})
        : scene_(scene), as_(as), limits_(limits) {
        seen_stamp_.assign(scene.size(), 0);
        const TriMesh& proxy =
            as.kind == AccelKind::Monolithic ? as.proxy_mesh : as.blas_mesh;
        double circum2 = 1.0;  // unit-sphere BLAS
        for (const Vec3& v : proxy.vertices) circum2 = std::fmax(circum2, dot(v, v));
        proxy_circum2_ = circum2 * (1.0 + 1e-9);
    }

    // One tracing round: gathers into `kbuf` the closest hits with key
    // beyond `resume` (at most kbuf.capacity() of them; exactly that many
    // unless the scene is exhausted). With `ctx`, t_max-failing nodes and
    // rejected hits are checkpointed and rounds after the first replay from
    // the checkpoint set instead of the root.
    RoundResult trace_round(const Ray& ray, const HitKey& resume, KBuffer& kbuf,
                            RayCounters& counters, CheckpointContext* ctx = nullptr) {
        if (ctx && ctx->structure_id() != as_.build_id)
            throw StructureMismatchError("checkpoint context bound to a different structure");
        begin_round(ray, resume, counters, ctx, nullptr);
        ++counters.rounds;
        for (size_t i = 0; i < kbuf.size(); ++i) mark_seen(kbuf[i].prim_id);
        kbuf_ = &kbuf;
        origin_pass();

        RoundResult result;
        if (ctx && ctx->replay()) {
            result.root_traversal = false;
            counters.checkpoint_seeds += ctx->seeds().size();
            // Seeds are replayed sequentially, nearest recorded t first; each
            // seed's subtree is drained before the next seed starts.
            for (const CheckpointEntry& seed : ctx->seeds()) {
                if (seed.t_hit > t_max_) {
                    ctx->checkpoint_push(seed.node, seed.tlas_leaf, seed.t_hit);
                    continue;
                }
                push(detail::TraceEntry{seed.t_hit, seed.node, seed.tlas_leaf});
                drain();
            }
        } else if (ctx && ctx->exhausted()) {
            // empty checkpoint and eviction buffers prove no hit remains
            result.root_traversal = false;
        } else {
            push(detail::TraceEntry{resume.t, as_.layout.top_node_addr(0), kNoTlasLeaf});
            drain();
        }
        result.buffer_size = kbuf.size();
        kbuf_ = nullptr;
        return result;
    }

    // Single-round regime: collect every hit beyond t = 0 without culling,
    // then sort. Errors out beyond the configured hit-list capacity.
    std::vector<HitRecord> trace_single_round(const Ray& ray, RayCounters& counters) {
        begin_round(ray, HitKey{0.0, ~0u}, counters, nullptr, &single_round_hits_);
        ++counters.rounds;
        single_round_hits_.clear();
        push(detail::TraceEntry{0.0, as_.layout.top_node_addr(0), kNoTlasLeaf});
        drain();
        std::vector<HitRecord> hits = std::move(single_round_hits_);
        single_round_hits_ = {};
        std::sort(hits.begin(), hits.end(),
                  [](const HitRecord& a, const HitRecord& b) { return a.key() < b.key(); });
        hit_list_ = nullptr;
        return hits;
    }

private:
    void begin_round(const Ray& ray, const HitKey& resume, RayCounters& counters,
                     CheckpointContext* ctx, std::vector<HitRecord>* hit_list) {
        ray_ = ray;
        resume_ = resume;
        t_max_ = kInf;
        counters_ = &counters;
        ctx_ = ctx;
        kbuf_ = nullptr;
        hit_list_ = hit_list;
        stack_.clear();
        if (++stamp_ == 0) {  // stamp wrapped; reset the marks
            std::fill(seen_stamp_.begin(), seen_stamp_.end(), 0u);
            stamp_ = 1;
        }
    }

    bool seen(uint32_t gid) const { return seen_stamp_[gid] == stamp_; }
    void mark_seen(uint32_t gid) { seen_stamp_[gid] = stamp_; }

    void push(const detail::TraceEntry& e) {
        if (stack_.size() >= limits_.max_stack_depth)
            throw TraversalError("traversal stack exceeds configured depth");
        stack_.push_back(e);
    }

    void checkpoint_or_drop(const detail::TraceEntry& e) {
        if (ctx_) ctx_->checkpoint_push(e.addr, e.tlas_leaf, e.t);
    }

    // A ray that starts inside a proxy meets only the proxy's far faces, and
    // their boxes sit beyond the canonical (ellipsoid-entry) hit distance, so
    // the distance cull could skip the only discovery path. Monolithic
    // structures resolve those Gaussians here by point containment; the
    // two-level paths handle it at instance entry (the instance box bounds
    // the whole ellipsoid, so the instance itself is never skipped). This
    // pass is an artifact of reporting canonical hits and is not counted as
    // traversal work.
    void origin_pass() {
        if (as_.kind != AccelKind::Monolithic) return;
        const Bvh& index = as_.origin_index;
        origin_stack_.clear();
        origin_stack_.push_back(0);
        while (!origin_stack_.empty()) {
            const BvhNode& node = index.nodes[origin_stack_.back()];
            origin_stack_.pop_back();
            for (uint32_t s = 0; s < node.child_count; ++s) {
                const BvhChild& c = node.child[s];
                if (!c.bounds.contains(ray_.origin)) continue;
                if (c.is_leaf()) {
                    for (uint32_t i = c.index; i < c.index + c.count; ++i) {
                        const uint32_t gid = index.prim_order[i];
                        offer(gid, as_.layout.tri_addr(as_.rep_tri_pos[gid]), kNoTlasLeaf);
                    }
                } else {
                    origin_stack_.push_back(c.index);
                }
            }
        }
    }

    void drain() {
        while (!stack_.empty()) {
            const detail::TraceEntry e = stack_.back();
            stack_.pop_back();
            // t_max may have shrunk since this entry was pushed
            if (e.t > t_max_) {
                checkpoint_or_drop(e);
                continue;
            }
            dispatch(e);
        }
    }

    void dispatch(const detail::TraceEntry& e) {
        const detail::ResolvedRef ref = detail::resolve_address(as_, e.addr);
        switch (ref.kind) {
            case detail::ResolvedRef::Kind::TopNode:
                expand_top_node(uint32_t(ref.index));
                break;
            case detail::ResolvedRef::Kind::Instance:
                enter_instance(ref.index, e.t);
                break;
            case detail::ResolvedRef::Kind::TopPayload:
                visit_mono_payload(ref.index);
                break;
            case detail::ResolvedRef::Kind::Sphere:
            case detail::ResolvedRef::Kind::BlasNode:
            case detail::ResolvedRef::Kind::BlasPayload: {
                // a replayed BLAS seed: re-enter through its instance
                if (e.tlas_leaf == kNoTlasLeaf)
                    throw StructureMismatchError("BLAS checkpoint ref lacks a TLAS leaf ref");
                const detail::ResolvedRef inst = detail::resolve_address(as_, e.tlas_leaf);
                if (inst.kind != detail::ResolvedRef::Kind::Instance)
                    throw StructureMismatchError("TLAS leaf ref does not name an instance");
                const Ray local = fetch_instance_and_transform(inst.index);
                const uint32_t gid = instance_gaussian(inst.index);
                if (ref.kind == detail::ResolvedRef::Kind::Sphere) {
                    visit_sphere(local, gid, e.tlas_leaf);
                } else {
                    blas_drain(local, gid, e.tlas_leaf, e);
                }
                break;
            }
        }
    }

    // ---- top-level -----------------------------------------------------------

    void expand_top_node(uint32_t node_id) {
        const Bvh& bvh = as_.top_bvh();
        record_fetch(*counters_, as_.layout.top_node_addr(node_id), uint32_t(as_.layout.node_stride));
        ++counters_->internal_node_fetches;
        const BvhNode& node = bvh.nodes[node_id];

        detail::TraceEntry pending[kMaxArity];
        uint32_t n = 0;
        for (uint32_t s = 0; s < node.child_count; ++s) {
            const BvhChild& c = node.child[s];
            ++counters_->box_tests;
            const auto entry = ray_aabb(ray_, c.bounds, {resume_.t, kInf});
            if (!entry) continue;
            uint64_t addr;
            if (c.is_leaf()) {
                addr = as_.kind == AccelKind::Monolithic ? as_.layout.tri_addr(c.index)
                                                         : as_.layout.instance_addr(c.index);
            } else {
                addr = as_.layout.top_node_addr(c.index);
            }
            const detail::TraceEntry te{*entry, addr, kNoTlasLeaf};
            if (*entry > t_max_) {
                checkpoint_or_drop(te);
                continue;
            }
            pending[n++] = te;
        }
        // far-to-near push order so the nearest child pops first, which
        // shrinks t_max as early as possible
        std::sort(pending, pending + n, [](const detail::TraceEntry& a, const detail::TraceEntry& b) {
            return a.t != b.t ? a.t > b.t : a.addr > b.addr;
        });
        for (uint32_t i = 0; i < n; ++i) push(pending[i]);
    }

    uint32_t instance_gaussian(uint64_t order_pos) const {
        return as_.instances[as_.tlas.prim_order[size_t(order_pos)]].gaussian_id;
    }

    Ray fetch_instance_and_transform(uint64_t order_pos) {
        record_fetch(*counters_, as_.layout.instance_addr(order_pos), 64);
        ++counters_->instance_fetches;
        const Instance& inst = as_.instances[as_.tlas.prim_order[size_t(order_pos)]];
        return transform_ray(ray_, inst.local_from_world);
    }

    void enter_instance(uint64_t order_pos, double entry_t) {
        const Ray local = fetch_instance_and_transform(order_pos);
        const uint64_t leaf_addr = as_.layout.instance_addr(order_pos);
        const uint32_t gid = instance_gaussian(order_pos);
        if (as_.blas_kind == BlasKind::UnitSphere) {
            visit_sphere(local, gid, leaf_addr);
        } else {
            // ray starts inside (or near) this proxy: far-face discovery may
            // be distance-culled, so resolve the hit directly (see origin_pass)
            if (dot(local.origin, local.origin) <= proxy_circum2_)
                offer(gid, as_.layout.blas_tri_addr(0), leaf_addr);
            blas_drain(local, gid, leaf_addr,
                       detail::TraceEntry{entry_t, as_.layout.blas_node_addr(0), leaf_addr});
        }
    }

    void visit_sphere(const Ray& local, uint32_t gid, uint64_t leaf_addr) {
        record_fetch(*counters_, as_.layout.sphere_base, uint32_t(as_.layout.sphere_bytes));
        ++counters_->prim_fetches;
        ++counters_->sphere_tests;
        double t0, t1;
        if (!unit_sphere_roots(local, t0, t1)) return;
        if (!(t0 > 0.0) && !(t1 > 0.0)) return;
        offer(gid, as_.layout.sphere_base, leaf_addr);
    }

    // ---- shared BLAS (icosphere) ---------------------------------------------

    // The BLAS subtree of one instance is traversed to completion before the
    // top-level traversal resumes, mirroring how hardware holds the instance
    // transform while inside a BLAS.
    void blas_drain(const Ray& local, uint32_t gid, uint64_t leaf_addr,
                    const detail::TraceEntry& root) {
        blas_stack_.clear();
        blas_stack_.push_back(root);
        while (!blas_stack_.empty()) {
            const detail::TraceEntry e = blas_stack_.back();
            blas_stack_.pop_back();
            if (e.t > t_max_) {
                checkpoint_or_drop(e);
                continue;
            }
            const detail::ResolvedRef ref = detail::resolve_address(as_, e.addr);
            if (ref.kind == detail::ResolvedRef::Kind::BlasNode) {
                expand_blas_node(local, uint32_t(ref.index), leaf_addr);
            } else if (ref.kind == detail::ResolvedRef::Kind::BlasPayload) {
                visit_blas_payload(local, ref.index, gid, leaf_addr);
            } else {
                throw StructureMismatchError("non-BLAS ref inside BLAS traversal");
            }
        }
    }

    void expand_blas_node(const Ray& local, uint32_t node_id, uint64_t leaf_addr) {
        record_fetch(*counters_, as_.layout.blas_node_addr(node_id),
                     uint32_t(as_.layout.node_stride));
        ++counters_->internal_node_fetches;
        const BvhNode& node = as_.blas_bvh.nodes[node_id];
        detail::TraceEntry pending[kMaxArity];
        uint32_t n = 0;
        for (uint32_t s = 0; s < node.child_count; ++s) {
            const BvhChild& c = node.child[s];
            ++counters_->box_tests;
            const auto entry = ray_aabb(local, c.bounds, {resume_.t, kInf});
            if (!entry) continue;
            const uint64_t addr = c.is_leaf() ? as_.layout.blas_tri_addr(c.index)
                                              : as_.layout.blas_node_addr(c.index);
            const detail::TraceEntry te{*entry, addr, leaf_addr};
            if (*entry > t_max_) {
                checkpoint_or_drop(te);
                continue;
            }
            pending[n++] = te;
        }
        std::sort(pending, pending + n, [](const detail::TraceEntry& a, const detail::TraceEntry& b) {
            return a.t != b.t ? a.t > b.t : a.addr > b.addr;
        });
        for (uint32_t i = 0; i < n; ++i) {
            if (blas_stack_.size() >= limits_.max_stack_depth)
                throw TraversalError("BLAS traversal stack exceeds configured depth");
            blas_stack_.push_back(pending[i]);
        }
    }

    void visit_blas_payload(const Ray& local, uint64_t order_pos, uint32_t gid,
                            uint64_t leaf_addr) {
        const auto it = as_.blas_leaf_counts.find(order_pos);
        const uint32_t count = it != as_.blas_leaf_counts.end() ? it->second : 1;
        record_fetch(*counters_, as_.layout.blas_tri_addr(order_pos), count * 40);
        ++counters_->prim_fetches;
        for (uint64_t pos = order_pos; pos < order_pos + count; ++pos) {
            const auto& f = as_.blas_mesh.faces[as_.blas_bvh.prim_order[size_t(pos)]];
            ++counters_->tri_tests;
            const auto t = ray_triangle(local, as_.blas_mesh.vertices[f[0]],
                                        as_.blas_mesh.vertices[f[1]],
                                        as_.blas_mesh.vertices[f[2]], {0.0, t_max_});
            if (t) offer(gid, as_.layout.blas_tri_addr(pos), leaf_addr);
        }
    }

    // ---- monolithic payload --------------------------------------------------

    void visit_mono_payload(uint64_t order_pos) {
        const auto it = as_.top_leaf_counts.find(order_pos);
        const uint32_t count = it != as_.top_leaf_counts.end() ? it->second : 1;
        record_fetch(*counters_, as_.layout.tri_addr(order_pos), count * 40);
        ++counters_->prim_fetches;
        for (uint64_t pos = order_pos; pos < order_pos + count; ++pos) {
            const MonoTri& tri = as_.tris[as_.bvh.prim_order[size_t(pos)]];
            ++counters_->tri_tests;
            const auto t = ray_triangle(ray_, tri.v0, tri.v1, tri.v2, {0.0, t_max_});
            if (t) offer(tri.gaussian_id, as_.layout.tri_addr(pos), kNoTlasLeaf);
        }
    }

    // ---- any-hit --------------------------------------------------------------

    // Canonical per-Gaussian hit, offered at most once per round. The proxy
    // hit only triggers the offer; the reported distance is the ellipsoid
    // entry, identical across proxy kinds and rounds.
    void offer(uint32_t gid, uint64_t prim_addr, uint64_t tlas_leaf) {
        if (seen(gid)) return;
        mark_seen(gid);
        const auto t = ellipsoid_hit_t(scene_[gid], as_.kappa[gid], ray_);
        if (!t) return;  // proxy false positive
        const HitKey key{*t, gid};
        if (key <= resume_) return;  // consumed in an earlier round
        if (hit_list_) {
            if (hit_list_->size() >= limits_.hit_list_capacity)
                throw CapacityError("single-round hit list capacity exceeded");
            hit_list_->push_back({*t, gid});
            return;
        }
        if (*t > t_max_) {
            // valid hit beyond the current cull distance; a later round picks
            // it up from the checkpoint buffer
            if (ctx_) ctx_->checkpoint_push(prim_addr, tlas_leaf, *t);
            return;
        }
        const AnyHitVerdict verdict = kbuf_->insert({*t, gid});
        if (verdict.has_rejected) {
            ++counters_->evictions;
            if (ctx_) ctx_->evict_push(verdict.rejected);
        }
        if (verdict.action == AnyHitVerdict::Action::Accept) t_max_ = verdict.new_t_max;
    }

    const Scene& scene_;
    const AccelStructure& as_;
    TraceLimits limits_;

    Ray ray_;
    HitKey resume_{0.0, ~0u};
    double t_max_ = kInf;
    RayCounters* counters_ = nullptr;
    CheckpointContext* ctx_ = nullptr;
    KBuffer* kbuf_ = nullptr;
    std::vector<HitRecord>* hit_list_ = nullptr;
    std::vector<HitRecord> single_round_hits_;

    std::vector<detail::TraceEntry> stack_;
    std::vector<detail::TraceEntry> blas_stack_;
    std::vector<uint32_t> origin_stack_;
    std::vector<uint32_t> seen_stamp_;
    uint32_t stamp_ = 0;
    double proxy_circum2_ = 1.0;
};

// Free-function forms of the two tracing operations.
inline RoundResult trace_round(const Scene& scene, const AccelStructure& as, const Ray& ray,
                               const HitKey& resume, KBuffer& kbuf, RayCounters& counters,
                               CheckpointContext* ctx = nullptr) {
    Traverser tr(scene, as);
    return tr.trace_round(ray, resume, kbuf, counters, ctx);
}

inline std::vector<HitRecord> trace_single_round(const Scene& scene, const AccelStructure& as,
                                                 const Ray& ray, RayCounters& counters) {
    Traverser tr(scene, as);
    return tr.trace_single_round(ray, counters);
}

}  // namespace grtx
