// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/kbuffer.hpp>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

namespace grtx {

constexpr uint64_t kNoTlasLeaf = ~0ull;

// A node (or primitive record) that intersected the ray but fell beyond the
// round's t_max. `node` is the serialized-layout address; `tlas_leaf` is the
// owning instance record's address when the node lives in a BLAS, else the
// sentinel. Serialized form is exactly 20 bytes little-endian.
struct CheckpointEntry {
    uint64_t node = 0;
    uint64_t tlas_leaf = kNoTlasLeaf;
    double t_hit = 0.0;  // box/primitive entry distance, serialized as float32
};

// A hit rejected from a full k-buffer, awaiting a second chance. Serialized
// form is exactly 8 bytes little-endian.
struct EvictionEntry {
    uint32_t prim_id = 0;
    double t_hit = 0.0;  // serialized as float32
};

inline void serialize_entry(const CheckpointEntry& e, unsigned char out[20]) {
    const float t = float(e.t_hit);
    std::memcpy(out, &e.node, 8);
    std::memcpy(out + 8, &e.tlas_leaf, 8);
    std::memcpy(out + 16, &t, 4);
}

inline void serialize_entry(const EvictionEntry& e, unsigned char out[8]) {
    const float t = float(e.t_hit);
    std::memcpy(out, &e.prim_id, 4);
    std::memcpy(out + 4, &t, 4);
}

// Per-ray replay state: ping-pong checkpoint buffers plus the eviction
// buffer. Thread-confined; one context per in-flight ray.
class CheckpointContext {
public:
    explicit CheckpointContext(size_t checkpoint_capacity = 1024,
                               size_t evict_capacity = 1024)
        : ckpt_capacity_(checkpoint_capacity), evict_capacity_(evict_capacity) {}

    bool replay() const { return replay_; }
    bool root_restart_pending() const { return overflowed_; }
    const std::vector<CheckpointEntry>& seeds() const { return src_; }
    const std::vector<CheckpointEntry>& pending() const { return dst_; }
    const std::vector<EvictionEntry>& evictions() const { return evict_; }
    uint64_t structure_id() const { return structure_id_; }
    void bind_structure(uint64_t build_id) { structure_id_ = build_id; }

    // Node failed the t_max test while still intersecting the ray. On
    // overflow the entry is dropped and the ray falls back to a root restart
    // next round, which re-derives everything the buffer would have carried.
    void checkpoint_push(uint64_t node, uint64_t tlas_leaf, double t_hit) {
        if (dst_.size() >= ckpt_capacity_) {
            overflowed_ = true;
            return;
        }
        dst_.push_back({node, tlas_leaf, t_hit});
    }

    void evict_push(const HitRecord& rejected) {
        if (evict_.size() >= evict_capacity_) {
            overflowed_ = true;
            return;
        }
        evict_.push_back({rejected.prim_id, rejected.t_hit});
    }

    // Round boundary: sort the eviction buffer by (t, id), seed the k-buffer
    // with the closest entries still beyond `resume` and retain the
    // remainder for later rounds (evicted hits are not rediscoverable by
    // replay, their subtrees were already consumed). Entries at or before
    // `resume` are stale copies of hits that were blended after a replayed
    // subtree re-found them; they are dropped. Swaps the ping-pong buffers;
    // seeds are ordered ascending by recorded t so near subtrees replay
    // first. Returns the number of seeded hits.
    //
    // After an overflow the checkpoint set is incomplete, so it is discarded
    // and the replay flag stays false: the round restarts from the root,
    // which subsumes every dropped entry. Whatever survives in the eviction
    // buffer still seeds the k-buffer (the root traversal would re-find
    // those Gaussians anyway; seeding keeps them deduplicated).
    size_t prepare_round(KBuffer& kbuf, const HitKey& resume = HitKey{0.0, ~0u}) {
        kbuf.clear();
        std::sort(evict_.begin(), evict_.end(), [](const EvictionEntry& a, const EvictionEntry& b) {
            return HitKey{a.t_hit, a.prim_id} < HitKey{b.t_hit, b.prim_id};
        });
        evict_.erase(std::unique(evict_.begin(), evict_.end(),
                                 [](const EvictionEntry& a, const EvictionEntry& b) {
                                     return a.prim_id == b.prim_id && a.t_hit == b.t_hit;
                                 }),
                     evict_.end());
        size_t stale = 0;
        while (stale < evict_.size() &&
               HitKey{evict_[stale].t_hit, evict_[stale].prim_id} <= resume)
            ++stale;
        evict_.erase(evict_.begin(), evict_.begin() + std::ptrdiff_t(stale));
        const size_t seeded = std::min(kbuf.capacity(), evict_.size());
        for (size_t i = 0; i < seeded; ++i) kbuf.insert({evict_[i].t_hit, evict_[i].prim_id});
        evict_.erase(evict_.begin(), evict_.begin() + std::ptrdiff_t(seeded));

        std::swap(src_, dst_);
        dst_.clear();
        const bool fallback = overflowed_;
        if (fallback) {
            src_.clear();
            overflowed_ = false;
            ++overflow_fallbacks_;
        }
        std::stable_sort(src_.begin(), src_.end(),
                         [](const CheckpointEntry& a, const CheckpointEntry& b) {
                             return a.t_hit < b.t_hit;
                         });
        replay_ = !fallback && (!src_.empty() || seeded > 0);
        // after the first round, empty buffers prove the ray is exhausted:
        // every undelivered hit would have to sit in the eviction buffer or
        // under a checkpointed node
        exhausted_ = !first_round_ && !fallback && src_.empty() && seeded == 0;
        first_round_ = false;
        return seeded;
    }

    // True when the previous round left nothing to replay and nothing
    // evicted: no further traversal can produce a hit.
    bool exhausted() const { return exhausted_; }

    uint64_t overflow_fallbacks() const { return overflow_fallbacks_; }

    std::vector<unsigned char> dump_checkpoints() const {
        std::vector<unsigned char> out(src_.size() * 20);
        for (size_t i = 0; i < src_.size(); ++i) serialize_entry(src_[i], out.data() + i * 20);
        return out;
    }
    std::vector<unsigned char> dump_pending_checkpoints() const {
        std::vector<unsigned char> out(dst_.size() * 20);
        for (size_t i = 0; i < dst_.size(); ++i) serialize_entry(dst_[i], out.data() + i * 20);
        return out;
    }
    std::vector<unsigned char> dump_evictions() const {
        std::vector<unsigned char> out(evict_.size() * 8);
        for (size_t i = 0; i < evict_.size(); ++i) serialize_entry(evict_[i], out.data() + i * 8);
        return out;
    }

private:
    size_t ckpt_capacity_;
    size_t evict_capacity_;
    std::vector<CheckpointEntry> src_;
    std::vector<CheckpointEntry> dst_;
    std::vector<EvictionEntry> evict_;
    bool replay_ = false;
    bool overflowed_ = false;
    bool exhausted_ = false;
    bool first_round_ = true;
    uint64_t overflow_fallbacks_ = 0;
    uint64_t structure_id_ = 0;
};

}  // namespace grtx
