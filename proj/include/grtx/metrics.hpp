// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace grtx {

struct FetchEvent {
    uint64_t address = 0;
    uint32_t size = 0;
};

// Per-ray traversal instrumentation. `node_fetches` counts every structure
// fetch (internal nodes, instance records, primitive blocks); the finer
// split is kept alongside. The unique set is per ray, matching the
// redundancy the multi-round analysis measures.
struct RayCounters {
    uint64_t node_fetches = 0;
    uint64_t internal_node_fetches = 0;
    uint64_t instance_fetches = 0;
    uint64_t prim_fetches = 0;
    uint64_t box_tests = 0;
    uint64_t tri_tests = 0;
    uint64_t sphere_tests = 0;
    uint64_t rounds = 0;
    uint64_t checkpoint_seeds = 0;
    uint64_t evictions = 0;
    uint64_t overflow_fallbacks = 0;
    std::unordered_set<uint64_t> unique_nodes;
    std::vector<FetchEvent>* trace = nullptr;  // optional, owned elsewhere
};

inline void record_fetch(RayCounters& c, uint64_t address, uint32_t size) {
    ++c.node_fetches;
    c.unique_nodes.insert(address);
    if (c.trace) c.trace->push_back({address, size});
}

// Frame-level aggregate; merging is commutative and associative. Per-ray
// unique counts are summed, and a frame-global unique set is kept as well
// (the two answer different redundancy questions).
struct FrameStats {
    uint64_t rays = 0;
    uint64_t node_fetches = 0;
    uint64_t internal_node_fetches = 0;
    uint64_t instance_fetches = 0;
    uint64_t prim_fetches = 0;
    uint64_t box_tests = 0;
    uint64_t tri_tests = 0;
    uint64_t sphere_tests = 0;
    uint64_t rounds = 0;
    uint64_t checkpoint_seeds = 0;
    uint64_t evictions = 0;
    uint64_t overflow_fallbacks = 0;
    uint64_t unique_node_fetches = 0;  // sum over rays of per-ray unique counts
    uint64_t blended = 0;
    uint64_t alpha_skipped = 0;
    std::unordered_set<uint64_t> global_unique;

    void absorb(const RayCounters& c) {
        ++rays;
        node_fetches += c.node_fetches;
        internal_node_fetches += c.internal_node_fetches;
        instance_fetches += c.instance_fetches;
        prim_fetches += c.prim_fetches;
        box_tests += c.box_tests;
        tri_tests += c.tri_tests;
        sphere_tests += c.sphere_tests;
        rounds += c.rounds;
        checkpoint_seeds += c.checkpoint_seeds;
        evictions += c.evictions;
        overflow_fallbacks += c.overflow_fallbacks;
        unique_node_fetches += c.unique_nodes.size();
        global_unique.insert(c.unique_nodes.begin(), c.unique_nodes.end());
    }

    void merge(const FrameStats& o) {
        rays += o.rays;
        node_fetches += o.node_fetches;
        internal_node_fetches += o.internal_node_fetches;
        instance_fetches += o.instance_fetches;
        prim_fetches += o.prim_fetches;
        box_tests += o.box_tests;
        tri_tests += o.tri_tests;
        sphere_tests += o.sphere_tests;
        rounds += o.rounds;
        checkpoint_seeds += o.checkpoint_seeds;
        evictions += o.evictions;
        overflow_fallbacks += o.overflow_fallbacks;
        unique_node_fetches += o.unique_node_fetches;
        blended += o.blended;
        alpha_skipped += o.alpha_skipped;
        global_unique.insert(o.global_unique.begin(), o.global_unique.end());
    }
};

// ---- cache model ------------------------------------------------------------

struct CacheLevelConfig {
    std::string name = "l1";
    uint64_t capacity = 128 * 1024;
    uint64_t line_size = 128;
    uint64_t ways = 16;
};

// Set-associative LRU hierarchy replayed over a recorded fetch trace. A miss
// at level i probes level i+1. This is a locality trend model driven by the
// serialized structure layout, not a GPU memory system.
class CacheModel {
public:
    explicit CacheModel(std::vector<CacheLevelConfig> configs) {
        for (const CacheLevelConfig& cfg : configs) {
            if (cfg.line_size == 0 || cfg.ways == 0 || cfg.capacity % (cfg.line_size * cfg.ways) != 0)
                throw ShapeError("cache level '" + cfg.name +
                                 "': line size * ways must divide capacity");
            Level lv;
            lv.cfg = cfg;
            lv.sets = cfg.capacity / (cfg.line_size * cfg.ways);
            lv.tags.assign(lv.sets * cfg.ways, kEmpty);
            lv.stamps.assign(lv.sets * cfg.ways, 0);
            levels_.push_back(std::move(lv));
        }
    }

    size_t level_count() const { return levels_.size(); }
    uint64_t hits(size_t level) const { return levels_[level].hits; }
    uint64_t misses(size_t level) const { return levels_[level].misses; }
    const CacheLevelConfig& config(size_t level) const { return levels_[level].cfg; }

    double hit_rate(size_t level) const {
        const uint64_t total = levels_[level].hits + levels_[level].misses;
        return total == 0 ? 0.0 : double(levels_[level].hits) / double(total);
    }

    // Touches every line the [address, address+size) range spans.
    void access(uint64_t address, uint64_t size) {
        if (size == 0) return;
        const uint64_t line = levels_.empty() ? 128 : levels_[0].cfg.line_size;
        const uint64_t first = address / line;
        const uint64_t last = (address + size - 1) / line;
        for (uint64_t ln = first; ln <= last; ++ln) access_line(ln * line);
    }

private:
    static constexpr uint64_t kEmpty = ~0ull;

    struct Level {
        CacheLevelConfig cfg;
        uint64_t sets = 0;
        std::vector<uint64_t> tags;
        std::vector<uint64_t> stamps;
        uint64_t hits = 0;
        uint64_t misses = 0;
    };

    void access_line(uint64_t line_address) {
        ++tick_;
        for (Level& lv : levels_) {
            const uint64_t block = line_address / lv.cfg.line_size;
            const uint64_t set = block % lv.sets;
            const uint64_t tag = block / lv.sets;
            uint64_t* tags = &lv.tags[set * lv.cfg.ways];
            uint64_t* stamps = &lv.stamps[set * lv.cfg.ways];
            uint64_t victim = 0;
            bool hit = false;
            for (uint64_t w = 0; w < lv.cfg.ways; ++w) {
                if (tags[w] == tag) {
                    stamps[w] = tick_;
                    ++lv.hits;
                    hit = true;
                    break;
                }
                if (tags[w] == kEmpty) {
                    victim = w;  // prefer an empty way; scan continues in case of a hit
                } else if (tags[victim] != kEmpty && stamps[w] < stamps[victim]) {
                    victim = w;
                }
            }
            if (hit) return;  // upper-level hit does not probe lower levels
            ++lv.misses;
            tags[victim] = tag;
            stamps[victim] = tick_;
        }
    }

    std::vector<Level> levels_;
    uint64_t tick_ = 0;
};

// Global-memory footprint of the replay buffers: per-ray capacities times
// the serialized entry sizes (20-byte checkpoint, 8-byte eviction).
inline uint64_t buffer_memory_report(uint64_t ray_count, uint64_t checkpoint_capacity,
                                     uint64_t evict_capacity) {
    return ray_count * (checkpoint_capacity * 20 + evict_capacity * 8);
}

}  // namespace grtx
