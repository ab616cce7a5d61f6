// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>

#include <algorithm>
#include <cstdint>
#include <vector>

namespace grtx {

// Sort key for hits: (t, id) lexicographic. The id tiebreak makes ordering
// and round-boundary exclusion exact even for co-located Gaussians.
struct HitKey {
    double t = 0.0;
    uint32_t id = 0;

    friend bool operator<(const HitKey& a, const HitKey& b) {
        return a.t != b.t ? a.t < b.t : a.id < b.id;
    }
    friend bool operator==(const HitKey& a, const HitKey& b) = default;
    friend bool operator<=(const HitKey& a, const HitKey& b) { return a < b || a == b; }
};

struct HitRecord {
    double t_hit = 0.0;
    uint32_t prim_id = 0;

    HitKey key() const { return {t_hit, prim_id}; }
};

// Any-hit outcome. Ignore keeps traversing with the same interval (the hit
// was absorbed into the buffer, possibly displacing a farther entry); Accept
// reports the hit so the traversal shrinks t_max to it. In both cases
// `rejected` holds the record pushed out, if any.
struct AnyHitVerdict {
    enum class Action { Ignore, Accept } action = Action::Ignore;
    double new_t_max = 0.0;  // meaningful for Accept
    bool has_rejected = false;
    HitRecord rejected;
};

// Per-ray buffer of the k closest pending hits, kept sorted ascending by
// (t, id). Duplicate prim ids indicate a traversal bug upstream.
class KBuffer {
public:
    explicit KBuffer(size_t capacity) : capacity_(capacity) {}

    size_t capacity() const { return capacity_; }
    size_t size() const { return entries_.size(); }
    bool full() const { return entries_.size() == capacity_; }
    bool empty() const { return entries_.empty(); }
    const HitRecord& operator[](size_t i) const { return entries_[i]; }
    const HitRecord& back() const { return entries_.back(); }
    const std::vector<HitRecord>& entries() const { return entries_; }

    void clear() { entries_.clear(); }

    AnyHitVerdict insert(const HitRecord& hit) {
        for (const HitRecord& e : entries_)
            if (e.prim_id == hit.prim_id)
                throw TraversalError("kbuffer: duplicate prim id " +
                                     std::to_string(hit.prim_id));
        AnyHitVerdict v;
        if (!full()) {
            insert_sorted(hit);
            return v;  // Ignore, nothing rejected
        }
        if (hit.key() < entries_.back().key()) {
            v.rejected = entries_.back();
            v.has_rejected = true;
            entries_.pop_back();
            insert_sorted(hit);
            return v;  // Ignore; former last entry was displaced
        }
        // At or beyond the farthest buffered hit: report it so t_max shrinks.
        v.action = AnyHitVerdict::Action::Accept;
        v.new_t_max = hit.t_hit;
        v.rejected = hit;
        v.has_rejected = true;
        return v;
    }

private:
    void insert_sorted(const HitRecord& hit) {
        const auto pos = std::lower_bound(
            entries_.begin(), entries_.end(), hit,
            [](const HitRecord& a, const HitRecord& b) { return a.key() < b.key(); });
        entries_.insert(pos, hit);
    }

    size_t capacity_;
    std::vector<HitRecord> entries_;
};

}  // namespace grtx
