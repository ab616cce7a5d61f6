// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/math.hpp>

namespace grtx {

struct Aabb {
    Vec3 min{kInf, kInf, kInf};
    Vec3 max{-kInf, -kInf, -kInf};

    bool empty() const { return min.x > max.x; }

    void extend(const Vec3& p) {
        min = cwise_min(min, p);
        max = cwise_max(max, p);
    }
    void extend(const Aabb& b) {
        min = cwise_min(min, b.min);
        max = cwise_max(max, b.max);
    }

    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extent() const { return max - min; }

    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
               p.z >= min.z && p.z <= max.z;
    }
    // Closed containment; exact comparisons, the builders guarantee nesting
    // without epsilons.
    bool contains(const Aabb& b) const {
        return b.min.x >= min.x && b.min.y >= min.y && b.min.z >= min.z &&
               b.max.x <= max.x && b.max.y <= max.y && b.max.z <= max.z;
    }

    int longest_axis() const {
        const Vec3 e = extent();
        if (e.x >= e.y && e.x >= e.z) return 0;
        return e.y >= e.z ? 1 : 2;
    }

    bool operator==(const Aabb& o) const = default;
};

}  // namespace grtx
