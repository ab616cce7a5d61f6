// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/accel.hpp>
#include <grtx/gaussian.hpp>

#include <optional>

namespace grtx {

// Active traversal range. Boxes are tested against the closed segment
// [t_min, t_max]; primitive hits are accepted on the half-open interval
// (t_min, t_max], with an id tiebreak applied by the traversal layer.
struct Interval {
    double t_min = 0.0;
    double t_max = kInf;

    bool valid() const { return t_min < t_max; }
};

// Slab test. Zero direction components yield +-inf slab distances through
// IEEE arithmetic; a ray lying exactly on a parallel slab plane (the 0 * inf
// case) counts as inside, so grazing contact stays conservative. Returns the
// entry distance clamped to t_min.
inline std::optional<double> ray_aabb(const Ray& ray, const Aabb& box, const Interval& iv) {
    double t_lo = iv.t_min;
    double t_hi = iv.t_max;
    for (int a = 0; a < 3; ++a) {
        if (ray.direction[a] == 0.0) {
            if (ray.origin[a] < box.min[a] || ray.origin[a] > box.max[a]) return std::nullopt;
            continue;  // slab does not constrain t
        }
        const double inv = 1.0 / ray.direction[a];
        const double t0 = (box.min[a] - ray.origin[a]) * inv;
        const double t1 = (box.max[a] - ray.origin[a]) * inv;
        t_lo = std::fmax(t_lo, std::fmin(t0, t1));
        t_hi = std::fmin(t_hi, std::fmax(t0, t1));
    }
    if (t_lo > t_hi) return std::nullopt;
    return t_lo;
}

// Moller-Trumbore with inclusive barycentric bounds (epsilon slack keeps
// shared edges watertight; proxies tolerate false positives, never false
// negatives). Accepts t on (t_min, t_max].
inline std::optional<double> ray_triangle(const Ray& ray, const Vec3& v0, const Vec3& v1,
                                          const Vec3& v2, const Interval& iv) {
    constexpr double kEps = 1e-12;
    const Vec3 e1 = v1 - v0;
    const Vec3 e2 = v2 - v0;
    const Vec3 p = cross(ray.direction, e2);
    const double det = dot(e1, p);
    if (std::fabs(det) < kEps) return std::nullopt;  // parallel or degenerate
    const double inv_det = 1.0 / det;
    const Vec3 s = ray.origin - v0;
    const double u = dot(s, p) * inv_det;
    if (u < -kEps || u > 1.0 + kEps) return std::nullopt;
    const Vec3 q = cross(s, e1);
    const double v = dot(ray.direction, q) * inv_det;
    if (v < -kEps || u + v > 1.0 + kEps) return std::nullopt;
    const double t = dot(e2, q) * inv_det;
    if (!(t > iv.t_min && t <= iv.t_max)) return std::nullopt;
    return t;
}

// Both roots of |o + t d| = 1, ascending. The direction need not be unit
// length (instance-local rays are never renormalized, so t matches world
// space). Numerically stable form of the quadratic.
inline bool unit_sphere_roots(const Ray& ray, double& t0, double& t1) {
    const double a = dot(ray.direction, ray.direction);
    const double b = dot(ray.origin, ray.direction);
    const double c = dot(ray.origin, ray.origin) - 1.0;
    const double disc = b * b - a * c;
    if (disc < 0.0 || a == 0.0) return false;
    const double root = std::sqrt(disc);
    const double q = b >= 0.0 ? -(b + root) : -(b - root);
    if (q == 0.0) {  // grazing contact at one point
        t0 = t1 = -b / a;
        return true;
    }
    t0 = q / a;
    t1 = c / q;
    if (t0 > t1) std::swap(t0, t1);
    return true;
}

// Smallest root of the unit-sphere quadratic inside (t_min, t_max].
inline std::optional<double> ray_unit_sphere(const Ray& ray, const Interval& iv) {
    double t0, t1;
    if (!unit_sphere_roots(ray, t0, t1)) return std::nullopt;
    if (t0 > iv.t_min && t0 <= iv.t_max) return t0;
    if (t1 > iv.t_min && t1 <= iv.t_max) return t1;
    return std::nullopt;
}

// Origin mapped affinely, direction mapped linearly and NOT renormalized:
// the t parameter is shared between world and local space.
inline Ray transform_ray(const Ray& ray, const Affine& local_from_world) {
    return {local_from_world.apply_point(ray.origin),
            local_from_world.apply_vector(ray.direction)};
}

// Canonical per-(Gaussian, ray) hit distance: the entry point of the cutoff
// ellipsoid, or the exit point when the origin lies inside it. This value is
// independent of traversal state, so every proxy kind and every tracing
// round reports the same key for the same Gaussian, and blending order does
// not depend on the acceleration path.
inline std::optional<double> ellipsoid_hit_t(const Gaussian& g, double kappa_eff,
                                             const Ray& world_ray) {
    const Affine inv = world_from_local(g, kappa_eff).second;
    const Ray local = transform_ray(world_ray, inv);
    double t0, t1;
    if (!unit_sphere_roots(local, t0, t1)) return std::nullopt;
    if (t0 > 0.0) return t0;
    if (t1 > 0.0) return t1;
    return std::nullopt;
}

}  // namespace grtx
