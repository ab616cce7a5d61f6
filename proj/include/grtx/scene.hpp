// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/aabb.hpp>
#include <grtx/error.hpp>
#include <grtx/gaussian.hpp>

#include <cstdint>
#include <vector>

namespace grtx {

// Immutable after construction; primitive id == index. Safe to share across
// render workers.
struct Scene {
    std::vector<Gaussian> gaussians;

    size_t size() const { return gaussians.size(); }
    const Gaussian& operator[](size_t i) const { return gaussians[i]; }

    int sh_degree() const { return gaussians.empty() ? 0 : gaussians.front().sh_degree(); }

    Aabb bounds() const {
        Aabb b;
        for (const Gaussian& g : gaussians) b.extend(g.mean);
        return b;
    }
};

inline void validate_gaussian(const Gaussian& g, size_t index) {
    const auto fail = [index](const std::string& what) {
        throw DataError("gaussian " + std::to_string(index) + ": " + what);
    };
    if (!is_finite(g.mean)) fail("non-finite mean");
    if (!is_finite(g.scale) || !std::isfinite(g.opacity)) fail("non-finite parameter");
    if (!(g.scale.x > 0 && g.scale.y > 0 && g.scale.z > 0)) fail("non-positive scale");
    if (g.scale.x < 1e-8 || g.scale.y < 1e-8 || g.scale.z < 1e-8)
        fail("degenerate scale below 1e-8");
    if (!(g.opacity > 0.0 && g.opacity <= 1.0)) fail("opacity outside (0, 1]");
    if (std::fabs(g.rotation.norm() - 1.0) > 1e-6) fail("quaternion norm off unit by > 1e-6");
    if (g.sh_degree() < 0) fail("sh coefficient count is not (d+1)^2 for d in 0..3");
    for (const Vec3& c : g.sh)
        if (!is_finite(c)) fail("non-finite sh coefficient");
}

inline void validate_scene(const Scene& scene) {
    for (size_t i = 0; i < scene.gaussians.size(); ++i) validate_gaussian(scene.gaussians[i], i);
}

namespace detail {

// Project onto the float32 grid such that another normalize+snap maps the
// value to itself. Loading a saved quaternion then reproduces it bit-exactly.
inline bool snap_quat_fixpoint(Quat& q) {
    Quat w{snap_f32(q.normalized().w), snap_f32(q.normalized().x),
           snap_f32(q.normalized().y), snap_f32(q.normalized().z)};
    for (int i = 0; i < 8; ++i) {
        const Quat n = w.normalized();
        const Quat s{snap_f32(n.w), snap_f32(n.x), snap_f32(n.y), snap_f32(n.z)};
        if (s == w) {
            q = w;
            return true;
        }
        w = s;
    }
    return false;
}

}  // namespace detail

// Deterministic synthetic scene: means uniform in `bounds`, rotations
// uniform over the rotation group, scales uniform in `scale_range`,
// opacities uniform in [0.2, 1). Generation is strictly sequential per
// Gaussian, so the same seed with a larger count extends the scene by a
// shared prefix. All parameters are storage-exact (float32 grid,
// activation-stable), so PLY round trips reproduce the scene bit-for-bit.
inline Scene generate_synthetic(size_t count, uint64_t seed, const Aabb& bounds,
                                double scale_lo, double scale_hi, int sh_degree = 1) {
    if (count < 1) throw DataError("generate_synthetic: count must be >= 1");
    if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo))
        throw DataError("generate_synthetic: invalid scale range");
    if (sh_degree < 0 || sh_degree > 3)
        throw DataError("generate_synthetic: sh degree must be in 0..3");

    Rng rng(seed);
    Scene scene;
    scene.gaussians.reserve(count);
    const size_t n_sh = size_t(sh_degree + 1) * size_t(sh_degree + 1);

    for (size_t i = 0; i < count; ++i) {
        Gaussian g;
        g.mean = snap_f32(Vec3{rng.uniform(bounds.min.x, bounds.max.x),
                               rng.uniform(bounds.min.y, bounds.max.y),
                               rng.uniform(bounds.min.z, bounds.max.z)});
        for (int a = 0; a < 3; ++a)
            g.scale[a] = std::exp(snap_f32(std::log(rng.uniform(scale_lo, scale_hi))));
        for (;;) {
            g.rotation = rng.uniform_quaternion();
            if (detail::snap_quat_fixpoint(g.rotation)) break;
        }
        g.opacity = logistic(snap_f32(logit(rng.uniform(0.2, 1.0))));

        g.sh.resize(n_sh);
        // dc term maps to a mean color in [0.1, 0.9]; higher bands stay small
        // enough that evaluated colors remain inside [0, 1].
        for (int ch = 0; ch < 3; ++ch)
            g.sh[0][ch] = snap_f32((rng.uniform(0.1, 0.9) - 0.5) / sh::kC0);
        for (size_t m = 1; m < n_sh; ++m)
            for (int ch = 0; ch < 3; ++ch)
                g.sh[m][ch] = snap_f32(rng.uniform(-0.05, 0.05));

        scene.gaussians.push_back(std::move(g));
    }
    validate_scene(scene);
    return scene;
}

}  // namespace grtx
