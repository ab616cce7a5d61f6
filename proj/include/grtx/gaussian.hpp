// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>
#include <grtx/math.hpp>

#include <cstdint>
#include <vector>

namespace grtx {

// One anisotropic Gaussian primitive. `scale` holds per-axis standard
// deviations, `opacity` and `scale` are stored post-activation. All fields
// lie on the float32 grid (see ply.hpp), which makes save/load round trips
// bit-exact.
struct Gaussian {
    Vec3 mean;
    Quat rotation;           // near-unit (|norm - 1| <= 1e-6)
    Vec3 scale{1, 1, 1};     // strictly positive
    double opacity = 1.0;    // in (0, 1]
    std::vector<Vec3> sh;    // (degree+1)^2 coefficients, rgb per basis index

    int sh_degree() const {
        switch (sh.size()) {
            case 1: return 0;
            case 4: return 1;
            case 9: return 2;
            case 16: return 3;
            default: return -1;
        }
    }
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length in world space; instance-local rays are not renormalized

    Vec3 at(double t) const { return origin + direction * t; }
};

// Sigma = R * S * S^T * R^T with S = diag(scale).
inline Mat3 covariance(const Gaussian& g) {
    const Mat3 r = rotation_matrix(g.rotation);
    Mat3 cov;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            cov.m[i][j] = r.m[i][0] * r.m[j][0] * g.scale.x * g.scale.x +
                          r.m[i][1] * r.m[j][1] * g.scale.y * g.scale.y +
                          r.m[i][2] * r.m[j][2] * g.scale.z * g.scale.z;
        }
    }
    return cov;
}

// Maps world offsets from the mean into the whitened frame where the
// Gaussian is a unit isotropic one: y = S^-1 R^T (x - mean).
inline Vec3 whiten(const Gaussian& g, const Vec3& world_offset) {
    const Mat3 rt = rotation_matrix(g.rotation).transposed();
    const Vec3 local = rt * world_offset;
    return {local.x / g.scale.x, local.y / g.scale.y, local.z / g.scale.z};
}

// G(x) = exp(-1/2 (x-mean)^T Sigma^-1 (x-mean)), in (0, 1].
inline double gaussian_response(const Gaussian& g, const Vec3& x) {
    const Vec3 y = whiten(g, x - g.mean);
    return std::exp(-0.5 * dot(y, y));
}

// Ray parameter of maximum response:
//   t = (mean - o)^T Sigma^-1 d / (d^T Sigma^-1 d).
// Computed in the whitened frame, where it is an ordinary projection.
inline double max_response_t(const Gaussian& g, const Ray& ray) {
    const Vec3 yo = whiten(g, ray.origin - g.mean);
    const Vec3 yd = whiten(g, ray.direction);
    const double denom = dot(yd, yd);
    if (denom < 1e-20)
        throw DegenerateGeometryError("max_response_t: degenerate direction/covariance");
    return -dot(yo, yd) / denom;
}

// alpha = opacity * G(o + t_alpha * d), in (0, opacity].
inline double particle_alpha(const Gaussian& g, const Ray& ray) {
    const double t = max_response_t(g, ray);
    return g.opacity * gaussian_response(g, ray.at(t));
}

// Real spherical harmonics, bands 0..3, in the layout used by 3DGS assets.
namespace sh {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};
}  // namespace sh

// rgb = max(0, 0.5 + sum_lm c_lm Y_lm(dir)). `dir` must be unit length.
inline Vec3 eval_sh_color(const Vec3* coeffs, size_t count, const Vec3& dir, int degree) {
    if (degree < 0 || degree > 3)
        throw ShapeError("eval_sh_color: degree must be in 0..3");
    const size_t want = size_t(degree + 1) * size_t(degree + 1);
    if (count < want)
        throw ShapeError("eval_sh_color: expected " + std::to_string(want) +
                         " coefficients, got " + std::to_string(count));

    Vec3 c = coeffs[0] * sh::kC0;
    if (degree >= 1) {
        const double x = dir.x, y = dir.y, z = dir.z;
        c += coeffs[1] * (-sh::kC1 * y);
        c += coeffs[2] * (sh::kC1 * z);
        c += coeffs[3] * (-sh::kC1 * x);
        if (degree >= 2) {
            const double xx = x * x, yy = y * y, zz = z * z;
            const double xy = x * y, yz = y * z, xz = x * z;
            c += coeffs[4] * (sh::kC2[0] * xy);
            c += coeffs[5] * (sh::kC2[1] * yz);
            c += coeffs[6] * (sh::kC2[2] * (2.0 * zz - xx - yy));
            c += coeffs[7] * (sh::kC2[3] * xz);
            c += coeffs[8] * (sh::kC2[4] * (xx - yy));
            if (degree >= 3) {
                c += coeffs[9] * (sh::kC3[0] * y * (3.0 * xx - yy));
                c += coeffs[10] * (sh::kC3[1] * xy * z);
                c += coeffs[11] * (sh::kC3[2] * y * (4.0 * zz - xx - yy));
                c += coeffs[12] * (sh::kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy));
                c += coeffs[13] * (sh::kC3[4] * x * (4.0 * zz - xx - yy));
                c += coeffs[14] * (sh::kC3[5] * z * (xx - yy));
                c += coeffs[15] * (sh::kC3[6] * x * (xx - 3.0 * yy));
            }
        }
    }
    c += Vec3{0.5, 0.5, 0.5};
    return {std::fmax(0.0, c.x), std::fmax(0.0, c.y), std::fmax(0.0, c.z)};
}

inline Vec3 eval_sh_color(const std::vector<Vec3>& coeffs, const Vec3& dir, int degree) {
    const size_t want = size_t(degree + 1) * size_t(degree + 1);
    if (degree < 0 || degree > 3 || coeffs.size() != want)
        throw ShapeError("eval_sh_color: expected " + std::to_string(want) +
                         " coefficients, got " + std::to_string(coeffs.size()));
    return eval_sh_color(coeffs.data(), coeffs.size(), dir, degree);
}

}  // namespace grtx
