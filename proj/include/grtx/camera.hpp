// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>
#include <grtx/gaussian.hpp>

namespace grtx {

// Pinhole camera. Camera space is +x right, +y up, +z forward; `orientation`
// rotates camera space into world space.
struct Camera {
    Vec3 position;
    Quat orientation;
    double vfov_deg = 60.0;
    uint32_t width = 1;
    uint32_t height = 1;

    static Camera look_at(const Vec3& position, const Vec3& target, double vfov_deg,
                          uint32_t width, uint32_t height, const Vec3& up = {0, 1, 0}) {
        Camera cam;
        cam.position = position;
        cam.vfov_deg = vfov_deg;
        cam.width = width;
        cam.height = height;
        const Vec3 fwd = normalize(target - position);
        Vec3 right = cross(up, fwd);
        if (length(right) < 1e-9) right = cross(Vec3{1, 0, 0}, fwd);  // forward parallel to up
        right = normalize(right);
        const Vec3 cam_up = cross(fwd, right);  // (right, up, fwd) is a proper rotation
        Mat3 basis;  // columns: right, up, forward
        for (int i = 0; i < 3; ++i) {
            basis.m[i][0] = right[i];
            basis.m[i][1] = cam_up[i];
            basis.m[i][2] = fwd[i];
        }
        cam.orientation = detail_from_matrix(basis);
        return cam;
    }

    void validate() const {
        if (!(vfov_deg > 0.0 && vfov_deg < 180.0))
            throw DataError("camera: vertical fov must be in (0, 180) degrees");
        if (width < 1 || height < 1) throw DataError("camera: resolution must be >= 1x1");
        if (std::fabs(orientation.norm() - 1.0) > 1e-6)
            throw DataError("camera: orientation quaternion is not unit");
    }

    // Ray through normalized image coordinates (sx, sy) in [0,1]^2;
    // sy = 0 is the top edge. Unit direction.
    Ray ray_ndc(double sx, double sy) const {
        const double tan_half = std::tan(vfov_deg * (3.14159265358979323846 / 180.0) * 0.5);
        const double aspect = double(width) / double(height);
        const Vec3 dir_cam{(2.0 * sx - 1.0) * tan_half * aspect, (1.0 - 2.0 * sy) * tan_half,
                           1.0};
        const Vec3 dir = normalize(rotation_matrix(orientation) * dir_cam);
        return {position, dir};
    }

private:
    // Shepperd's method, matrix -> quaternion.
    static Quat detail_from_matrix(const Mat3& m) {
        const double tr = m.m[0][0] + m.m[1][1] + m.m[2][2];
        Quat q;
        if (tr > 0.0) {
            const double s = std::sqrt(tr + 1.0) * 2.0;
            q = {0.25 * s, (m.m[2][1] - m.m[1][2]) / s, (m.m[0][2] - m.m[2][0]) / s,
                 (m.m[1][0] - m.m[0][1]) / s};
        } else if (m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2]) {
            const double s = std::sqrt(1.0 + m.m[0][0] - m.m[1][1] - m.m[2][2]) * 2.0;
            q = {(m.m[2][1] - m.m[1][2]) / s, 0.25 * s, (m.m[0][1] + m.m[1][0]) / s,
                 (m.m[0][2] + m.m[2][0]) / s};
        } else if (m.m[1][1] > m.m[2][2]) {
            const double s = std::sqrt(1.0 + m.m[1][1] - m.m[0][0] - m.m[2][2]) * 2.0;
            q = {(m.m[0][2] - m.m[2][0]) / s, (m.m[0][1] + m.m[1][0]) / s, 0.25 * s,
                 (m.m[1][2] + m.m[2][1]) / s};
        } else {
            const double s = std::sqrt(1.0 + m.m[2][2] - m.m[0][0] - m.m[1][1]) * 2.0;
            q = {(m.m[1][0] - m.m[0][1]) / s, (m.m[0][2] + m.m[2][0]) / s,
                 (m.m[1][2] + m.m[2][1]) / s, 0.25 * s};
        }
        return q.normalized();
    }
};

// Ray through the center of pixel (px, py); deterministic, unit direction.
inline Ray generate_ray(const Camera& cam, uint32_t px, uint32_t py) {
    return cam.ray_ndc((double(px) + 0.5) / double(cam.width),
                       (double(py) + 0.5) / double(cam.height));
}

}  // namespace grtx
