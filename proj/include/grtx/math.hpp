// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace grtx {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    bool operator==(const Vec3& o) const = default;
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalize(const Vec3& v) { return v / length(v); }
inline Vec3 cwise_mul(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline Vec3 cwise_min(const Vec3& a, const Vec3& b) {
    return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 cwise_max(const Vec3& a, const Vec3& b) {
    return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}
inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Quaternion, scalar-first. Not required to be exactly unit; rotation
// matrices are derived with the norm factored out.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }
    bool operator==(const Quat& o) const = default;
};

struct Mat3 {
    // row-major
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    Vec3 operator*(const Vec3& v) const {
        return {dot(row(0), v), dot(row(1), v), dot(row(2), v)};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j] + m[i][2] * o.m[2][j];
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
};

// Rotation matrix from a (possibly non-unit) quaternion; the squared norm
// is divided out so slightly denormalized inputs still give an orthonormal
// matrix.
inline Mat3 rotation_matrix(const Quat& q) {
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    const double s = 2.0 / n2;
    const double wx = s * q.w * q.x, wy = s * q.w * q.y, wz = s * q.w * q.z;
    const double xx = s * q.x * q.x, xy = s * q.x * q.y, xz = s * q.x * q.z;
    const double yy = s * q.y * q.y, yz = s * q.y * q.z, zz = s * q.z * q.z;
    Mat3 r;
    r.m[0][0] = 1.0 - (yy + zz); r.m[0][1] = xy - wz;          r.m[0][2] = xz + wy;
    r.m[1][0] = xy + wz;         r.m[1][1] = 1.0 - (xx + zz);  r.m[1][2] = yz - wx;
    r.m[2][0] = xz - wy;         r.m[2][1] = yz + wx;          r.m[2][2] = 1.0 - (xx + yy);
    return r;
}

// Affine transform: p' = linear * p + translation.
struct Affine {
    Mat3 linear;
    Vec3 translation;

    Vec3 apply_point(const Vec3& p) const { return linear * p + translation; }
    Vec3 apply_vector(const Vec3& v) const { return linear * v; }

    // this ∘ other
    Affine operator*(const Affine& o) const {
        return {linear * o.linear, linear * o.translation + translation};
    }
    static Affine identity() { return {}; }
};

struct Mat4 {
    double m[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};

    static Mat4 from_affine(const Affine& a) {
        Mat4 r;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) r.m[i][j] = a.linear.m[i][j];
            r.m[i][3] = a.translation[i];
        }
        return r;
    }
};

// SplitMix64: tiny deterministic generator used for synthetic scenes and
// test data. The stream is part of the scene-generation contract, so no
// std:: distributions (their sequences are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1), 53-bit resolution
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform over the rotation group, via rejection sampling from the 4-cube
    Quat uniform_quaternion() {
        for (;;) {
            const double w = uniform(-1.0, 1.0);
            const double x = uniform(-1.0, 1.0);
            const double y = uniform(-1.0, 1.0);
            const double z = uniform(-1.0, 1.0);
            const double n2 = w * w + x * x + y * y + z * z;
            if (n2 > 1.0 || n2 < 1e-4) continue;
            const double inv = 1.0 / std::sqrt(n2);
            return {w * inv, x * inv, y * inv, z * inv};
        }
    }

private:
    uint64_t state_;
};

// Round to the nearest float32 grid point, kept as a double. Scene fields
// are snapped to this grid so PLY round trips are bit-exact. The volatile
// keeps the narrowing real: gcc 11's SLP vectorizer otherwise folds paired
// double->float->double conversions into a plain copy.
inline double snap_f32(double v) {
    volatile float f = float(v);
    return double(f);
}
inline Vec3 snap_f32(const Vec3& v) { return {snap_f32(v.x), snap_f32(v.y), snap_f32(v.z)}; }

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace grtx
