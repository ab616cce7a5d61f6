// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>
#include <grtx/math.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace grtx {

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<uint32_t, 3>> faces;
};

namespace detail {

inline TriMesh raw_icosahedron() {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    m.vertices = {
        {-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0},
        {0, -1, p}, {0, 1, p}, {0, -1, -p}, {0, 1, -p},
        {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1},
    };
    m.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    return m;
}

// 1-to-4 face subdivision with shared edge midpoints, midpoints projected
// onto the circumsphere.
inline TriMesh subdivide_on_sphere(const TriMesh& in) {
    TriMesh out;
    out.vertices = in.vertices;
    for (Vec3& v : out.vertices) v = normalize(v);
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> midpoint;
    const auto mid = [&](uint32_t a, uint32_t b) -> uint32_t {
        const auto key = std::minmax(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const uint32_t idx = uint32_t(out.vertices.size());
        out.vertices.push_back(normalize((out.vertices[a] + out.vertices[b]) * 0.5));
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& f : in.faces) {
        const uint32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
        out.faces.push_back({f[0], ab, ca});
        out.faces.push_back({f[1], bc, ab});
        out.faces.push_back({f[2], ca, bc});
        out.faces.push_back({ab, bc, ca});
    }
    return out;
}

inline double min_face_plane_distance(const TriMesh& m) {
    double d_min = kInf;
    for (const auto& f : m.faces) {
        const Vec3 n = normalize(cross(m.vertices[f[1]] - m.vertices[f[0]],
                                       m.vertices[f[2]] - m.vertices[f[0]]));
        d_min = std::fmin(d_min, std::fabs(dot(n, m.vertices[f[0]])));
    }
    return d_min;
}

}  // namespace detail

// Regular icosahedron (subdiv 0, 20 faces) or icosphere (subdiv 1, 80
// faces), scaled so the insphere radius is exactly 1: every face plane lies
// at distance >= 1 from the origin, so the mesh circumscribes the unit
// sphere and a proxy intersection test can never produce a false negative.
inline TriMesh icosahedron_mesh(int subdiv) {
    if (subdiv != 0 && subdiv != 1)
        throw ShapeError("icosahedron_mesh: subdiv must be 0 or 1");
    TriMesh m = detail::raw_icosahedron();
    for (Vec3& v : m.vertices) v = normalize(v);
    if (subdiv == 1) m = detail::subdivide_on_sphere(m);
    const double s = 1.0 / detail::min_face_plane_distance(m);
    for (Vec3& v : m.vertices) v *= s;
    return m;
}

}  // namespace grtx
