// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/scene.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace grtx {

static_assert(std::endian::native == std::endian::little,
              "PLY I/O assumes a little-endian host");

namespace detail {

struct PlyHeader {
    size_t vertex_count = 0;
    std::vector<std::string> properties;       // in file order, all float32
    std::map<std::string, size_t> index;       // property name -> column
    size_t header_bytes = 0;
};

inline PlyHeader parse_ply_header(std::istream& in, const std::string& path) {
    const auto fail = [&path](const std::string& what) {
        throw FormatError(path + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line) || (line != "ply" && line != "ply\r")) fail("not a PLY file");

    PlyHeader h;
    bool in_vertex = false, format_seen = false, done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian") fail("unsupported format '" + fmt + "'");
            format_seen = true;
        } else if (tok == "element") {
            std::string name;
            size_t count = 0;
            ls >> name >> count;
            if (name == "vertex") {
                h.vertex_count = count;
                in_vertex = true;
            } else {
                // other elements would follow the vertex data; nothing in the
                // 3DGS convention defines them
                if (count > 0) fail("unsupported element '" + name + "'");
                in_vertex = false;
            }
        } else if (tok == "property") {
            if (!in_vertex) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") fail("list properties are not supported");
            if (type != "float" && type != "float32")
                fail("property '" + name + "' has unsupported type '" + type + "'");
            h.index[name] = h.properties.size();
            h.properties.push_back(name);
        } else if (tok == "end_header") {
            done = true;
            break;
        } else {
            fail("unexpected header token '" + tok + "'");
        }
    }
    if (!done) fail("missing end_header");
    if (!format_seen) fail("missing format line");
    if (h.vertex_count == 0) fail("no vertex element");
    h.header_bytes = size_t(in.tellg());
    return h;
}

inline void write_f32(std::ostream& out, float v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

}  // namespace detail

// Reads a 3DGS splat PLY (binary little-endian; fields x/y/z, f_dc_0..2,
// f_rest_*, opacity, scale_0..2, rot_0..3). Unless `pre_activated`,
// activations are applied: opacity = logistic(raw), scale = exp(raw). The
// quaternion is normalized (then snapped to the float32 grid, which keeps
// save_ply -> load_ply an exact identity). The SH degree is inferred from
// the f_rest count.
inline Scene load_ply(const std::string& path, bool pre_activated = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    const detail::PlyHeader h = detail::parse_ply_header(in, path);

    const auto column = [&](const std::string& name) {
        auto it = h.index.find(name);
        if (it == h.index.end())
            throw FormatError(path + ": missing required field '" + name + "'");
        return it->second;
    };

    const size_t cx = column("x"), cy = column("y"), cz = column("z");
    const size_t cdc[3] = {column("f_dc_0"), column("f_dc_1"), column("f_dc_2")};
    const size_t cop = column("opacity");
    const size_t cs[3] = {column("scale_0"), column("scale_1"), column("scale_2")};
    const size_t cq[4] = {column("rot_0"), column("rot_1"), column("rot_2"), column("rot_3")};

    size_t n_rest = 0;
    while (h.index.count("f_rest_" + std::to_string(n_rest))) ++n_rest;
    int degree = -1;
    for (int d = 0; d <= 3; ++d)
        if (n_rest == 3 * (size_t(d + 1) * size_t(d + 1) - 1)) degree = d;
    if (degree < 0)
        throw FormatError(path + ": f_rest count " + std::to_string(n_rest) +
                          " does not match any SH degree in 0..3");
    const size_t n_coeff = size_t(degree + 1) * size_t(degree + 1);
    std::vector<size_t> crest(n_rest);
    for (size_t i = 0; i < n_rest; ++i) crest[i] = h.index.at("f_rest_" + std::to_string(i));

    const size_t stride = h.properties.size();
    std::vector<float> row(stride);
    Scene scene;
    scene.gaussians.reserve(h.vertex_count);

    for (size_t rec = 0; rec < h.vertex_count; ++rec) {
        in.read(reinterpret_cast<char*>(row.data()), std::streamsize(stride * 4));
        if (!in) throw FormatError(path + ": truncated at record " + std::to_string(rec));
        for (float v : row)
            if (!std::isfinite(v))
                throw DataError(path + ": non-finite value at record " + std::to_string(rec));

        Gaussian g;
        g.mean = {double(row[cx]), double(row[cy]), double(row[cz])};
        if (pre_activated) {
            g.opacity = double(row[cop]);
            g.scale = {double(row[cs[0]]), double(row[cs[1]]), double(row[cs[2]])};
        } else {
            g.opacity = logistic(double(row[cop]));
            g.scale = {std::exp(double(row[cs[0]])), std::exp(double(row[cs[1]])),
                       std::exp(double(row[cs[2]]))};
        }
        g.rotation = {double(row[cq[0]]), double(row[cq[1]]), double(row[cq[2]]),
                      double(row[cq[3]])};
        const double qn = g.rotation.norm();
        if (!(qn > 1e-12))
            throw DataError(path + ": zero quaternion at record " + std::to_string(rec));
        g.rotation = g.rotation.normalized();
        g.rotation = {snap_f32(g.rotation.w), snap_f32(g.rotation.x), snap_f32(g.rotation.y),
                      snap_f32(g.rotation.z)};

        g.sh.resize(n_coeff);
        g.sh[0] = {double(row[cdc[0]]), double(row[cdc[1]]), double(row[cdc[2]])};
        // f_rest is planar per channel: all red coefficients, then green, then blue
        for (size_t m = 1; m < n_coeff; ++m)
            for (int ch = 0; ch < 3; ++ch)
                g.sh[m][ch] = double(row[crest[size_t(ch) * (n_coeff - 1) + (m - 1)]]);

        validate_gaussian(g, rec);
        scene.gaussians.push_back(std::move(g));
    }
    return scene;
}

// Writes the 3DGS splat layout. Unless `pre_activated`, activations are
// inverted (opacity -> logit, scale -> log) so the file matches what trained
// assets store.
inline void save_ply(const Scene& scene, const std::string& path, bool pre_activated = false) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");

    const size_t n_coeff = scene.gaussians.empty() ? 1 : scene.gaussians.front().sh.size();
    const size_t n_rest = 3 * (n_coeff - 1);
    for (const Gaussian& g : scene.gaussians)
        if (g.sh.size() != n_coeff)
            throw ShapeError("save_ply: mixed SH degrees in scene");

    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << scene.gaussians.size() << "\n";
    for (const char* name : {"x", "y", "z", "nx", "ny", "nz"})
        out << "property float " << name << "\n";
    for (int i = 0; i < 3; ++i) out << "property float f_dc_" << i << "\n";
    for (size_t i = 0; i < n_rest; ++i) out << "property float f_rest_" << i << "\n";
    out << "property float opacity\n";
    for (int i = 0; i < 3; ++i) out << "property float scale_" << i << "\n";
    for (int i = 0; i < 4; ++i) out << "property float rot_" << i << "\n";
    out << "end_header\n";

    for (const Gaussian& g : scene.gaussians) {
        using detail::write_f32;
        write_f32(out, float(g.mean.x));
        write_f32(out, float(g.mean.y));
        write_f32(out, float(g.mean.z));
        for (int i = 0; i < 3; ++i) write_f32(out, 0.0f);  // normals, unused
        for (int ch = 0; ch < 3; ++ch) write_f32(out, float(g.sh[0][ch]));
        for (int ch = 0; ch < 3; ++ch)
            for (size_t m = 1; m < n_coeff; ++m) write_f32(out, float(g.sh[m][ch]));
        if (pre_activated) {
            write_f32(out, float(g.opacity));
            for (int a = 0; a < 3; ++a) write_f32(out, float(g.scale[a]));
        } else {
            write_f32(out, float(logit(g.opacity)));
            for (int a = 0; a < 3; ++a) write_f32(out, float(std::log(g.scale[a])));
        }
        write_f32(out, float(g.rotation.w));
        write_f32(out, float(g.rotation.x));
        write_f32(out, float(g.rotation.y));
        write_f32(out, float(g.rotation.z));
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace grtx
