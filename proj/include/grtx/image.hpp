// Copyright 2026 grtx contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <grtx/error.hpp>
#include <grtx/math.hpp>

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace grtx {

// Linear rgba frame buffer, row-major from the top-left pixel.
struct Image {
    uint32_t width = 0;
    uint32_t height = 0;
    std::vector<double> data;  // 4 doubles per pixel

    Image() = default;
    Image(uint32_t w, uint32_t h) : width(w), height(h), data(size_t(w) * h * 4, 0.0) {}

    double* pixel(uint32_t x, uint32_t y) { return &data[(size_t(y) * width + x) * 4]; }
    const double* pixel(uint32_t x, uint32_t y) const {
        return &data[(size_t(y) * width + x) * 4];
    }
};

inline uint8_t to_byte(double c) {
    const double v = c < 0.0 ? 0.0 : (c > 1.0 ? 1.0 : c);
    return uint8_t(v * 255.0 + 0.5);
}

// Largest per-channel rgb difference between two frames, in linear units.
inline double max_channel_diff(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height)
        throw ShapeError("max_channel_diff: image sizes differ");
    double d = 0.0;
    for (size_t i = 0; i < a.data.size(); i += 4)
        for (size_t c = 0; c < 3; ++c)
            d = std::fmax(d, std::fabs(a.data[i + c] - b.data[i + c]));
    return d;
}

inline std::vector<uint8_t> encode_rgb8(const Image& img) {
    std::vector<uint8_t> bytes;
    bytes.reserve(size_t(img.width) * img.height * 3);
    for (size_t i = 0; i < img.data.size(); i += 4) {
        bytes.push_back(to_byte(img.data[i]));
        bytes.push_back(to_byte(img.data[i + 1]));
        bytes.push_back(to_byte(img.data[i + 2]));
    }
    return bytes;
}

// Binary P6, 8-bit, channels clamped to the displayable range. The header is
// the canonical "P6\n<w> <h>\n255\n" form, stable for golden files.
inline void write_ppm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    const std::vector<uint8_t> bytes = encode_rgb8(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string magic;
    uint32_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P6" || maxval != 255) throw FormatError(path + ": not an 8-bit P6 file");
    in.get();  // single whitespace after maxval
    Image img(w, h);
    std::vector<uint8_t> bytes(size_t(w) * h * 3);
    in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!in) throw FormatError(path + ": truncated pixel data");
    for (size_t p = 0; p < size_t(w) * h; ++p) {
        for (int c = 0; c < 3; ++c) img.data[p * 4 + c] = double(bytes[p * 3 + c]) / 255.0;
        img.data[p * 4 + 3] = 1.0;
    }
    return img;
}

namespace detail {

inline void png_chunk(std::ofstream& out, const char type[4], const std::vector<uint8_t>& payload) {
    const auto be32 = [&out](uint32_t v) {
        const uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(uint32_t(payload.size()));
    out.write(type, 4);
    if (!payload.empty())
        out.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), uInt(payload.size()));
    be32(uint32_t(crc));
}

}  // namespace detail

enum class ImageFormat { Ppm, Png };

inline void write_png(const Image& img, const std::string& path);

inline void write_image(const Image& img, const std::string& path, ImageFormat format) {
    if (format == ImageFormat::Ppm)
        write_ppm(img, path);
    else
        write_png(img, path);
}

// 8-bit RGB PNG (color type 2), zlib-compressed scanlines with filter 0.
inline void write_png(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    out.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<uint8_t> ihdr(13);
    const auto be32_at = [&ihdr](size_t off, uint32_t v) {
        ihdr[off] = uint8_t(v >> 24);
        ihdr[off + 1] = uint8_t(v >> 16);
        ihdr[off + 2] = uint8_t(v >> 8);
        ihdr[off + 3] = uint8_t(v);
    };
    be32_at(0, img.width);
    be32_at(4, img.height);
    ihdr[8] = 8;   // bit depth
    ihdr[9] = 2;   // rgb
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    detail::png_chunk(out, "IHDR", ihdr);

    const std::vector<uint8_t> rgb = encode_rgb8(img);
    std::vector<uint8_t> raw;
    raw.reserve(size_t(img.height) * (size_t(img.width) * 3 + 1));
    for (uint32_t y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        const uint8_t* row = rgb.data() + size_t(y) * img.width * 3;
        raw.insert(raw.end(), row, row + size_t(img.width) * 3);
    }
    uLongf bound = compressBound(uLong(raw.size()));
    std::vector<uint8_t> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), uLong(raw.size()), 9) != Z_OK)
        throw IoError("png: zlib compression failed");
    idat.resize(bound);
    detail::png_chunk(out, "IDAT", idat);
    detail::png_chunk(out, "IEND", {});
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace grtx
