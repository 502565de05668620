#pragma once

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "splatgen/math.hpp"

namespace splatgen {

/// Dense H x W x C image of doubles, row-major, channel-interleaved.
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(std::size_t(w) * std::size_t(h) * std::size_t(c), fill) {}

    double& at(int x, int y, int c) {
        return data[(std::size_t(y) * std::size_t(width) + std::size_t(x)) * std::size_t(channels) + std::size_t(c)];
    }
    double at(int x, int y, int c) const {
        return data[(std::size_t(y) * std::size_t(width) + std::size_t(x)) * std::size_t(channels) + std::size_t(c)];
    }
    std::size_t pixels() const { return std::size_t(width) * std::size_t(height); }
};

namespace detail {

inline void png_chunk(std::ofstream& f, const char type[4], const std::vector<std::uint8_t>& payload) {
    auto be32 = [&](std::uint32_t v) {
        std::uint8_t b[4] = {std::uint8_t(v >> 24), std::uint8_t(v >> 16), std::uint8_t(v >> 8), std::uint8_t(v)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    be32(std::uint32_t(payload.size()));
    f.write(type, 4);
    if (!payload.empty()) f.write(reinterpret_cast<const char*>(payload.data()), std::streamsize(payload.size()));
    std::uint32_t crc = crc32(0, nullptr, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), uInt(payload.size()));
    be32(crc);
}

inline void write_png(const std::string& path, int w, int h, int channels, int bit_depth,
                      const std::vector<std::uint8_t>& raw_scanline_bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    f.write(reinterpret_cast<const char*>(sig), 8);

    std::vector<std::uint8_t> ihdr(13);
    auto put32 = [&](std::size_t off, std::uint32_t v) {
        ihdr[off] = std::uint8_t(v >> 24);
        ihdr[off + 1] = std::uint8_t(v >> 16);
        ihdr[off + 2] = std::uint8_t(v >> 8);
        ihdr[off + 3] = std::uint8_t(v);
    };
    put32(0, std::uint32_t(w));
    put32(4, std::uint32_t(h));
    ihdr[8] = std::uint8_t(bit_depth);
    ihdr[9] = channels == 3 ? 2 : 0;  // truecolor or grayscale
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    png_chunk(f, "IHDR", ihdr);

    // Prepend filter byte 0 to each scanline, then deflate.
    std::size_t stride = std::size_t(w) * std::size_t(channels) * std::size_t(bit_depth / 8);
    std::vector<std::uint8_t> filtered;
    filtered.reserve((stride + 1) * std::size_t(h));
    for (int y = 0; y < h; ++y) {
        filtered.push_back(0);
        auto begin = raw_scanline_bytes.begin() + std::ptrdiff_t(std::size_t(y) * stride);
        filtered.insert(filtered.end(), begin, begin + std::ptrdiff_t(stride));
    }
    uLongf dst_len = compressBound(uLong(filtered.size()));
    std::vector<std::uint8_t> compressed(dst_len);
    if (compress2(compressed.data(), &dst_len, filtered.data(), uLong(filtered.size()), 6) != Z_OK)
        throw IoError("zlib compression failed for " + path);
    compressed.resize(dst_len);
    png_chunk(f, "IDAT", compressed);
    png_chunk(f, "IEND", {});
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace detail

/// 8-bit RGB PNG; values clamped to [0,1].
inline void write_png_rgb(const Image& img, const std::string& path) {
    if (img.channels != 3) throw ParamError("write_png_rgb expects a 3-channel image");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(img.data.size());
    for (double v : img.data)
        bytes.push_back(std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    detail::write_png(path, img.width, img.height, 3, 8, bytes);
}

/// 16-bit grayscale PNG; values clamped to [0,1].
inline void write_png_gray16(const Image& img, const std::string& path) {
    if (img.channels != 1) throw ParamError("write_png_gray16 expects a 1-channel image");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(img.data.size() * 2);
    for (double v : img.data) {
        auto q = std::uint16_t(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
        bytes.push_back(std::uint8_t(q >> 8));  // PNG is big-endian
        bytes.push_back(std::uint8_t(q & 0xff));
    }
    detail::write_png(path, img.width, img.height, 1, 16, bytes);
}

}  // namespace splatgen
