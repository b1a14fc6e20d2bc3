// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// SVTF volume files and PPM frame export.
//
// SVTF layout (all little-endian):
//   "SVTF" | u32 version (=1) | u32 N | u32 C | u32 H | u32 W | N*C*H*W f32

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "video.hpp"

namespace vidsolve {

inline constexpr std::uint32_t kSvtfVersion = 1;
inline constexpr std::uint32_t kMaxDim = 1u << 20;

namespace le {

inline void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::vector<unsigned char>& buf, float f) { put_u32(buf, std::bit_cast<std::uint32_t>(f)); }

inline void put_f64(std::vector<unsigned char>& buf, double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

inline double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return std::bit_cast<double>(v);
}

}  // namespace le

inline std::vector<unsigned char> encode_svtf(const Video& v) {
    std::vector<unsigned char> buf;
    buf.reserve(24 + 4 * v.size());
    for (char c : std::string_view("SVTF")) buf.push_back(static_cast<unsigned char>(c));
    le::put_u32(buf, kSvtfVersion);
    for (std::size_t d : {v.frames(), v.channels(), v.height(), v.width()}) {
        require(d <= kMaxDim, ErrorCode::DimOverflow, "dimension " + std::to_string(d) + " exceeds 2^20");
        le::put_u32(buf, static_cast<std::uint32_t>(d));
    }
    for (float x : v.data()) le::put_f32(buf, x);
    return buf;
}

inline Video decode_svtf(const std::vector<unsigned char>& buf) {
    if (buf.size() < 4 || std::memcmp(buf.data(), "SVTF", 4) != 0) fail(ErrorCode::BadMagic, "missing SVTF magic");
    if (buf.size() < 24) fail(ErrorCode::TruncatedFile, "header shorter than 24 bytes");
    const std::uint32_t version = le::get_u32(buf.data() + 4);
    if (version != kSvtfVersion) fail(ErrorCode::UnsupportedVersion, "SVTF version " + std::to_string(version));
    std::array<std::uint32_t, 4> dims{};
    for (int i = 0; i < 4; ++i) {
        dims[i] = le::get_u32(buf.data() + 8 + 4 * i);
        if (dims[i] > kMaxDim) fail(ErrorCode::DimOverflow, "dimension " + std::to_string(dims[i]) + " exceeds 2^20");
        if (dims[i] == 0) fail(ErrorCode::BadShape, "zero dimension in SVTF header");
    }
    const std::size_t payload = buf.size() - 24;
    // Multiply with early exit so huge headers cannot overflow.
    std::size_t count = 1;
    for (auto d : dims) {
        count *= d;
        if (count > payload / 4) fail(ErrorCode::TruncatedFile, "payload shorter than header dimensions");
    }
    if (payload != count * 4) fail(ErrorCode::TruncatedFile, "payload size does not match header dimensions");
    std::vector<float> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = le::get_f32(buf.data() + 24 + 4 * i);
    return Video(Shape{dims[0], dims[1], dims[2], dims[3]}, std::move(data));
}

inline void save_svtf(const Video& v, const std::filesystem::path& path) {
    const auto buf = encode_svtf(v);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

template <class T>
void save_svtf(const BasicVideo<T>& v, const std::filesystem::path& path) {
    save_svtf(v.template cast<float>(), path);
}

inline Video load_svtf(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_svtf(buf);
}

/// round(255 * clamp(x, 0, 1)), halves rounded away from zero.
inline unsigned char quantize_u8(double x) {
    const double c = std::clamp(std::isnan(x) ? 0.0 : x, 0.0, 1.0);
    return static_cast<unsigned char>(std::round(255.0 * c));
}

/// Writes frame_0000.ppm ... as binary P6 (maxval 255). Single-channel
/// volumes are written as gray RGB. Returns the number of frames written.
template <class T>
std::size_t save_ppm_frames(const BasicVideo<T>& v, const std::filesystem::path& dir) {
    if (v.channels() != 1 && v.channels() != 3)
        fail(ErrorCode::UnsupportedChannels, "PPM export needs 1 or 3 channels, got " + std::to_string(v.channels()));
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

    const std::size_t h = v.height(), w = v.width();
    for (std::size_t f = 0; f < v.frames(); ++f) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04zu.ppm", f);
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot open " + (dir / name).string());
        out << "P6\n" << w << " " << h << "\n255\n";
        std::vector<unsigned char> row(3 * w);
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t k = 0; k < 3; ++k) {
                    const std::size_t ch = v.channels() == 1 ? 0 : k;
                    row[3 * x + k] = quantize_u8(double(v(f, ch, y, x)));
                }
            }
            out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
        }
        if (!out) fail(ErrorCode::IoError, "write failed for " + (dir / name).string());
    }
    return v.frames();
}

}  // namespace vidsolve
