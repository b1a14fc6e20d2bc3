// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "video.hpp"

namespace vidsolve {

/// Square crop of side `crop` centred in each frame (offsets rounded down).
template <class T>
BasicVideo<T> center_crop(const BasicVideo<T>& v, std::size_t crop) {
    if (crop == 0 || crop > std::min(v.height(), v.width()))
        fail(ErrorCode::CropTooLarge, "crop " + std::to_string(crop) + " does not fit " + to_string(v.shape()));
    const std::size_t y0 = (v.height() - crop) / 2;
    const std::size_t x0 = (v.width() - crop) / 2;
    BasicVideo<T> out(Shape{v.frames(), v.channels(), crop, crop});
    for (std::size_t f = 0; f < v.frames(); ++f)
        for (std::size_t c = 0; c < v.channels(); ++c)
            for (std::size_t y = 0; y < crop; ++y)
                for (std::size_t x = 0; x < crop; ++x) out(f, c, y, x) = v(f, c, y0 + y, x0 + x);
    return out;
}

/// Bilinear resize with half-pixel centres; source coordinates are clamped
/// to the image, so equal sizes reproduce the input exactly.
template <class T>
BasicVideo<T> resize_bilinear(const BasicVideo<T>& v, std::size_t out_h, std::size_t out_w) {
    require(out_h >= 1 && out_w >= 1, ErrorCode::BadArgument, "resize target must be >= 1");
    const std::size_t in_h = v.height(), in_w = v.width();
    struct Tap {
        std::size_t i0, i1;
        double frac;
    };
    auto taps = [](std::size_t in, std::size_t out) {
        std::vector<Tap> t(out);
        const double scale = double(in) / double(out);
        for (std::size_t o = 0; o < out; ++o) {
            double src = (double(o) + 0.5) * scale - 0.5;
            src = std::clamp(src, 0.0, double(in - 1));
            const auto i0 = static_cast<std::size_t>(std::floor(src));
            const std::size_t i1 = std::min(i0 + 1, in - 1);
            t[o] = {i0, i1, src - double(i0)};
        }
        return t;
    };
    const auto ty = taps(in_h, out_h);
    const auto tx = taps(in_w, out_w);
    BasicVideo<T> out(Shape{v.frames(), v.channels(), out_h, out_w});
    parallel_for(v.frames(), [&](std::size_t f) {
        for (std::size_t c = 0; c < v.channels(); ++c)
            for (std::size_t y = 0; y < out_h; ++y)
                for (std::size_t x = 0; x < out_w; ++x) {
                    const auto& a = ty[y];
                    const auto& b = tx[x];
                    if (a.frac == 0.0 && b.frac == 0.0) {
                        out(f, c, y, x) = v(f, c, a.i0, b.i0);
                        continue;
                    }
                    const double top = (1 - b.frac) * v(f, c, a.i0, b.i0) + b.frac * v(f, c, a.i0, b.i1);
                    const double bot = (1 - b.frac) * v(f, c, a.i1, b.i0) + b.frac * v(f, c, a.i1, b.i1);
                    out(f, c, y, x) = static_cast<T>((1 - a.frac) * top + a.frac * bot);
                }
    });
    return out;
}

/// Crop, resize, normalize to [0, 1] by the declared value range, and split
/// into consecutive `chunk`-frame clips. Trailing frames that do not fill a
/// clip are dropped.
template <class T>
std::vector<BasicVideo<T>> preprocess(const BasicVideo<T>& frames, const VideoMeta& meta, std::size_t crop,
                                      std::size_t out_size, std::size_t chunk) {
    require(meta.valid(), ErrorCode::BadRange, "value range must satisfy lo < hi");
    require(chunk >= 1, ErrorCode::BadArgument, "chunk must be >= 1");
    require(out_size >= 1, ErrorCode::BadArgument, "output size must be >= 1");
    if (frames.frames() < chunk)
        fail(ErrorCode::EmptyResult,
             std::to_string(frames.frames()) + " frames cannot fill a chunk of " + std::to_string(chunk));

    BasicVideo<T> v = resize_bilinear(center_crop(frames, crop), out_size, out_size);
    const double lo = meta.value_lo, span = meta.value_hi - meta.value_lo;
    for (T& x : v.data()) x = static_cast<T>(std::clamp((double(x) - lo) / span, 0.0, 1.0));

    std::vector<BasicVideo<T>> chunks;
    for (std::size_t first = 0; first + chunk <= v.frames(); first += chunk) chunks.push_back(v.slice_frames(first, chunk));
    return chunks;
}

}  // namespace vidsolve
