// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "video.hpp"

namespace vidsolve {

enum class SynthKind { MovingSquare, GradientDrift, Static };

inline SynthKind parse_synth_kind(std::string_view s) {
    if (s == "moving_square") return SynthKind::MovingSquare;
    if (s == "gradient_drift") return SynthKind::GradientDrift;
    if (s == "static") return SynthKind::Static;
    fail(ErrorCode::BadArgument, "unknown synthetic video kind '" + std::string(s) + "'");
}

/// Deterministic test clips with values in [0, 1].
///
/// moving_square: a textured background with a bright square; frame f is
/// the first frame cyclically shifted right by f pixels.
/// gradient_drift: smooth diagonal waves whose phase advances each frame.
/// static: one textured frame repeated.
template <class T = float>
BasicVideo<T> synth_video(SynthKind kind, Shape shape, std::uint64_t seed) {
    require(shape.valid(), ErrorCode::BadShape, "synthetic video dims must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;
    const double ph1 = two_pi * unit(rng), ph2 = two_pi * unit(rng);
    const double fx = 1.0 + std::floor(2.0 * unit(rng)), fy = 1.0 + std::floor(2.0 * unit(rng));

    const std::size_t side = std::max<std::size_t>(1, std::min(shape.h, shape.w) / 4);
    const auto sy = static_cast<std::size_t>(unit(rng) * double(shape.h - std::min(side, shape.h) + 1));
    const auto sx = static_cast<std::size_t>(unit(rng) * double(shape.w));

    // Base frame: low-contrast waves plus (for moving_square) the square.
    BasicVideo<T> base(Shape{1, shape.c, shape.h, shape.w});
    for (std::size_t c = 0; c < shape.c; ++c) {
        const double tint = 0.05 * double(c);
        for (std::size_t y = 0; y < shape.h; ++y)
            for (std::size_t x = 0; x < shape.w; ++x) {
                const double u = double(x) / double(shape.w), v = double(y) / double(shape.h);
                double val = 0.35 + tint + 0.12 * std::sin(two_pi * fx * u + ph1) * std::cos(two_pi * fy * v + ph2);
                if (kind == SynthKind::MovingSquare) {
                    const bool in_rows = y >= sy && y < sy + side;
                    const bool in_cols = ((x + shape.w - sx) % shape.w) < side;
                    if (in_rows && in_cols) val = 0.9 - tint;
                }
                base(0, c, y, x) = static_cast<T>(std::clamp(val, 0.0, 1.0));
            }
    }

    BasicVideo<T> out(shape);
    for (std::size_t f = 0; f < shape.n; ++f)
        for (std::size_t c = 0; c < shape.c; ++c)
            for (std::size_t y = 0; y < shape.h; ++y)
                for (std::size_t x = 0; x < shape.w; ++x) {
                    switch (kind) {
                        case SynthKind::Static:
                            out(f, c, y, x) = base(0, c, y, x);
                            break;
                        case SynthKind::MovingSquare:
                            out(f, c, y, x) = base(0, c, y, (x + shape.w - (f % shape.w)) % shape.w);
                            break;
                        case SynthKind::GradientDrift: {
                            const double u = double(x) / double(shape.w), v = double(y) / double(shape.h);
                            const double val = 0.5 + 0.4 * std::sin(two_pi * (fx * u + fy * v) + ph1 + 0.2 * double(f)) -
                                               0.05 * double(c);
                            out(f, c, y, x) = static_cast<T>(std::clamp(val, 0.0, 1.0));
                            break;
                        }
                    }
                }
    return out;
}

}  // namespace vidsolve
