// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Linear degradation operators with exact adjoints.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "video.hpp"

namespace vidsolve {

template <class T>
class LinearOp {
public:
    using Map = std::function<BasicVideo<T>(const BasicVideo<T>&)>;

    LinearOp(Shape in_shape, Shape out_shape, std::string descriptor, Map apply, Map adjoint)
        : in_(in_shape), out_(out_shape), desc_(std::move(descriptor)), apply_(std::move(apply)),
          adjoint_(std::move(adjoint)) {}

    const Shape& in_shape() const noexcept { return in_; }
    const Shape& out_shape() const noexcept { return out_; }
    const std::string& descriptor() const noexcept { return desc_; }

    BasicVideo<T> apply(const BasicVideo<T>& x) const {
        require_same_shape(x.shape(), in_, ("apply " + desc_).c_str());
        return apply_(x);
    }

    BasicVideo<T> adjoint(const BasicVideo<T>& y) const {
        require_same_shape(y.shape(), out_, ("adjoint " + desc_).c_str());
        return adjoint_(y);
    }

    BasicVideo<T> operator()(const BasicVideo<T>& x) const { return apply(x); }

private:
    Shape in_, out_;
    std::string desc_;
    Map apply_, adjoint_;
};

// ---------------------------------------------------------------------------
// 1-D filtering along one axis

enum class Boundary { Replicate, Reflect };

namespace detail {

/// Maps an index on the padded line back into [0, len).
inline std::size_t boundary_index(std::ptrdiff_t m, std::size_t len, Boundary b) {
    const auto L = static_cast<std::ptrdiff_t>(len);
    if (b == Boundary::Replicate) return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(m, 0, L - 1));
    // Half-sample symmetric: ... b a | a b c ... c | c b ...
    const std::ptrdiff_t period = 2 * L;
    std::ptrdiff_t r = m % period;
    if (r < 0) r += period;
    return static_cast<std::size_t>(r < L ? r : period - 1 - r);
}

enum class Axis { Frames, Rows, Cols };

/// Correlates every line along `axis` with `taps` (centre tap in the middle).
/// With transpose=true applies the exact adjoint (scatter form).
template <class T>
BasicVideo<T> filter_axis(const BasicVideo<T>& in, const std::vector<double>& taps, Axis axis, Boundary boundary,
                          bool transpose) {
    const Shape s = in.shape();
    std::size_t outer = 0, len = 0, inner = 0;
    switch (axis) {
        case Axis::Frames: outer = 1, len = s.n, inner = s.frame_size(); break;
        case Axis::Rows: outer = s.n * s.c, len = s.h, inner = s.w; break;
        case Axis::Cols: outer = s.n * s.c * s.h, len = s.w, inner = 1; break;
    }
    const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
    // Precompute source indices per (position, tap).
    std::vector<std::size_t> src(len * taps.size());
    for (std::size_t p = 0; p < len; ++p)
        for (std::size_t j = 0; j < taps.size(); ++j)
            src[p * taps.size() + j] =
                boundary_index(static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(j) - half, len, boundary);

    BasicVideo<T> out(s);
    const auto xs = in.data();
    auto os = out.data();
    const std::size_t lines = outer * inner;
    constexpr std::size_t kBlock = 256;
    const std::size_t blocks = (lines + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
        std::vector<double> acc(len);
        const std::size_t end = std::min(lines, (b + 1) * kBlock);
        for (std::size_t line = b * kBlock; line < end; ++line) {
            const std::size_t o = line / inner, i = line % inner;
            const std::size_t base = o * len * inner + i;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t p = 0; p < len; ++p) {
                const std::size_t* sp = &src[p * taps.size()];
                if (!transpose) {
                    double sum = 0.0;
                    for (std::size_t j = 0; j < taps.size(); ++j) sum += taps[j] * double(xs[base + sp[j] * inner]);
                    acc[p] = sum;
                } else {
                    const double y = double(xs[base + p * inner]);
                    for (std::size_t j = 0; j < taps.size(); ++j) acc[sp[j]] += taps[j] * y;
                }
            }
            for (std::size_t p = 0; p < len; ++p) os[base + p * inner] = static_cast<T>(acc[p]);
        }
    });
    return out;
}

}  // namespace detail

/// Normalized Gaussian taps exp(-d^2 / (2 sigma^2)), d = -(width/2)..width/2.
inline std::vector<double> gaussian_taps(double sigma, std::size_t width) {
    require(sigma > 0.0, ErrorCode::BadKernel, "gaussian sigma must be > 0");
    require(width % 2 == 1, ErrorCode::BadKernel, "kernel width must be odd");
    std::vector<double> taps(width);
    const auto half = static_cast<double>(width / 2);
    for (std::size_t i = 0; i < width; ++i) {
        const double d = double(i) - half;
        taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    const double sum = std::accumulate(taps.begin(), taps.end(), 0.0);
    for (double& t : taps) t /= sum;
    return taps;
}

inline std::size_t gaussian_support(double sigma) { return 2 * static_cast<std::size_t>(std::ceil(3.0 * sigma)) + 1; }

/// Separable Gaussian smoothing of every frame with half-sample reflect
/// boundary. Used by both the blur operator and the smoother denoiser.
template <class T>
BasicVideo<T> gaussian_smooth(const BasicVideo<T>& v, const std::vector<double>& taps, bool transpose = false) {
    using detail::Axis;
    if (!transpose) {
        auto tmp = detail::filter_axis(v, taps, Axis::Rows, Boundary::Reflect, false);
        return detail::filter_axis(tmp, taps, Axis::Cols, Boundary::Reflect, false);
    }
    auto tmp = detail::filter_axis(v, taps, Axis::Cols, Boundary::Reflect, true);
    return detail::filter_axis(tmp, taps, Axis::Rows, Boundary::Reflect, true);
}

// ---------------------------------------------------------------------------
// Temporal PSF

enum class PsfFamily { Uniform, Gaussian };

/// One-parameter temporal PSF: uniform box of odd `width` frames, or a
/// Gaussian of `sigma` frames on 2*ceil(3 sigma)+1 taps.
struct PsfSpec {
    PsfFamily family = PsfFamily::Uniform;
    std::size_t width = 1;
    double sigma = 0.0;

    static PsfSpec uniform(std::size_t k) { return {PsfFamily::Uniform, k, 0.0}; }
    static PsfSpec gaussian(double sigma) { return {PsfFamily::Gaussian, 0, sigma}; }

    std::size_t support() const { return family == PsfFamily::Uniform ? width : gaussian_support(sigma); }

    /// The grid parameter: width for uniform, sigma for gaussian.
    double parameter() const { return family == PsfFamily::Uniform ? double(width) : sigma; }

    std::vector<double> taps() const {
        if (family == PsfFamily::Uniform) {
            require(width >= 1 && width % 2 == 1, ErrorCode::BadKernel, "uniform PSF width must be odd and >= 1");
            return std::vector<double>(width, 1.0 / double(width));
        }
        return gaussian_taps(sigma, gaussian_support(sigma));
    }

    std::string descriptor() const {
        if (family == PsfFamily::Uniform) return "temporal:uniform:" + std::to_string(width);
        std::string s = std::to_string(sigma);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s += '0';
        return "temporal:gauss:" + s;
    }

    friend bool operator==(const PsfSpec&, const PsfSpec&) = default;
};

/// out[n] = sum_j h[j] x[clamp(n + j - support/2, 0, N-1)].
template <class T>
LinearOp<T> temporal_psf(const PsfSpec& spec, Shape in_shape) {
    auto taps = std::make_shared<const std::vector<double>>(spec.taps());
    if (taps->size() > 2 * in_shape.n - 1)
        fail(ErrorCode::BadKernel, "PSF support " + std::to_string(taps->size()) + " exceeds 2N-1 for N=" +
                                       std::to_string(in_shape.n));
    using detail::Axis;
    return LinearOp<T>(
        in_shape, in_shape, spec.descriptor(),
        [taps](const BasicVideo<T>& x) { return detail::filter_axis(x, *taps, Axis::Frames, Boundary::Replicate, false); },
        [taps](const BasicVideo<T>& y) { return detail::filter_axis(y, *taps, Axis::Frames, Boundary::Replicate, true); });
}

template <class T>
LinearOp<T> spatial_gaussian_blur(double sigma, std::size_t kernel_width, Shape in_shape) {
    auto taps = std::make_shared<const std::vector<double>>(gaussian_taps(sigma, kernel_width));
    std::string sig = std::to_string(sigma);
    sig.erase(sig.find_last_not_of('0') + 1);
    if (sig.back() == '.') sig += '0';
    return LinearOp<T>(
        in_shape, in_shape, "spatial:gauss:" + sig + ":" + std::to_string(kernel_width),
        [taps](const BasicVideo<T>& x) { return gaussian_smooth(x, *taps, false); },
        [taps](const BasicVideo<T>& y) { return gaussian_smooth(y, *taps, true); });
}

// ---------------------------------------------------------------------------
// Super-resolution by average pooling

template <class T>
LinearOp<T> avgpool_sr(std::size_t factor, Shape in_shape) {
    require(factor >= 1, ErrorCode::NonDivisible, "pooling factor must be >= 1");
    if (in_shape.h % factor != 0 || in_shape.w % factor != 0)
        fail(ErrorCode::NonDivisible, "factor " + std::to_string(factor) + " does not divide " + to_string(in_shape));
    Shape out_shape{in_shape.n, in_shape.c, in_shape.h / factor, in_shape.w / factor};
    const double inv = 1.0 / double(factor * factor);
    auto apply = [=](const BasicVideo<T>& x) {
        BasicVideo<T> y(out_shape);
        parallel_for(in_shape.n, [&](std::size_t f) {
            for (std::size_t c = 0; c < in_shape.c; ++c)
                for (std::size_t by = 0; by < out_shape.h; ++by)
                    for (std::size_t bx = 0; bx < out_shape.w; ++bx) {
                        double sum = 0.0;
                        for (std::size_t dy = 0; dy < factor; ++dy)
                            for (std::size_t dx = 0; dx < factor; ++dx)
                                sum += double(x(f, c, by * factor + dy, bx * factor + dx));
                        y(f, c, by, bx) = static_cast<T>(sum * inv);
                    }
        });
        return y;
    };
    auto adjoint = [=](const BasicVideo<T>& y) {
        BasicVideo<T> x(in_shape);
        parallel_for(in_shape.n, [&](std::size_t f) {
            for (std::size_t c = 0; c < in_shape.c; ++c)
                for (std::size_t yy = 0; yy < in_shape.h; ++yy)
                    for (std::size_t xx = 0; xx < in_shape.w; ++xx)
                        x(f, c, yy, xx) = static_cast<T>(double(y(f, c, yy / factor, xx / factor)) * inv);
        });
        return x;
    };
    return LinearOp<T>(in_shape, out_shape, "sr:" + std::to_string(factor), apply, adjoint);
}

// ---------------------------------------------------------------------------
// Inpainting mask

enum class MaskMode { PerFrame, Shared };

/// Keep-flags (1 = observed) for each frame's H*W pixels. Exactly
/// round(ratio * H * W) pixels per frame are dropped.
inline std::vector<std::uint8_t> make_mask(double ratio, std::uint64_t seed, Shape shape, MaskMode mode) {
    if (!(ratio > 0.0 && ratio < 1.0)) fail(ErrorCode::BadRatio, "mask ratio must lie in (0, 1)");
    const std::size_t hw = shape.plane_size();
    const auto dropped = static_cast<std::size_t>(std::llround(ratio * double(hw)));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(hw);
    std::vector<std::uint8_t> keep(shape.n * hw, 1);
    for (std::size_t f = 0; f < shape.n; ++f) {
        if (mode == MaskMode::Shared && f > 0) {
            std::copy_n(keep.begin(), hw, keep.begin() + static_cast<std::ptrdiff_t>(f * hw));
            continue;
        }
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t k = 0; k < dropped; ++k) keep[f * hw + order[k]] = 0;
    }
    return keep;
}

template <class T>
LinearOp<T> random_mask(double ratio, std::uint64_t seed, Shape shape, MaskMode mode = MaskMode::PerFrame) {
    auto keep = std::make_shared<const std::vector<std::uint8_t>>(make_mask(ratio, seed, shape, mode));
    auto apply = [keep, shape](const BasicVideo<T>& x) {
        BasicVideo<T> y = x;
        const std::size_t hw = shape.plane_size();
        for (std::size_t f = 0; f < shape.n; ++f)
            for (std::size_t c = 0; c < shape.c; ++c) {
                auto plane = y.frame(f).subspan(c * hw, hw);
                for (std::size_t p = 0; p < hw; ++p)
                    if (!(*keep)[f * hw + p]) plane[p] = T(0);
            }
        return y;
    };
    std::string r = std::to_string(ratio);
    r.erase(r.find_last_not_of('0') + 1);
    if (r.back() == '.') r += '0';
    std::string desc = "mask:" + r + ":" + std::to_string(seed);
    if (mode == MaskMode::Shared) desc += ":shared";
    return LinearOp<T>(shape, shape, desc, apply, apply);
}

// ---------------------------------------------------------------------------

template <class T>
LinearOp<T> identity_op(Shape shape) {
    auto id = [](const BasicVideo<T>& x) { return x; };
    return LinearOp<T>(shape, shape, "identity", id, id);
}

/// Explicit matrix operator (row-major rows x cols, rows = out size).
template <class T>
LinearOp<T> dense_op(Shape in_shape, Shape out_shape, std::vector<double> matrix) {
    const std::size_t rows = out_shape.size(), cols = in_shape.size();
    require(matrix.size() == rows * cols, ErrorCode::ShapeMismatch, "matrix size does not match shapes");
    auto m = std::make_shared<const std::vector<double>>(std::move(matrix));
    auto apply = [=](const BasicVideo<T>& x) {
        BasicVideo<T> y(out_shape);
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols; ++c) s += (*m)[r * cols + c] * double(x[c]);
            y[r] = static_cast<T>(s);
        }
        return y;
    };
    auto adjoint = [=](const BasicVideo<T>& y) {
        BasicVideo<T> x(in_shape);
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < rows; ++r) s += (*m)[r * cols + c] * double(y[r]);
            x[c] = static_cast<T>(s);
        }
        return x;
    };
    return LinearOp<T>(in_shape, out_shape, "dense", apply, adjoint);
}

/// outer after inner; the descriptor lists stages in application order.
template <class T>
LinearOp<T> compose(const LinearOp<T>& outer, const LinearOp<T>& inner) {
    if (!(inner.out_shape() == outer.in_shape()))
        fail(ErrorCode::ShapeMismatch, "cannot compose " + outer.descriptor() + " after " + inner.descriptor() + ": " +
                                           to_string(inner.out_shape()) + " vs " + to_string(outer.in_shape()));
    std::string desc = inner.descriptor() == "identity" ? outer.descriptor()
                       : outer.descriptor() == "identity" ? inner.descriptor()
                                                          : inner.descriptor() + " | " + outer.descriptor();
    return LinearOp<T>(
        inner.in_shape(), outer.out_shape(), desc,
        [outer, inner](const BasicVideo<T>& x) { return outer.apply(inner.apply(x)); },
        [outer, inner](const BasicVideo<T>& y) { return inner.adjoint(outer.adjoint(y)); });
}

/// Fills v with i.i.d. N(0, std^2) draws from a seeded generator.
template <class T>
void fill_gaussian(BasicVideo<T>& v, std::mt19937_64& rng, double stddev = 1.0) {
    std::normal_distribution<double> normal(0.0, stddev);
    for (T& x : v.data()) x = static_cast<T>(normal(rng));
}

/// Y = A(X) + W with W ~ N(0, noise_std^2 I).
template <class T>
BasicVideo<T> degrade(const BasicVideo<T>& x, const LinearOp<T>& op, double noise_std, std::uint64_t seed) {
    require(noise_std >= 0.0, ErrorCode::BadArgument, "noise_std must be >= 0");
    BasicVideo<T> y = op.apply(x);
    if (noise_std > 0.0) {
        std::mt19937_64 rng(seed);
        BasicVideo<T> w(y.shape());
        fill_gaussian(w, rng, noise_std);
        y = y + w;
    }
    return y;
}

}  // namespace vidsolve
