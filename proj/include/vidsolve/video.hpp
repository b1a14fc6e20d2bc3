// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"

namespace vidsolve {

/// Dimensions of a spatio-temporal volume: frames x channels x rows x columns.
struct Shape {
    std::size_t n = 1;
    std::size_t c = 1;
    std::size_t h = 1;
    std::size_t w = 1;

    constexpr std::size_t frame_size() const noexcept { return c * h * w; }
    constexpr std::size_t plane_size() const noexcept { return h * w; }
    constexpr std::size_t size() const noexcept { return n * c * h * w; }
    constexpr bool valid() const noexcept { return n >= 1 && c >= 1 && h >= 1 && w >= 1; }

    friend constexpr bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
    return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
           std::to_string(s.w);
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (!(a == b)) {
        fail(ErrorCode::ShapeMismatch,
             std::string(what) + ": " + to_string(a) + " vs " + to_string(b));
    }
}

/// Dense video volume, frame-major then channel, row, column.
template <class T>
class BasicVideo {
public:
    using value_type = T;

    BasicVideo() = default;

    explicit BasicVideo(Shape shape, T fill = T(0)) : shape_(shape) {
        require(shape.valid(), ErrorCode::BadShape, "all dimensions must be >= 1, got " + to_string(shape));
        data_.assign(shape.size(), fill);
    }

    BasicVideo(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
        require(shape.valid(), ErrorCode::BadShape, "all dimensions must be >= 1, got " + to_string(shape));
        require(data_.size() == shape.size(), ErrorCode::BadShape,
                "data length " + std::to_string(data_.size()) + " does not match " + to_string(shape));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t frames() const noexcept { return shape_.n; }
    std::size_t channels() const noexcept { return shape_.c; }
    std::size_t height() const noexcept { return shape_.h; }
    std::size_t width() const noexcept { return shape_.w; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() & noexcept { return data_; }
    std::span<const T> data() const& noexcept { return data_; }
    std::span<const T> data() && = delete;
    /// Copy of the samples; safe on temporaries.
    std::vector<T> to_vector() const { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    std::size_t index(std::size_t f, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
        return ((f * shape_.c + ch) * shape_.h + y) * shape_.w + x;
    }
    T& operator()(std::size_t f, std::size_t ch, std::size_t y, std::size_t x) noexcept {
        return data_[index(f, ch, y, x)];
    }
    const T& operator()(std::size_t f, std::size_t ch, std::size_t y, std::size_t x) const noexcept {
        return data_[index(f, ch, y, x)];
    }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> frame(std::size_t f) noexcept {
        return std::span<T>(data_).subspan(f * shape_.frame_size(), shape_.frame_size());
    }
    std::span<const T> frame(std::size_t f) const noexcept {
        return std::span<const T>(data_).subspan(f * shape_.frame_size(), shape_.frame_size());
    }

    /// Frames [first, first + count) as a new volume.
    BasicVideo slice_frames(std::size_t first, std::size_t count) const {
        require(first + count <= shape_.n && count >= 1, ErrorCode::BadArgument, "frame slice out of range");
        Shape s = shape_;
        s.n = count;
        auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * shape_.frame_size());
        return BasicVideo(s, std::vector<T>(begin, begin + static_cast<std::ptrdiff_t>(s.size())));
    }

    template <class U>
    BasicVideo<U> cast() const {
        return BasicVideo<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicVideo&, const BasicVideo&) = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

using Video = BasicVideo<float>;

struct VideoMeta {
    std::string source_id;
    std::optional<double> frame_rate;
    double value_lo = 0.0;
    double value_hi = 255.0;

    bool valid() const noexcept { return value_lo < value_hi; }
};

// Elementwise helpers. Reductions accumulate per frame in double and combine
// the partial sums in frame order, so results are independent of threading.

template <class T>
bool all_finite(const BasicVideo<T>& v) {
    for (T x : v.data())
        if (!std::isfinite(x)) return false;
    return true;
}

template <class T>
double dot(const BasicVideo<T>& a, const BasicVideo<T>& b) {
    require_same_shape(a.shape(), b.shape(), "dot");
    std::vector<double> partial(a.frames(), 0.0);
    parallel_for(a.frames(), [&](std::size_t f) {
        auto fa = a.frame(f);
        auto fb = b.frame(f);
        double s = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i) s += double(fa[i]) * double(fb[i]);
        partial[f] = s;
    });
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

template <class T>
double squared_norm(const BasicVideo<T>& a) {
    return dot(a, a);
}

template <class T>
double norm(const BasicVideo<T>& a) {
    return std::sqrt(squared_norm(a));
}

/// y += alpha * x
template <class T>
void axpy(double alpha, const BasicVideo<T>& x, BasicVideo<T>& y) {
    require_same_shape(x.shape(), y.shape(), "axpy");
    auto xs = x.data();
    auto ys = y.data();
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = static_cast<T>(ys[i] + alpha * xs[i]);
}

/// y = x + beta * y
template <class T>
void xpby(const BasicVideo<T>& x, double beta, BasicVideo<T>& y) {
    require_same_shape(x.shape(), y.shape(), "xpby");
    auto xs = x.data();
    auto ys = y.data();
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = static_cast<T>(xs[i] + beta * ys[i]);
}

template <class T>
BasicVideo<T> operator-(const BasicVideo<T>& a, const BasicVideo<T>& b) {
    require_same_shape(a.shape(), b.shape(), "subtract");
    BasicVideo<T> out = a;
    auto o = out.data();
    auto bs = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bs[i];
    return out;
}

template <class T>
BasicVideo<T> operator+(const BasicVideo<T>& a, const BasicVideo<T>& b) {
    require_same_shape(a.shape(), b.shape(), "add");
    BasicVideo<T> out = a;
    auto o = out.data();
    auto bs = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += bs[i];
    return out;
}

template <class T>
BasicVideo<T> scaled(const BasicVideo<T>& a, double s) {
    BasicVideo<T> out = a;
    for (T& x : out.data()) x = static_cast<T>(x * s);
    return out;
}

}  // namespace vidsolve
