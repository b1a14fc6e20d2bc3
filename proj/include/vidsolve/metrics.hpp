// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "operators.hpp"

namespace vidsolve {

/// 10 log10(1 / MSE) with peak 1; +inf for identical inputs.
template <class T>
double psnr(const BasicVideo<T>& x, const BasicVideo<T>& ref) {
    require_same_shape(x.shape(), ref.shape(), "psnr");
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = double(x[i]) - double(ref[i]);
        sse += d * d;
    }
    const double mse = sse / double(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

namespace detail {

/// Mean SSIM of two single-channel images over all valid 11x11 windows.
inline double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t h, std::size_t w) {
    const auto g = gaussian_taps(kSsimSigma, kSsimWindow);
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const std::size_t oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
    double total = 0.0;
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t i = 0; i < kSsimWindow; ++i)
                for (std::size_t j = 0; j < kSsimWindow; ++j) {
                    const double wt = g[i] * g[j];
                    const double va = a[(y + i) * w + x + j], vb = b[(y + i) * w + x + j];
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    return total / double(oh * ow);
}

template <class T>
std::vector<double> grayscale(const BasicVideo<T>& v, std::size_t f) {
    const std::size_t hw = v.shape().plane_size();
    std::vector<double> g(hw, 0.0);
    auto fr = v.frame(f);
    for (std::size_t c = 0; c < v.channels(); ++c)
        for (std::size_t p = 0; p < hw; ++p) g[p] += double(fr[c * hw + p]);
    for (double& x : g) x /= double(v.channels());
    return g;
}

}  // namespace detail

/// Mean over frames of single-scale SSIM (Gaussian 11x11 window, sigma 1.5,
/// K1 = 0.01, K2 = 0.03, dynamic range 1) on the channel-mean image.
template <class T>
double ssim(const BasicVideo<T>& x, const BasicVideo<T>& ref) {
    require_same_shape(x.shape(), ref.shape(), "ssim");
    if (x.height() < kSsimWindow || x.width() < kSsimWindow)
        fail(ErrorCode::FrameTooSmall, "SSIM needs frames of at least 11x11, got " + to_string(x.shape()));
    std::vector<double> per_frame(x.frames());
    parallel_for(x.frames(), [&](std::size_t f) {
        per_frame[f] = detail::ssim_plane(detail::grayscale(x, f), detail::grayscale(ref, f), x.height(), x.width());
    });
    double total = 0.0;
    for (double s : per_frame) total += s;
    return total / double(x.frames());
}

/// Mean Frobenius norm of consecutive frame differences.
template <class T>
double inter_batch_diff(const BasicVideo<T>& v) {
    if (v.frames() < 2) fail(ErrorCode::SingleFrame, "inter-batch difference needs at least 2 frames");
    double total = 0.0;
    for (std::size_t f = 0; f + 1 < v.frames(); ++f) {
        auto a = v.frame(f);
        auto b = v.frame(f + 1);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = double(b[i]) - double(a[i]);
            s += d * d;
        }
        total += std::sqrt(s);
    }
    return total / double(v.frames() - 1);
}

/// ||Y - A(X)||^2
template <class T>
double residual(const LinearOp<T>& A, const BasicVideo<T>& x, const BasicVideo<T>& y) {
    require_same_shape(y.shape(), A.out_shape(), "residual");
    return squared_norm(y - A.apply(x));
}

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    std::optional<double> residual;
    std::optional<double> inter_batch_diff;
};

template <class T>
MetricReport evaluate(const BasicVideo<T>& x, const BasicVideo<T>& ref) {
    MetricReport r;
    r.psnr_db = psnr(x, ref);
    r.ssim = ssim(x, ref);
    if (x.frames() >= 2) r.inter_batch_diff = inter_batch_diff(x);
    return r;
}

}  // namespace vidsolve
