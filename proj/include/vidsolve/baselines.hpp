// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Classical comparators: conjugate gradients alone, and ADMM with
// anisotropic total variation.

#include <cmath>
#include <vector>

#include "krylov.hpp"
#include "metrics.hpp"

namespace vidsolve {
/// CG on the normal equations from X = 0 for total_iters steps, fewer once
/// the normal residual reaches the precision floor.
template <class T>
BasicVideo<T> standalone_cg(const LinearOp<T>& A, const BasicVideo<T>& Y, std::size_t total_iters) {
    require(total_iters >= 1, ErrorCode::BadArgument, "total_iters must be >= 1");
    return cg_data_consistency(A, Y, BasicVideo<T>(A.in_shape()), total_iters, 0.0).first;
}

struct TvAxes {
    bool t = true;
    bool h = true;
    bool w = true;

    std::size_t count() const { return std::size_t(t) + std::size_t(h) + std::size_t(w); }
};

/// Forward differences along the enabled axes, stacked along the frame
/// dimension in (t, h, w) order. The last slice along each axis is 0.
template <class T>
LinearOp<T> finite_difference_op(Shape shape, TvAxes axes = {}) {
    require(axes.count() >= 1, ErrorCode::BadArgument, "enable at least one TV axis");
    const Shape out{shape.n * axes.count(), shape.c, shape.h, shape.w};
    std::vector<int> which;
    if (axes.t) which.push_back(0);
    if (axes.h) which.push_back(1);
    if (axes.w) which.push_back(2);

    auto apply = [=](const BasicVideo<T>& x) {
        BasicVideo<T> z(out);
        for (std::size_t b = 0; b < which.size(); ++b) {
            const int ax = which[b];
            for (std::size_t f = 0; f < shape.n; ++f)
                for (std::size_t c = 0; c < shape.c; ++c)
                    for (std::size_t y = 0; y < shape.h; ++y)
                        for (std::size_t xx = 0; xx < shape.w; ++xx) {
                            double d = 0.0;
                            if (ax == 0 && f + 1 < shape.n) d = double(x(f + 1, c, y, xx)) - double(x(f, c, y, xx));
                            if (ax == 1 && y + 1 < shape.h) d = double(x(f, c, y + 1, xx)) - double(x(f, c, y, xx));
                            if (ax == 2 && xx + 1 < shape.w) d = double(x(f, c, y, xx + 1)) - double(x(f, c, y, xx));
                            z(b * shape.n + f, c, y, xx) = static_cast<T>(d);
                        }
        }
        return z;
    };
    auto adjoint = [=](const BasicVideo<T>& z) {
        BasicVideo<T> x(shape);
        for (std::size_t b = 0; b < which.size(); ++b) {
            const int ax = which[b];
            const std::size_t off = b * shape.n;
            for (std::size_t f = 0; f < shape.n; ++f)
                for (std::size_t c = 0; c < shape.c; ++c)
                    for (std::size_t y = 0; y < shape.h; ++y)
                        for (std::size_t xx = 0; xx < shape.w; ++xx) {
                            // (D^T z)[i] = z[i-1] - z[i], with z[-1] = 0 and z[L-1] ignored.
                            double v = 0.0;
                            if (ax == 0) {
                                if (f > 0) v += double(z(off + f - 1, c, y, xx));
                                if (f + 1 < shape.n) v -= double(z(off + f, c, y, xx));
                            } else if (ax == 1) {
                                if (y > 0) v += double(z(off + f, c, y - 1, xx));
                                if (y + 1 < shape.h) v -= double(z(off + f, c, y, xx));
                            } else {
                                if (xx > 0) v += double(z(off + f, c, y, xx - 1));
                                if (xx + 1 < shape.w) v -= double(z(off + f, c, y, xx));
                            }
                            x(f, c, y, xx) = static_cast<T>(double(x(f, c, y, xx)) + v);
                        }
        }
        return x;
    };
    return LinearOp<T>(shape, out, "tv-gradient", apply, adjoint);
}

/// S_k(v) = sign(v) max(|v| - k, 0), elementwise.
template <class T>
BasicVideo<T> soft_threshold(const BasicVideo<T>& v, double kappa) {
    BasicVideo<T> out = v;
    for (T& x : out.data()) {
        const double a = std::abs(double(x)) - kappa;
        x = a > 0.0 ? static_cast<T>(std::copysign(a, double(x))) : T(0);
    }
    return out;
}

struct AdmmConfig {
    double rho = 1.0;
    double lambda = 0.001;
    std::size_t outer = 30;
    std::size_t inner = 20;
    TvAxes axes{};

    void validate() const {
        require(rho > 0.0, ErrorCode::BadArgument, "ADMM rho must be > 0");
        require(lambda >= 0.0, ErrorCode::BadArgument, "ADMM lambda must be >= 0");
        require(outer >= 1 && inner >= 1, ErrorCode::BadArgument, "ADMM iteration counts must be >= 1");
    }
};

template <class T>
struct AdmmResult {
    BasicVideo<T> video;
    /// Objective at X = 0 followed by one entry per outer iteration.
    std::vector<double> objective;
};

/// 0.5 ||A X - Y||^2 + lambda ||D X||_1
template <class T>
double tv_objective(const LinearOp<T>& A, const LinearOp<T>& D, const BasicVideo<T>& x, const BasicVideo<T>& y,
                    double lambda) {
    const BasicVideo<T> dx = D.apply(x);
    double l1 = 0.0;
    for (T v : dx.data()) l1 += std::abs(double(v));
    return 0.5 * residual(A, x, y) + lambda * l1;
}

/// Scaled-form ADMM on the split Z = D X, starting from X = 0. The X-update
/// runs `inner` CG steps on (A^T A + rho D^T D) X = A^T Y + rho D^T (Z - U),
/// warm-started from the previous X.
template <class T>
AdmmResult<T> admm_tv(const LinearOp<T>& A, const BasicVideo<T>& Y, const AdmmConfig& cfg = {}) {
    cfg.validate();
    require_same_shape(Y.shape(), A.out_shape(), "admm measurement");
    const auto D = finite_difference_op<T>(A.in_shape(), cfg.axes);
    const BasicVideo<T> aty = A.adjoint(Y);
    const std::function<BasicVideo<T>(const BasicVideo<T>&)> normal = [&](const BasicVideo<T>& v) {
        BasicVideo<T> out = A.adjoint(A.apply(v));
        axpy(cfg.rho, D.adjoint(D.apply(v)), out);
        return out;
    };

    AdmmResult<T> result;
    BasicVideo<T> x(A.in_shape());
    BasicVideo<T> z(D.out_shape()), u(D.out_shape());
    result.objective.push_back(tv_objective(A, D, x, Y, cfg.lambda));
    for (std::size_t k = 0; k < cfg.outer; ++k) {
        BasicVideo<T> rhs = aty;
        axpy(cfg.rho, D.adjoint(z - u), rhs);
        x = cg_spd(normal, rhs, std::move(x), cfg.inner);
        const BasicVideo<T> dx = D.apply(x);
        z = soft_threshold(dx + u, cfg.lambda / cfg.rho);
        u = u + dx - z;
        result.objective.push_back(tv_objective(A, D, x, Y, cfg.lambda));
    }
    result.video = std::move(x);
    return result;
}

}  // namespace vidsolve
