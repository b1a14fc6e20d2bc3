// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Data-consistency solvers: conjugate gradients on the normal equations
// (CGLS form) and the single gradient step used for ablations.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "operators.hpp"

namespace vidsolve {

/// Directions with ||A p||^2 at or below this are treated as breakdown.
inline constexpr double kCgBreakdown = 1e-30;
/// CG stops once ||A^T r|| drops below this many epsilons of its start value.
inline constexpr double kCgFloorUlps = 16.0;

struct CgReport {
    std::size_t iterations_run = 0;
    /// ||Y - A X_k|| for k = 0..iterations_run (entry 0 is the start point).
    /// Nonincreasing in exact arithmetic.
    std::vector<double> residual_norms;
    /// ||A^T (Y - A X_k)||, the normal-equation residual, same indexing.
    std::vector<double> normal_residual_norms;
    bool converged = false;
};

namespace detail {
template <class T>
void require_finite(const BasicVideo<T>& v, const char* where) {
    if (!all_finite(v)) fail(ErrorCode::NonFiniteEncountered, std::string("non-finite values in ") + where);
}
}  // namespace detail

/// At most `l` CG iterations on A^T A X = A^T Y starting from x_init; each
/// iterate minimizes ||Y - A X|| over x_init plus the Krylov subspace built
/// so far. Stops early only when tol > 0 and ||A^T r|| <= tol, when the
/// normal residual falls to the working-precision floor, or on breakdown.
template <class T>
std::pair<BasicVideo<T>, CgReport> cg_data_consistency(const LinearOp<T>& A, const BasicVideo<T>& Y,
                                                      const BasicVideo<T>& x_init, std::size_t l, double tol = 0.0) {
    require_same_shape(Y.shape(), A.out_shape(), "cg measurement");
    require_same_shape(x_init.shape(), A.in_shape(), "cg initial point");
    require(l >= 1, ErrorCode::BadArgument, "CG depth l must be >= 1");
    require(tol >= 0.0, ErrorCode::BadArgument, "CG tolerance must be >= 0");

    CgReport report;
    BasicVideo<T> x = x_init;
    BasicVideo<T> r = Y - A.apply(x);
    BasicVideo<T> s = A.adjoint(r);
    BasicVideo<T> p = s;
    double gamma = squared_norm(s);
    report.residual_norms.push_back(norm(r));
    report.normal_residual_norms.push_back(std::sqrt(gamma));
    if (!std::isfinite(gamma)) fail(ErrorCode::NonFiniteEncountered, "CG start point");
    const double floor = kCgFloorUlps * std::numeric_limits<T>::epsilon() * std::sqrt(gamma);
    const auto done = [&] { return std::sqrt(gamma) <= floor || (tol > 0.0 && std::sqrt(gamma) <= tol); };

    for (std::size_t k = 0; k < l; ++k) {
        if (done()) {
            report.converged = true;
            break;
        }
        BasicVideo<T> q = A.apply(p);
        const double delta = squared_norm(q);
        if (delta <= kCgBreakdown) break;
        const double alpha = gamma / delta;
        if (!std::isfinite(alpha)) fail(ErrorCode::NonFiniteEncountered, "CG step length at iteration " + std::to_string(k));
        axpy(alpha, p, x);
        axpy(-alpha, q, r);
        s = A.adjoint(r);
        const double gamma_next = squared_norm(s);
        if (!std::isfinite(gamma_next))
            fail(ErrorCode::NonFiniteEncountered, "CG residual at iteration " + std::to_string(k));
        xpby(s, gamma_next / gamma, p);
        gamma = gamma_next;
        ++report.iterations_run;
        report.residual_norms.push_back(norm(r));
        report.normal_residual_norms.push_back(std::sqrt(gamma));
    }
    if (done()) report.converged = true;
    detail::require_finite(x, "CG iterate");
    return {std::move(x), std::move(report)};
}

/// x_hat - gamma * 2 A^T (A x_hat - Y): one gradient step on ||Y - A X||^2.
template <class T>
BasicVideo<T> gd_data_consistency(const LinearOp<T>& A, const BasicVideo<T>& Y, const BasicVideo<T>& x_hat,
                                  double gamma) {
    require(gamma > 0.0, ErrorCode::BadArgument, "gradient step size gamma must be > 0");
    require_same_shape(Y.shape(), A.out_shape(), "gd measurement");
    require_same_shape(x_hat.shape(), A.in_shape(), "gd estimate");
    BasicVideo<T> grad = A.adjoint(A.apply(x_hat) - Y);
    BasicVideo<T> out = x_hat;
    axpy(-2.0 * gamma, grad, out);
    detail::require_finite(out, "gradient step");
    return out;
}

/// Plain CG for a symmetric positive semidefinite system M x = b, fixed
/// iteration count with the same breakdown guard.
template <class T>
BasicVideo<T> cg_spd(const std::function<BasicVideo<T>(const BasicVideo<T>&)>& M, const BasicVideo<T>& b,
                     BasicVideo<T> x, std::size_t iters) {
    require_same_shape(b.shape(), x.shape(), "cg_spd");
    BasicVideo<T> r = b - M(x);
    BasicVideo<T> p = r;
    double rr = squared_norm(r);
    for (std::size_t k = 0; k < iters && rr > 0.0; ++k) {
        BasicVideo<T> mp = M(p);
        const double pmp = dot(p, mp);
        if (pmp <= kCgBreakdown) break;
        const double alpha = rr / pmp;
        axpy(alpha, p, x);
        axpy(-alpha, mp, r);
        const double rr_next = squared_norm(r);
        xpby(r, rr_next / rr, p);
        rr = rr_next;
    }
    detail::require_finite(x, "CG iterate");
    return x;
}

}  // namespace vidsolve
