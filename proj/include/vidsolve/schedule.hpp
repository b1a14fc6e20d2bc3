// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "video.hpp"

namespace vidsolve {

/// Variance-preserving diffusion schedule, indexed 1..T. Index 0 is the
/// clean state (alpha_bar = 1) so the last reverse step can refer to it.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> beta_1_to_T) {
        const std::size_t T = beta_1_to_T.size();
        require(T >= 2, ErrorCode::BadRange, "schedule needs at least 2 steps");
        beta_.assign(T + 1, 0.0);
        alpha_.assign(T + 1, 1.0);
        alpha_bar_.assign(T + 1, 1.0);
        beta_tilde_.assign(T + 1, 0.0);
        for (std::size_t t = 1; t <= T; ++t) {
            const double b = beta_1_to_T[t - 1];
            require(b > 0.0 && b < 1.0, ErrorCode::BadRange, "beta must lie in (0, 1)");
            require(t == 1 || b >= beta_[t - 1], ErrorCode::BadRange, "beta must be nondecreasing");
            beta_[t] = b;
            alpha_[t] = 1.0 - b;
            alpha_bar_[t] = alpha_bar_[t - 1] * alpha_[t];
            beta_tilde_[t] = (1.0 - alpha_bar_[t - 1]) / (1.0 - alpha_bar_[t]) * b;
        }
    }

    std::size_t steps() const noexcept { return beta_.size() - 1; }
    double beta(std::size_t t) const { return beta_.at(t); }
    double alpha(std::size_t t) const { return alpha_.at(t); }
    double alpha_bar(std::size_t t) const { return alpha_bar_.at(t); }
    double beta_tilde(std::size_t t) const { return beta_tilde_.at(t); }

    /// Posterior-variance factor for a jump t -> t_prev of a subsampled plan:
    /// (1 - abar_prev) / (1 - abar_t) * (1 - abar_t / abar_prev). Equals the
    /// table value beta_tilde(t) when t_prev == t - 1, and 0 when t_prev == 0.
    double beta_tilde(std::size_t t, std::size_t t_prev) const {
        require(t_prev < t && t <= steps(), ErrorCode::BadArgument, "need 0 <= t_prev < t <= T");
        if (t_prev + 1 == t) return beta_tilde_[t];
        const double ab_t = alpha_bar_[t], ab_prev = alpha_bar_[t_prev];
        return (1.0 - ab_prev) / (1.0 - ab_t) * (1.0 - ab_t / ab_prev);
    }

private:
    std::vector<double> beta_, alpha_, alpha_bar_, beta_tilde_;
};

/// beta linear from beta_start to beta_end inclusive over t_base steps.
inline NoiseSchedule make_linear_schedule(std::size_t t_base = 1000, double beta_start = 1e-4,
                                          double beta_end = 0.02) {
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        fail(ErrorCode::BadRange, "need 0 < beta_start <= beta_end < 1");
    if (t_base < 2) fail(ErrorCode::BadRange, "t_base must be >= 2");
    std::vector<double> beta(t_base);
    for (std::size_t i = 0; i < t_base; ++i)
        beta[i] = beta_start + (beta_end - beta_start) * double(i) / double(t_base - 1);
    return NoiseSchedule(std::move(beta));
}

/// Subsampled reverse-time indices, highest first.
struct StepPlan {
    std::size_t nfe = 0;
    std::vector<std::size_t> timesteps;

    /// The index the i-th step renoises to; 0 (clean) after the last step.
    std::size_t prev(std::size_t i) const { return i + 1 < timesteps.size() ? timesteps[i + 1] : 0; }
};

/// Uniform stride T/nfe: t_i = T - floor(i * T / nfe), i = 0..nfe-1.
inline StepPlan subsample_steps(const NoiseSchedule& s, std::size_t nfe) {
    const std::size_t T = s.steps();
    if (nfe < 1 || nfe > T) fail(ErrorCode::BadNfe, "nfe must be in [1, " + std::to_string(T) + "], got " + std::to_string(nfe));
    StepPlan plan{nfe, {}};
    plan.timesteps.reserve(nfe);
    for (std::size_t i = 0; i < nfe; ++i) plan.timesteps.push_back(T - (i * T) / nfe);
    return plan;
}

/// Posterior-mean estimate (x_t - sqrt(1 - abar) * eps) / sqrt(abar).
template <class T>
BasicVideo<T> tweedie(const BasicVideo<T>& x_t, const BasicVideo<T>& eps_hat, double abar_t) {
    require_same_shape(x_t.shape(), eps_hat.shape(), "tweedie");
    require(abar_t > 0.0 && abar_t <= 1.0, ErrorCode::BadArgument, "abar_t must lie in (0, 1]");
    const double a = std::sqrt(abar_t), b = std::sqrt(1.0 - abar_t);
    BasicVideo<T> out(x_t.shape());
    auto xs = x_t.data();
    auto es = eps_hat.data();
    auto os = out.data();
    for (std::size_t i = 0; i < os.size(); ++i) os[i] = static_cast<T>((double(xs[i]) - b * double(es[i])) / a);
    return out;
}

struct RenoiseCoefficients {
    double signal;         // sqrt(abar_prev)
    double deterministic;  // sqrt(1 - abar_prev - eta^2 beta_tilde^2)
    double stochastic;     // eta * beta_tilde
};

inline RenoiseCoefficients renoise_coefficients(const NoiseSchedule& s, std::size_t t, std::size_t t_prev, double eta) {
    require(eta >= 0.0, ErrorCode::BadArgument, "eta must be >= 0");
    const double ab_prev = s.alpha_bar(t_prev);
    const double bt = s.beta_tilde(t, t_prev);
    const double stochastic = eta * bt;
    const double det_var = 1.0 - ab_prev - stochastic * stochastic;
    if (det_var < 0.0)
        fail(ErrorCode::EtaTooLarge, "eta " + std::to_string(eta) + " exceeds the noise budget at t=" + std::to_string(t));
    return {std::sqrt(ab_prev), std::sqrt(det_var), stochastic};
}

/// sqrt(abar_prev) xbar + sqrt(1 - abar_prev - eta^2 bt^2) eps_det + eta bt eps_sto
template <class T>
BasicVideo<T> renoise(const BasicVideo<T>& xbar, const BasicVideo<T>& eps_det, const BasicVideo<T>& eps_sto,
                      const NoiseSchedule& s, std::size_t t, std::size_t t_prev, double eta) {
    require_same_shape(xbar.shape(), eps_det.shape(), "renoise");
    require_same_shape(xbar.shape(), eps_sto.shape(), "renoise");
    const auto k = renoise_coefficients(s, t, t_prev, eta);
    BasicVideo<T> out(xbar.shape());
    auto xb = xbar.data();
    auto ed = eps_det.data();
    auto es = eps_sto.data();
    auto os = out.data();
    if (k.stochastic == 0.0) {
        for (std::size_t i = 0; i < os.size(); ++i)
            os[i] = static_cast<T>(k.signal * double(xb[i]) + k.deterministic * double(ed[i]));
    } else {
        for (std::size_t i = 0; i < os.size(); ++i)
            os[i] = static_cast<T>(k.signal * double(xb[i]) + k.deterministic * double(ed[i]) +
                                   k.stochastic * double(es[i]));
    }
    return out;
}

}  // namespace vidsolve
