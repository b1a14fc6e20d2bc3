// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Per-frame noise predictors. Every model maps frame i of x_t to frame i of
// the prediction without looking at other frames, so a clip is handled as a
// batch of independent images.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <string>
#include <variant>

#include "bridge.hpp"
#include "operators.hpp"

namespace vidsolve {

/// Predicts eps = 0 everywhere.
struct ZeroModel {};

/// Exact noise predictor for a prior x0 ~ N(mu, sigma0^2 I): its Tweedie
/// estimate is the analytic posterior mean.
struct OracleGaussian {
    double mu = 0.5;
    double sigma0 = 0.25;
};

/// Training-free stand-in prior: the clean estimate is x_t / sqrt(abar)
/// smoothed by a Gaussian whose width grows with the noise level.
struct Smoother {
    double scale = 1.0;
};

inline constexpr double kSmootherMaxSigma = 5.0;

class EpsModel {
public:
    using Descriptor = std::variant<ZeroModel, OracleGaussian, Smoother, std::shared_ptr<BridgeClient>>;

    EpsModel() = default;
    explicit EpsModel(Descriptor d) : desc_(std::move(d)) {}

    /// Number of single-frame evaluations made through this model (shared
    /// by copies).
    std::size_t frame_evaluations() const noexcept { return calls_->load(); }
    void count_frames(std::size_t n) const noexcept { calls_->fetch_add(n); }

    static EpsModel zero() { return EpsModel(ZeroModel{}); }
    static EpsModel oracle_gaussian(double mu, double sigma0) {
        require(sigma0 > 0.0, ErrorCode::BadArgument, "oracle sigma0 must be > 0");
        return EpsModel(OracleGaussian{mu, sigma0});
    }
    static EpsModel smoother(double scale) {
        require(scale > 0.0, ErrorCode::BadArgument, "smoother scale must be > 0");
        return EpsModel(Smoother{scale});
    }
    static EpsModel external(std::shared_ptr<BridgeClient> client) {
        require(client != nullptr, ErrorCode::BadArgument, "external model needs a bridge");
        return EpsModel(std::move(client));
    }

    const Descriptor& descriptor() const noexcept { return desc_; }

    std::string name() const {
        struct Namer {
            std::string operator()(const ZeroModel&) const { return "zero"; }
            std::string operator()(const OracleGaussian&) const { return "oracle_gaussian"; }
            std::string operator()(const Smoother&) const { return "smoother"; }
            std::string operator()(const std::shared_ptr<BridgeClient>&) const { return "external"; }
        };
        return std::visit(Namer{}, desc_);
    }

private:
    Descriptor desc_ = ZeroModel{};
    std::shared_ptr<std::atomic<std::size_t>> calls_ = std::make_shared<std::atomic<std::size_t>>(0);
};

/// Smoothing width for the smoother prior: scale * sqrt((1 - abar) / abar),
/// clamped to [0, 5] pixels.
inline double smoother_sigma(double abar, double scale) {
    return std::clamp(scale * std::sqrt((1.0 - abar) / abar), 0.0, kSmootherMaxSigma);
}

/// Clean-image estimate of the smoother prior.
template <class T>
BasicVideo<T> smoother_estimate(const BasicVideo<T>& x_t, double abar, double scale) {
    const double sigma = smoother_sigma(abar, scale);
    BasicVideo<T> x0 = scaled(x_t, 1.0 / std::sqrt(abar));
    if (sigma <= 0.0) return x0;
    return gaussian_smooth(x0, gaussian_taps(sigma, gaussian_support(sigma)));
}

/// eps back-solved from the smoother's clean estimate:
/// (x_t - sqrt(abar) x0_hat) / sqrt(1 - abar); zero at abar = 1.
template <class T>
BasicVideo<T> smoother_denoise(const BasicVideo<T>& x_t, double abar, double scale) {
    require(scale > 0.0, ErrorCode::BadArgument, "smoother scale must be > 0");
    require(abar > 0.0 && abar <= 1.0, ErrorCode::BadArgument, "abar must lie in (0, 1]");
    if (abar == 1.0) return BasicVideo<T>(x_t.shape());
    const BasicVideo<T> x0 = smoother_estimate(x_t, abar, scale);
    const double a = std::sqrt(abar), b = std::sqrt(1.0 - abar);
    BasicVideo<T> eps(x_t.shape());
    auto xs = x_t.data();
    auto zs = x0.data();
    auto es = eps.data();
    for (std::size_t i = 0; i < es.size(); ++i) es[i] = static_cast<T>((double(xs[i]) - a * double(zs[i])) / b);
    return eps;
}

/// Analytic posterior mean of x0 given x_t under the Gaussian prior.
inline double gaussian_posterior_mean(double x_t, double abar, double mu, double sigma0) {
    const double gain = std::sqrt(abar) * sigma0 * sigma0 / (abar * sigma0 * sigma0 + 1.0 - abar);
    return mu + gain * (x_t - std::sqrt(abar) * mu);
}

namespace detail {

template <class T>
BasicVideo<T> predict_in_process(const EpsModel::Descriptor& d, const BasicVideo<T>& x_t, double abar) {
    if (std::holds_alternative<ZeroModel>(d)) return BasicVideo<T>(x_t.shape());
    if (const auto* g = std::get_if<OracleGaussian>(&d)) {
        // (x_t - sqrt(abar) m) / sqrt(1 - abar) with m the posterior mean,
        // simplified so abar -> 1 stays finite.
        const double denom = abar * g->sigma0 * g->sigma0 + 1.0 - abar;
        const double k = std::sqrt(1.0 - abar) / denom;
        const double shift = std::sqrt(abar) * g->mu;
        BasicVideo<T> eps(x_t.shape());
        auto xs = x_t.data();
        auto es = eps.data();
        for (std::size_t i = 0; i < es.size(); ++i) es[i] = static_cast<T>(k * (double(xs[i]) - shift));
        return eps;
    }
    const auto& s = std::get<Smoother>(d);
    // Frames are independent; run them in parallel.
    BasicVideo<T> eps(x_t.shape());
    parallel_for(x_t.frames(), [&](std::size_t f) {
        auto e = smoother_denoise(x_t.slice_frames(f, 1), abar, s.scale);
        std::copy(e.data().begin(), e.data().end(), eps.frame(f).begin());
    });
    return eps;
}

}  // namespace detail

/// eps_hat(x_t, t) for every frame of the clip.
template <class T>
BasicVideo<T> predict(const EpsModel& m, const BasicVideo<T>& x_t, std::size_t t, double abar_t) {
    require(abar_t > 0.0 && abar_t <= 1.0, ErrorCode::BadArgument, "abar_t must lie in (0, 1]");
    m.count_frames(x_t.frames());
    if (const auto* bridge = std::get_if<std::shared_ptr<BridgeClient>>(&m.descriptor())) {
        Video eps = (*bridge)->predict(x_t.template cast<float>(), static_cast<std::uint32_t>(t), abar_t);
        if constexpr (std::is_same_v<T, float>) {
            return eps;
        } else {
            return eps.template cast<T>();
        }
    }
    return detail::predict_in_process(m.descriptor(), x_t, abar_t);
}

}  // namespace vidsolve
