// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

// Batch-consistent reverse diffusion for video inverse problems.
//
// Each step denoises every frame independently with the image model,
// imposes data consistency on the whole clip with a few CG iterations
// warm-started at the denoised batch, and renoises with a noise field that is
// shared by all frames when noise_sync is on.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "denoiser.hpp"
#include "krylov.hpp"
#include "metrics.hpp"
#include "schedule.hpp"

namespace vidsolve {

enum class UpdateRule { CG, GD };

struct SolverConfig {
    std::size_t nfe = 20;
    double eta = 0.15;
    std::size_t l = 5;
    UpdateRule update = UpdateRule::CG;
    double gamma = 0.5;
    bool noise_sync = true;
    std::uint64_t seed = 0;
    bool trace = false;
    double cg_tol = 0.0;
    /// Test hook: skip the data-consistency step entirely.
    bool skip_data_consistency = false;

    void validate() const {
        require(nfe >= 1, ErrorCode::BadNfe, "nfe must be >= 1");
        require(eta >= 0.0, ErrorCode::BadArgument, "eta must be >= 0");
        if (update == UpdateRule::CG) require(l >= 1, ErrorCode::BadArgument, "CG depth l must be >= 1");
        if (update == UpdateRule::GD) require(gamma > 0.0, ErrorCode::BadArgument, "gamma must be > 0");
    }
};

template <class T>
struct StepRecord {
    std::size_t t = 0;
    std::optional<BasicVideo<T>> tweedie_batch;
    double residual_before = 0.0;  // ||Y - A(Tweedie batch)||^2
    double residual = 0.0;         // ||Y - A(after data consistency)||^2
    double inter_batch_diff = 0.0; // of the Tweedie batch
};

template <class T>
struct SolveTrace {
    std::vector<StepRecord<T>> steps;
};

/// Standard normal field of the given shape. With sync, one frame is drawn
/// and copied to every frame.
template <class T>
BasicVideo<T> draw_noise(Shape shape, std::mt19937_64& rng, bool sync) {
    if (!sync) {
        BasicVideo<T> v(shape);
        fill_gaussian(v, rng);
        return v;
    }
    Shape one = shape;
    one.n = 1;
    BasicVideo<T> field(one);
    fill_gaussian(field, rng);
    BasicVideo<T> v(shape);
    for (std::size_t f = 0; f < shape.n; ++f) std::copy(field.data().begin(), field.data().end(), v.frame(f).begin());
    return v;
}

namespace detail {

template <class T>
double frame_spread(const BasicVideo<T>& v) {
    return v.frames() >= 2 ? inter_batch_diff(v) : 0.0;
}

/// The shared reverse loop. With A == nullptr no data consistency is applied.
template <class T>
std::pair<BasicVideo<T>, SolveTrace<T>> reverse_diffusion(const LinearOp<T>* A, const BasicVideo<T>* Y,
                                                          const EpsModel& m, const NoiseSchedule& s,
                                                          const SolverConfig& cfg, Shape shape) {
    cfg.validate();
    const StepPlan plan = subsample_steps(s, cfg.nfe);
    std::mt19937_64 rng(cfg.seed);
    BasicVideo<T> x = draw_noise<T>(shape, rng, cfg.noise_sync);
    SolveTrace<T> trace;
    trace.steps.reserve(plan.timesteps.size());

    for (std::size_t i = 0; i < plan.timesteps.size(); ++i) {
        const std::size_t t = plan.timesteps[i];
        const std::size_t t_prev = plan.prev(i);
        const double abar = s.alpha_bar(t);
        try {
            // One denoiser evaluation per step, reused for renoising.
            const BasicVideo<T> eps = predict(m, x, t, abar);
            require_same_shape(eps.shape(), x.shape(), "denoiser output");
            BasicVideo<T> xhat = tweedie(x, eps, abar);
            detail::require_finite(xhat, "Tweedie estimate");

            StepRecord<T> rec;
            rec.t = t;
            rec.inter_batch_diff = frame_spread(xhat);
            BasicVideo<T> xbar;
            if (A != nullptr && !cfg.skip_data_consistency) {
                rec.residual_before = residual(*A, xhat, *Y);
                xbar = cfg.update == UpdateRule::CG ? cg_data_consistency(*A, *Y, xhat, cfg.l, cfg.cg_tol).first
                                                    : gd_data_consistency(*A, *Y, xhat, cfg.gamma);
                rec.residual = residual(*A, xbar, *Y);
            } else {
                if (A != nullptr) rec.residual = rec.residual_before = residual(*A, xhat, *Y);
                xbar = xhat;
            }
            if (cfg.trace) rec.tweedie_batch = std::move(xhat);

            const auto k = renoise_coefficients(s, t, t_prev, cfg.eta);
            BasicVideo<T> eps_sto = k.stochastic > 0.0 ? draw_noise<T>(shape, rng, cfg.noise_sync) : BasicVideo<T>(shape);
            x = renoise(xbar, eps, eps_sto, s, t, t_prev, cfg.eta);
            detail::require_finite(x, "renoised state");
            trace.steps.push_back(std::move(rec));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::NonFiniteEncountered)
                fail(ErrorCode::NonFiniteEncountered, "step " + std::to_string(i) + " (t=" + std::to_string(t) + "): " + e.what());
            throw;
        }
    }
    return {std::move(x), std::move(trace)};
}

}  // namespace detail

/// Solves Y = A(X) + W with a per-frame image prior. Deterministic for a
/// fixed seed; the output has A's input shape.
template <class T>
std::pair<BasicVideo<T>, SolveTrace<T>> solve(const LinearOp<T>& A, const BasicVideo<T>& Y, const EpsModel& m,
                                              const NoiseSchedule& s, const SolverConfig& cfg) {
    require_same_shape(Y.shape(), A.out_shape(), "measurement");
    return detail::reverse_diffusion(&A, &Y, m, s, cfg, A.in_shape());
}

/// The same sampler with no data consistency.
template <class T = float>
BasicVideo<T> unconditional_sample(const EpsModel& m, const NoiseSchedule& s, Shape shape, std::size_t nfe, double eta,
                                   bool noise_sync, std::uint64_t seed) {
    require(shape.valid(), ErrorCode::BadShape, "sample shape must have all dims >= 1");
    SolverConfig cfg;
    cfg.nfe = nfe;
    cfg.eta = eta;
    cfg.noise_sync = noise_sync;
    cfg.seed = seed;
    return detail::reverse_diffusion<T>(nullptr, nullptr, m, s, cfg, shape).first;
}

/// Default PSF search grid: odd uniform widths 1..15.
inline std::vector<double> default_psf_grid() { return {1, 3, 5, 7, 9, 11, 13, 15}; }

inline PsfSpec psf_from_parameter(PsfFamily family, double p) {
    if (family == PsfFamily::Gaussian) return PsfSpec::gaussian(p);
    require(p >= 1.0 && std::floor(p) == p, ErrorCode::BadKernel, "uniform PSF width must be a positive integer");
    return PsfSpec::uniform(static_cast<std::size_t>(p));
}

/// The grid member minimizing ||Y - temporal_psf(h)(X)||^2; ties go to
/// the smaller parameter.
template <class T>
PsfSpec estimate_psf(const BasicVideo<T>& X, const BasicVideo<T>& Y, PsfFamily family, std::vector<double> grid) {
    if (grid.empty()) fail(ErrorCode::EmptyGrid, "PSF grid is empty");
    require_same_shape(X.shape(), Y.shape(), "estimate_psf");
    std::sort(grid.begin(), grid.end());
    std::optional<PsfSpec> best;
    double best_res = 0.0;
    for (double p : grid) {
        const PsfSpec spec = psf_from_parameter(family, p);
        const double r = residual(temporal_psf<T>(spec, X.shape()), X, Y);
        if (!best || r < best_res) {
            best = spec;
            best_res = r;
        }
    }
    return *best;
}

template <class T>
struct BlindResult {
    BasicVideo<T> video;
    BasicVideo<T> stage1;
    PsfSpec initial_psf;
    PsfSpec refined_psf;
    double stage1_residual = 0.0;
    double stage2_residual = 0.0;
};

/// Blind temporal deblurring: estimate the PSF from a pre-restoration (or
/// from Y itself), solve, re-estimate from the result, solve again.
template <class T>
BlindResult<T> blind_deblur(const BasicVideo<T>& Y, const EpsModel& m, const NoiseSchedule& s, const SolverConfig& cfg,
                            const std::optional<BasicVideo<T>>& pre_restoration, PsfFamily family = PsfFamily::Uniform,
                            std::vector<double> grid = default_psf_grid()) {
    if (pre_restoration) require_same_shape(pre_restoration->shape(), Y.shape(), "pre-restoration");
    const BasicVideo<T>& start = pre_restoration ? *pre_restoration : Y;

    BlindResult<T> out;
    out.initial_psf = estimate_psf(start, Y, family, grid);
    const auto op1 = temporal_psf<T>(out.initial_psf, Y.shape());
    out.stage1 = solve(op1, Y, m, s, cfg).first;
    out.stage1_residual = residual(op1, out.stage1, Y);

    out.refined_psf = estimate_psf(out.stage1, Y, family, grid);
    const auto op2 = temporal_psf<T>(out.refined_psf, Y.shape());
    out.video = solve(op2, Y, m, s, cfg).first;
    out.stage2_residual = residual(op2, out.video, Y);
    return out;
}

}  // namespace vidsolve
