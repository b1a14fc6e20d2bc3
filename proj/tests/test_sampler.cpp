// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <vidsolve/sampler.hpp>
#include <vidsolve/synth.hpp>

#include "test_util.hpp"

using namespace vidsolve;
using vidsolve::testing::error_code_of;
using vidsolve::testing::random_video;

namespace {

Video clip(Shape s, std::uint64_t seed = 0) { return synth_video<float>(SynthKind::MovingSquare, s, seed); }

SolverConfig quick(std::size_t nfe = 5) {
    SolverConfig c;
    c.nfe = nfe;
    c.seed = 11;
    return c;
}

bool frames_identical(const Video& v) {
    for (std::size_t f = 1; f < v.frames(); ++f)
        for (std::size_t i = 0; i < v.shape().frame_size(); ++i)
            if (v.frame(f)[i] != v.frame(0)[i]) return false;
    return true;
}

}  // namespace

TEST(Solve, IdentitySingleStepReturnsMeasurement) {
    const Shape s{3, 1, 8, 8};
    const auto Y = clip(s);
    const auto x = solve(identity_op<float>(s), Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(1)).first;
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], Y[i], 1e-6);
}

TEST(Solve, OutputHasOperatorInputShape) {
    const Shape s{4, 1, 16, 16};
    const auto A = avgpool_sr<float>(4, s);
    const auto Y = A.apply(clip(s));
    const auto x = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(3)).first;
    EXPECT_EQ(x.shape(), s);
}

TEST(Solve, SyncWithoutDataConsistencyKeepsFramesIdentical) {
    const Shape s{5, 2, 8, 8};
    auto cfg = quick(6);
    cfg.skip_data_consistency = true;
    const auto A = identity_op<float>(s);
    const auto Y = clip(s);
    const auto [x, trace] = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg);
    EXPECT_TRUE(frames_identical(x));
    for (const auto& r : trace.steps) EXPECT_EQ(r.inter_batch_diff, 0.0);
}

TEST(Solve, DeterministicForFixedSeed) {
    const Shape s{6, 1, 12, 12};
    const auto A = temporal_psf<float>(PsfSpec::uniform(3), s);
    const auto Y = degrade(clip(s), A, 0.01, 2);
    auto cfg = quick(8);
    cfg.trace = true;
    const auto a = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg);
    const auto b = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg);
    EXPECT_EQ(a.first, b.first);
    ASSERT_EQ(a.second.steps.size(), b.second.steps.size());
    for (std::size_t i = 0; i < a.second.steps.size(); ++i) {
        EXPECT_EQ(a.second.steps[i].t, b.second.steps[i].t);
        EXPECT_EQ(a.second.steps[i].residual, b.second.steps[i].residual);
        EXPECT_EQ(a.second.steps[i].residual_before, b.second.steps[i].residual_before);
        EXPECT_EQ(*a.second.steps[i].tweedie_batch, *b.second.steps[i].tweedie_batch);
    }
    cfg.seed = 12;
    EXPECT_NE(solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg).first, a.first);
}

TEST(Solve, ThreadCountDoesNotChangeResult) {
    const Shape s{8, 2, 16, 16};
    const auto A = temporal_psf<float>(PsfSpec::uniform(5), s);
    const auto Y = degrade(clip(s), A, 0.01, 3);
    set_num_threads(1);
    const auto one = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(6)).first;
    set_num_threads(4);
    const auto four = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(6)).first;
    set_num_threads(0);
    EXPECT_EQ(one, four);
}

TEST(Solve, TraceRecordsEveryStep) {
    const Shape s{4, 1, 8, 8};
    const auto A = temporal_psf<float>(PsfSpec::uniform(3), s);
    const auto Y = A.apply(clip(s));
    auto cfg = quick(7);
    cfg.trace = true;
    const auto trace = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg).second;
    const auto plan = subsample_steps(make_linear_schedule(), 7);
    ASSERT_EQ(trace.steps.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(trace.steps[i].t, plan.timesteps[i]);
        ASSERT_TRUE(trace.steps[i].tweedie_batch.has_value());
        EXPECT_EQ(trace.steps[i].tweedie_batch->shape(), s);
    }
}

TEST(Solve, DataConsistencyNeverRaisesResidual) {
    const Shape s{8, 1, 16, 16};
    const auto A = temporal_psf<float>(PsfSpec::uniform(7), s);
    const auto Y = degrade(clip(s), A, 0.02, 4);
    for (auto rule : {UpdateRule::CG, UpdateRule::GD}) {
        auto cfg = quick(10);
        cfg.update = rule;
        const auto trace = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg).second;
        for (const auto& r : trace.steps) EXPECT_LE(r.residual, r.residual_before * (1 + 1e-6) + 1e-9);
    }
}

TEST(Solve, CgBeatsGradientStepOnResidual) {
    const Shape s{8, 1, 16, 16};
    const auto A = temporal_psf<float>(PsfSpec::uniform(7), s);
    const auto Y = degrade(clip(s), A, 0.0, 0);
    auto cg = quick(10);
    auto gd = cg;
    gd.update = UpdateRule::GD;
    const auto xc = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cg).first;
    const auto xg = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), gd).first;
    EXPECT_LT(residual(A, xc, Y), residual(A, xg, Y));
}

TEST(Solve, CountsOneDenoiserCallPerFramePerStep) {
    const Shape s{5, 1, 8, 8};
    const auto m = EpsModel::smoother(1.0);
    solve(identity_op<float>(s), clip(s), m, make_linear_schedule(), quick(9));
    EXPECT_EQ(m.frame_evaluations(), 45u);
}

TEST(Solve, ContractErrors) {
    const Shape s{2, 1, 4, 4};
    const auto A = identity_op<float>(s);
    const Video Y(s);
    auto cfg = quick(5);
    cfg.eta = 50.0;
    EXPECT_EQ(error_code_of([&] { solve(A, Y, EpsModel::zero(), make_linear_schedule(), cfg); }), ErrorCode::EtaTooLarge);
    cfg = quick(0);
    EXPECT_EQ(error_code_of([&] { solve(A, Y, EpsModel::zero(), make_linear_schedule(), cfg); }), ErrorCode::BadNfe);
    cfg = quick(1001);
    EXPECT_EQ(error_code_of([&] { solve(A, Y, EpsModel::zero(), make_linear_schedule(), cfg); }), ErrorCode::BadNfe);
    cfg = quick(5);
    cfg.l = 0;
    EXPECT_EQ(error_code_of([&] { solve(A, Y, EpsModel::zero(), make_linear_schedule(), cfg); }), ErrorCode::BadArgument);
    cfg = quick(5);
    EXPECT_EQ(error_code_of([&] { solve(A, Video(Shape{3, 1, 4, 4}), EpsModel::zero(), make_linear_schedule(), cfg); }),
              ErrorCode::ShapeMismatch);
}

TEST(Solve, NonFiniteReportsStep) {
    const Shape s{2, 1, 4, 4};
    Video Y(s);
    Y[3] = std::numeric_limits<float>::infinity();
    try {
        solve(identity_op<float>(s), Y, EpsModel::zero(), make_linear_schedule(), quick(4));
        FAIL() << "expected NonFiniteEncountered";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteEncountered);
        EXPECT_NE(std::string(e.what()).find("step 0"), std::string::npos);
    }
}

// ---------------------------------------------------------------------------

TEST(Unconditional, SyncGivesIdenticalFrames) {
    const auto x = unconditional_sample(EpsModel::smoother(1.0), make_linear_schedule(), Shape{6, 1, 12, 12}, 10, 0.5,
                                        true, 3);
    EXPECT_TRUE(frames_identical(x));
    EXPECT_EQ(inter_batch_diff(x), 0.0);
}

TEST(Unconditional, IndependentNoiseGivesDistinctFrames) {
    const auto x = unconditional_sample(EpsModel::smoother(1.0), make_linear_schedule(), Shape{6, 1, 12, 12}, 10, 0.5,
                                        false, 3);
    EXPECT_GT(inter_batch_diff(x), 0.0);
}

TEST(Unconditional, ZeroModelSingleStepRescalesNoise) {
    const Shape s{3, 1, 4, 5};
    const auto sched = make_linear_schedule();
    for (bool sync : {true, false}) {
        const auto x = unconditional_sample<double>(EpsModel::zero(), sched, s, 1, 0.0, sync, 9);
        std::mt19937_64 rng(9);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> z(sync ? s.frame_size() : s.size());
        for (double& v : z) v = normal(rng);
        const double scale = 1.0 / std::sqrt(sched.alpha_bar(1000));
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], z[i % z.size()] * scale, 1e-9 * scale);
    }
}

TEST(Unconditional, OracleSamplesHaveModelMoments) {
    const double mu = 0.3, s0 = 0.2;
    const auto x = unconditional_sample<double>(EpsModel::oracle_gaussian(mu, s0), make_linear_schedule(),
                                                Shape{1, 1, 64, 64}, 200, 1.0, false, 5);
    double m = 0, v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) m += x[i];
    m /= double(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) v += (x[i] - m) * (x[i] - m);
    v /= double(x.size() - 1);
    EXPECT_NEAR(m, mu, 0.02);
    EXPECT_NEAR(std::sqrt(v), s0, 0.03);
}

// ---------------------------------------------------------------------------

TEST(EstimatePsf, RecoversUniformWidth) {
    const Shape s{16, 1, 8, 8};
    const auto X = random_video(s, 1, 0.0, 1.0);
    for (std::size_t k : {3u, 9u, 13u}) {
        const auto Y = temporal_psf<float>(PsfSpec::uniform(k), s).apply(X);
        EXPECT_EQ(estimate_psf(X, Y, PsfFamily::Uniform, default_psf_grid()), PsfSpec::uniform(k));
    }
}

TEST(EstimatePsf, RecoversGaussianWidth) {
    const Shape s{16, 1, 6, 6};
    const auto X = random_video<double>(s, 2, 0.0, 1.0);
    const auto Y = temporal_psf<double>(PsfSpec::gaussian(1.5), s).apply(X);
    EXPECT_EQ(estimate_psf(X, Y, PsfFamily::Gaussian, {0.5, 1.0, 1.5, 2.0}), PsfSpec::gaussian(1.5));
}

TEST(EstimatePsf, IdentityMeasurementPicksWidthOne) {
    const auto X = random_video(Shape{8, 1, 4, 4}, 3);
    EXPECT_EQ(estimate_psf(X, X, PsfFamily::Uniform, default_psf_grid()), PsfSpec::uniform(1));
}

TEST(EstimatePsf, TiesGoToSmallerWidth) {
    const auto X = clip(Shape{1, 1, 4, 4});
    Video still(Shape{8, 1, 4, 4});
    for (std::size_t f = 0; f < 8; ++f) std::copy(X.data().begin(), X.data().end(), still.frame(f).begin());
    EXPECT_EQ(estimate_psf(still, still, PsfFamily::Uniform, {7, 3, 5}), PsfSpec::uniform(3));
}

TEST(EstimatePsf, Errors) {
    const Video X(Shape{4, 1, 2, 2});
    EXPECT_EQ(error_code_of([&] { estimate_psf(X, X, PsfFamily::Uniform, {}); }), ErrorCode::EmptyGrid);
    EXPECT_EQ(error_code_of([&] { estimate_psf(X, Video(Shape{5, 1, 2, 2}), PsfFamily::Uniform, {1}); }),
              ErrorCode::ShapeMismatch);
    EXPECT_EQ(error_code_of([&] { estimate_psf(X, X, PsfFamily::Uniform, {2.5}); }), ErrorCode::BadKernel);
}

// ---------------------------------------------------------------------------

TEST(Blind, OraclePreRestorationFindsTrueWidth) {
    const Shape s{16, 1, 16, 16};
    const auto X = clip(s, 1);
    const auto Y = degrade(X, temporal_psf<float>(PsfSpec::uniform(7), s), 0.0, 0);
    const auto r = blind_deblur(Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(5), std::optional<Video>(X));
    EXPECT_EQ(r.initial_psf, PsfSpec::uniform(7));
    EXPECT_EQ(r.video.shape(), s);
    EXPECT_GE(r.stage1_residual, 0.0);
    EXPECT_GE(r.stage2_residual, 0.0);
}

TEST(Blind, FallsBackToMeasurement) {
    const Shape s{8, 1, 8, 8};
    const auto Y = temporal_psf<float>(PsfSpec::uniform(3), s).apply(clip(s));
    const auto r = blind_deblur(Y, EpsModel::smoother(1.0), make_linear_schedule(), quick(3), std::optional<Video>{});
    // Y against itself is matched exactly by the width-1 filter.
    EXPECT_EQ(r.initial_psf, PsfSpec::uniform(1));
}

TEST(Blind, SingletonGridMatchesKnownPsfSolve) {
    const Shape s{8, 1, 8, 8};
    const auto A = temporal_psf<float>(PsfSpec::uniform(5), s);
    const auto Y = degrade(clip(s), A, 0.01, 5);
    const auto m = EpsModel::smoother(1.0);
    const auto cfg = quick(4);
    const auto r = blind_deblur(Y, m, make_linear_schedule(), cfg, std::optional<Video>{}, PsfFamily::Uniform, {5});
    const auto known = solve(A, Y, EpsModel::smoother(1.0), make_linear_schedule(), cfg).first;
    EXPECT_EQ(r.video, known);
    EXPECT_EQ(r.stage1, known);
    EXPECT_EQ(m.frame_evaluations(), 2u * 4u * 8u);
}
