// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include <vidsolve/op_grammar.hpp>

#include "test_util.hpp"

using namespace vidsolve;
using vidsolve::testing::adjoint_mismatch;
using vidsolve::testing::error_code_of;
using vidsolve::testing::linearity_mismatch;
using vidsolve::testing::random_video;

namespace {

/// Direct replicate-padded temporal filter, written out independently.
Video temporal_reference(const Video& x, const std::vector<double>& h) {
    const auto N = static_cast<long>(x.frames());
    const long half = static_cast<long>(h.size() / 2);
    Video out(x.shape());
    for (long n = 0; n < N; ++n)
        for (std::size_t i = 0; i < x.shape().frame_size(); ++i) {
            double s = 0.0;
            for (long j = 0; j < static_cast<long>(h.size()); ++j) {
                const long src = std::clamp(n + j - half, 0L, N - 1);
                s += h[static_cast<std::size_t>(j)] * double(x.frame(static_cast<std::size_t>(src))[i]);
            }
            out.frame(static_cast<std::size_t>(n))[i] = static_cast<float>(s);
        }
    return out;
}

}  // namespace

TEST(TemporalPsf, ConstantIsPreserved) {
    Video v(Shape{16, 2, 4, 4}, 0.37f);
    const auto A = temporal_psf<float>(PsfSpec::uniform(7), v.shape());
    for (float x : A.apply(v).to_vector()) EXPECT_FLOAT_EQ(x, 0.37f);
    const auto G = temporal_psf<float>(PsfSpec::gaussian(1.3), v.shape());
    for (float x : G.apply(v).to_vector()) EXPECT_NEAR(x, 0.37f, 1e-6);
}

TEST(TemporalPsf, ImpulseAtFrameEight) {
    // Frames numbered 1..16; the impulse sits at frame 8 (index 7).
    Video v(Shape{16, 1, 1, 1});
    v[7] = 1.0f;
    const auto y = temporal_psf<float>(PsfSpec::uniform(7), v.shape()).apply(v);
    for (std::size_t n = 0; n < 16; ++n) {
        const bool inside = n + 1 >= 5 && n + 1 <= 11;
        EXPECT_NEAR(y[n], inside ? 1.0 / 7.0 : 0.0, 1e-7) << "frame " << n + 1;
    }
}

TEST(TemporalPsf, MatchesDirectSummationWithReplicatePadding) {
    auto x = random_video(Shape{10, 2, 3, 3}, 1);
    for (auto spec : {PsfSpec::uniform(1), PsfSpec::uniform(5), PsfSpec::uniform(19), PsfSpec::gaussian(0.7),
                      PsfSpec::gaussian(2.0)}) {
        const auto y = temporal_psf<float>(spec, x.shape()).apply(x);
        const auto ref = temporal_reference(x, spec.taps());
        for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-6) << spec.descriptor();
    }
}

TEST(TemporalPsf, GaussianTapsSymmetricPeakedNormalized) {
    const auto spec = PsfSpec::gaussian(1.0);
    const auto h = spec.taps();
    ASSERT_EQ(h.size(), 7u);
    EXPECT_EQ(spec.support(), 7u);
    const std::size_t c = h.size() / 2;
    for (std::size_t i = 0; i < h.size(); ++i) {
        EXPECT_LE(h[i], h[c]);
        EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
    }
    EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-15);
    const auto u = PsfSpec::uniform(9).taps();
    EXPECT_NEAR(std::accumulate(u.begin(), u.end(), 0.0), 1.0, 1e-15);
}

TEST(TemporalPsf, BadKernel) {
    EXPECT_EQ(error_code_of([] { temporal_psf<float>(PsfSpec::uniform(17), Shape{8, 1, 2, 2}); }), ErrorCode::BadKernel);
    EXPECT_EQ(error_code_of([] { temporal_psf<float>(PsfSpec::uniform(4), Shape{8, 1, 2, 2}); }), ErrorCode::BadKernel);
    EXPECT_EQ(error_code_of([] { temporal_psf<float>(PsfSpec::gaussian(0.0), Shape{8, 1, 2, 2}); }), ErrorCode::BadKernel);
    // 2N-1 is the largest allowed support.
    EXPECT_NO_THROW(temporal_psf<float>(PsfSpec::uniform(15), Shape{8, 1, 2, 2}));
}

TEST(TemporalPsf, Descriptor) {
    EXPECT_EQ(PsfSpec::uniform(7).descriptor(), "temporal:uniform:7");
    EXPECT_EQ(PsfSpec::gaussian(1.5).descriptor(), "temporal:gauss:1.5");
    EXPECT_EQ(PsfSpec::gaussian(2.0).descriptor(), "temporal:gauss:2.0");
}

// ---------------------------------------------------------------------------

TEST(SpatialBlur, CentralTapOfSigmaTwoWidthThirteen) {
    // Independent evaluation of the normalized 1-D taps.
    double sum = 0.0;
    for (int d = -6; d <= 6; ++d) sum += std::exp(-d * d / 8.0);
    const double centre_1d = 1.0 / sum;
    const auto taps = gaussian_taps(2.0, 13);
    EXPECT_NEAR(taps[6], centre_1d, 1e-15);
    EXPECT_NEAR(taps[6], 0.199676, 1e-6);

    // Impulse response of the separable 2-D blur: centre = centre_1d^2.
    Video v(Shape{1, 1, 31, 31});
    v(0, 0, 15, 15) = 1.0f;
    const auto y = spatial_gaussian_blur<float>(2.0, 13, v.shape()).apply(v);
    EXPECT_NEAR(y(0, 0, 15, 15), centre_1d * centre_1d, 1e-7);
    EXPECT_NEAR(y(0, 0, 15, 15), 0.039870, 1e-6);
}

TEST(SpatialBlur, ConstantUnchanged) {
    Video v(Shape{2, 3, 9, 12}, 0.8f);
    for (float x : spatial_gaussian_blur<float>(2.0, 13, v.shape()).apply(v).to_vector()) EXPECT_NEAR(x, 0.8f, 1e-6);
}

TEST(SpatialBlur, SelfAdjoint) {
    const Shape s{3, 2, 11, 14};
    const auto A = spatial_gaussian_blur<float>(2.0, 13, s);
    for (int k = 0; k < 5; ++k) {
        const auto y = random_video(s, 40 + k);
        const auto a = A.apply(y), b = A.adjoint(y);
        for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-5);
    }
}

TEST(SpatialBlur, KernelWiderThanFrame) {
    const Shape s{1, 1, 4, 5};
    const auto A = spatial_gaussian_blur<double>(3.0, 21, s);
    EXPECT_LT(adjoint_mismatch(A, 20, 7), 1e-12);
    BasicVideo<double> c(s, 2.0);
    for (double x : A.apply(c).to_vector()) EXPECT_NEAR(x, 2.0, 1e-12);
}

TEST(SpatialBlur, BadKernel) {
    EXPECT_EQ(error_code_of([] { spatial_gaussian_blur<float>(2.0, 12, Shape{1, 1, 4, 4}); }), ErrorCode::BadKernel);
    EXPECT_EQ(error_code_of([] { spatial_gaussian_blur<float>(-1.0, 5, Shape{1, 1, 4, 4}); }), ErrorCode::BadKernel);
}

// ---------------------------------------------------------------------------

TEST(AvgPool, BlockMean) {
    Video v(Shape{1, 1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<float>(i);
    const auto y = avgpool_sr<float>(4, v.shape()).apply(v);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_FLOAT_EQ(y[0], 7.5f);
}

TEST(AvgPool, ConstantAndAdjointScaling) {
    Video v(Shape{2, 3, 8, 8}, 0.25f);
    const auto A = avgpool_sr<float>(2, v.shape());
    for (float x : A.apply(v).to_vector()) EXPECT_FLOAT_EQ(x, 0.25f);
    Video y(A.out_shape(), 1.0f);
    for (float x : A.adjoint(y).to_vector()) EXPECT_FLOAT_EQ(x, 0.25f);
}

TEST(AvgPool, NonDivisible) {
    EXPECT_EQ(error_code_of([] { avgpool_sr<float>(3, Shape{1, 1, 8, 9}); }), ErrorCode::NonDivisible);
    EXPECT_EQ(error_code_of([] { avgpool_sr<float>(0, Shape{1, 1, 8, 8}); }), ErrorCode::NonDivisible);
}

// ---------------------------------------------------------------------------

TEST(Mask, ExactCountPerFrame) {
    const Shape s{4, 3, 16, 16};
    const auto A = random_mask<float>(0.5, 7, s);
    const auto y = A.apply(Video(s, 1.0f));
    for (std::size_t f = 0; f < 4; ++f) {
        std::size_t zeros = 0;
        for (std::size_t p = 0; p < 256; ++p) {
            const bool dropped = y(f, 0, p / 16, p % 16) == 0.0f;
            zeros += dropped;
            for (std::size_t c = 1; c < 3; ++c) EXPECT_EQ(y(f, c, p / 16, p % 16) == 0.0f, dropped);
        }
        EXPECT_EQ(zeros, 128u) << "frame " << f;
    }
}

TEST(Mask, PerFrameIndependentSharedIdentical) {
    const Shape s{3, 1, 8, 8};
    const auto per = make_mask(0.5, 1, s, MaskMode::PerFrame);
    const auto shared = make_mask(0.5, 1, s, MaskMode::Shared);
    EXPECT_FALSE(std::equal(per.begin(), per.begin() + 64, per.begin() + 64));
    EXPECT_TRUE(std::equal(shared.begin(), shared.begin() + 64, shared.begin() + 64));
    EXPECT_TRUE(std::equal(shared.begin(), shared.begin() + 64, shared.begin() + 128));
    EXPECT_EQ(make_mask(0.5, 1, s, MaskMode::PerFrame), per);
}

TEST(Mask, IdempotentAndSelfAdjoint) {
    const Shape s{2, 2, 6, 6};
    const auto A = random_mask<float>(0.4, 3, s);
    const auto x = random_video(s, 5);
    EXPECT_EQ(A.apply(A.apply(x)), A.apply(x));
    EXPECT_EQ(A.adjoint(x), A.apply(x));
}

TEST(Mask, BadRatio) {
    for (double r : {0.0, 1.0, -0.1, 1.5})
        EXPECT_EQ(error_code_of([&] { random_mask<float>(r, 0, Shape{1, 1, 4, 4}); }), ErrorCode::BadRatio);
}

// ---------------------------------------------------------------------------

TEST(Compose, IdentityLaw) {
    const Shape s{8, 1, 6, 6};
    const auto A = temporal_psf<float>(PsfSpec::uniform(3), s);
    const auto C = compose(identity_op<float>(s), A);
    const auto x = random_video(s, 2);
    EXPECT_EQ(C.apply(x), A.apply(x));
    EXPECT_EQ(C.adjoint(x), A.adjoint(x));
    EXPECT_EQ(C.descriptor(), A.descriptor());
}

TEST(Compose, OrderAndShapes) {
    const Shape s{8, 1, 8, 8};
    const auto T = temporal_psf<float>(PsfSpec::uniform(3), s);
    const auto P = avgpool_sr<float>(2, s);
    const auto C = compose(P, T);
    EXPECT_EQ(C.in_shape(), s);
    EXPECT_EQ(C.out_shape(), (Shape{8, 1, 4, 4}));
    EXPECT_EQ(C.descriptor(), "temporal:uniform:3 | sr:2");
    const auto x = random_video(s, 3);
    EXPECT_EQ(C.apply(x), P.apply(T.apply(x)));
    EXPECT_LT(adjoint_mismatch(C, 20, 9), 1e-6);
}

TEST(Compose, SpatialAfterTemporalAdjoint) {
    const Shape s{16, 1, 16, 16};
    const auto C = compose(spatial_gaussian_blur<float>(2.0, 13, s), temporal_psf<float>(PsfSpec::uniform(7), s));
    EXPECT_LT(adjoint_mismatch(C, 100, 11), 1e-5);
}

TEST(Compose, ShapeMismatch) {
    const auto P = avgpool_sr<float>(2, Shape{1, 1, 8, 8});
    const auto M = random_mask<float>(0.5, 0, Shape{1, 1, 8, 8});
    EXPECT_EQ(error_code_of([&] { compose(M, P); }), ErrorCode::ShapeMismatch);
}

TEST(DenseOp, MatchesExplicitMatrix) {
    const auto A = dense_op<double>(Shape{1, 1, 1, 2}, Shape{1, 1, 1, 3}, {1, 2, 3, 4, 5, 6});
    BasicVideo<double> x(Shape{1, 1, 1, 2}, std::vector<double>{1, -1});
    const auto y = A.apply(x);
    EXPECT_DOUBLE_EQ(y[0], -1);
    EXPECT_DOUBLE_EQ(y[1], -1);
    EXPECT_DOUBLE_EQ(y[2], -1);
    EXPECT_LT(adjoint_mismatch(A, 20, 1), 1e-14);
    EXPECT_EQ(error_code_of([] { dense_op<double>(Shape{1, 1, 1, 2}, Shape{1, 1, 1, 2}, {1, 2, 3}); }),
              ErrorCode::ShapeMismatch);
}

// ---------------------------------------------------------------------------

TEST(Grammar, EveryDescriptorIsLinearWithExactAdjoint) {
    for (std::size_t c : {1u, 3u}) {
        const Shape s{16, c, 16, 16};
        for (const auto& d : vidsolve::testing::grammar_descriptors()) {
            const auto A = parse_operator<float>(d, s);
            EXPECT_LT(adjoint_mismatch(A, 100, 1000 + c), 1e-5) << d;
            EXPECT_LT(linearity_mismatch(A, 10, 77), 1e-5) << d;
        }
    }
}

TEST(Grammar, ParsesStagesAndInfersShape) {
    const Shape s{16, 1, 16, 16};
    const auto A = parse_operator<float>(" temporal:uniform:7 | spatial:gauss:2.0:13 | sr:4 ", s);
    EXPECT_EQ(A.out_shape(), (Shape{16, 1, 4, 4}));
    EXPECT_EQ(A.descriptor(), "temporal:uniform:7 | spatial:gauss:2.0:13 | sr:4");
    EXPECT_EQ(infer_input_shape("temporal:uniform:7 | sr:4", Shape{16, 1, 4, 4}), s);
    EXPECT_EQ(infer_input_shape("sr:2 | sr:2", Shape{1, 1, 3, 3}), (Shape{1, 1, 12, 12}));
    EXPECT_EQ(parse_operator<float>("mask:0.5:3:shared", s).descriptor(), "mask:0.5:3:shared");
}

TEST(Grammar, Errors) {
    const Shape s{16, 1, 16, 16};
    for (const char* bad : {"", "blur:3", "temporal:box:7", "temporal:uniform", "spatial:gauss:2.0", "sr:x",
                            "mask:0.5", "mask:0.5:1:sometimes", "temporal:uniform:7 || sr:2", "spatial:box:1:3"}) {
        EXPECT_EQ(error_code_of([&] { parse_operator<float>(bad, s); }), ErrorCode::ConfigError) << bad;
    }
    EXPECT_EQ(error_code_of([&] { parse_operator<float>("sr:3", s); }), ErrorCode::NonDivisible);
}

// ---------------------------------------------------------------------------

TEST(Degrade, NoiselessAndIdentity) {
    const Shape s{4, 1, 5, 5};
    const auto x = random_video(s, 1);
    const auto A = temporal_psf<float>(PsfSpec::uniform(3), s);
    EXPECT_EQ(degrade(x, A, 0.0, 9), A.apply(x));
    EXPECT_EQ(degrade(x, identity_op<float>(s), 0.0, 9), x);
}

TEST(Degrade, SeededNoise) {
    const Shape s{4, 1, 32, 32};
    const auto x = random_video(s, 1);
    const auto I = identity_op<float>(s);
    const auto a = degrade(x, I, 0.1, 5);
    EXPECT_EQ(a, degrade(x, I, 0.1, 5));
    EXPECT_FALSE(a == degrade(x, I, 0.1, 6));
    const auto w = a - x;
    double mean = 0.0;
    for (float v : w.data()) mean += v;
    mean /= double(w.size());
    const double sd = std::sqrt(squared_norm(w) / double(w.size()));
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(sd, 0.1, 0.005);
    EXPECT_EQ(error_code_of([&] { degrade(x, I, -1.0, 0); }), ErrorCode::BadArgument);
}
