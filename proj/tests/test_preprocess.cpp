// Copyright (C) 2026 The vidsolve authors
// SPDX-License-Identifier: Apache-2.0
//

#include <gtest/gtest.h>

#include <vidsolve/preprocess.hpp>

#include "test_util.hpp"

using namespace vidsolve;
using vidsolve::testing::error_code_of;
using vidsolve::testing::random_video;

TEST(Preprocess, ChunksAndDropsRemainder) {
    Video v(Shape{35, 3, 8, 8}, 100.0f);
    const auto chunks = preprocess(v, VideoMeta{}, 8, 8, 16);
    ASSERT_EQ(chunks.size(), 2u);
    for (const auto& c : chunks) EXPECT_EQ(c.shape(), (Shape{16, 3, 8, 8}));
}

TEST(Preprocess, ChunkCountIsFloorAndValuesInUnitRange) {
    for (std::size_t n : {16u, 17u, 31u, 32u, 48u, 50u}) {
        auto v = random_video(Shape{n, 1, 6, 6}, n, -50.0, 300.0);
        const auto chunks = preprocess(v, VideoMeta{}, 6, 4, 16);
        EXPECT_EQ(chunks.size(), n / 16);
        for (const auto& c : chunks)
            for (float x : c.data()) {
                EXPECT_GE(x, 0.0f);
                EXPECT_LE(x, 1.0f);
            }
    }
}

TEST(Preprocess, IdentityGeometry) {
    auto v = random_video(Shape{4, 2, 7, 7}, 3, 0.0, 255.0);
    VideoMeta meta;
    const auto chunks = preprocess(v, meta, 7, 7, 4);
    ASSERT_EQ(chunks.size(), 1u);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_FLOAT_EQ(chunks[0][i], static_cast<float>(v[i] / 255.0));
}

TEST(Preprocess, NormalizesByDeclaredRange) {
    Video v(Shape{1, 1, 2, 2}, 600.0f);
    VideoMeta meta{"clip", 30.0, 200.0, 1000.0};
    const auto out = preprocess(v, meta, 2, 2, 1);
    for (float x : out[0].data()) EXPECT_FLOAT_EQ(x, 0.5f);
}

TEST(Preprocess, ConstantSurvivesResize) {
    Video v(Shape{2, 3, 12, 10}, 51.0f);
    const auto out = preprocess(v, VideoMeta{}, 10, 23, 2);
    for (float x : out[0].data()) EXPECT_NEAR(x, 0.2f, 1e-7);
}

TEST(Preprocess, Errors) {
    Video v(Shape{4, 1, 8, 6});
    EXPECT_EQ(error_code_of([&] { preprocess(v, VideoMeta{}, 7, 4, 2); }), ErrorCode::CropTooLarge);
    EXPECT_EQ(error_code_of([&] { preprocess(v, VideoMeta{}, 6, 4, 5); }), ErrorCode::EmptyResult);
    VideoMeta bad{"x", std::nullopt, 1.0, 1.0};
    EXPECT_EQ(error_code_of([&] { preprocess(v, bad, 6, 4, 2); }), ErrorCode::BadRange);
}

TEST(CenterCrop, TakesMiddleWindow) {
    Video v(Shape{1, 1, 4, 5});
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const auto c = center_crop(v, 2);
    // Offsets (1, 1): rows 1-2, cols 1-2.
    EXPECT_EQ(c[0], 6.0f);
    EXPECT_EQ(c[1], 7.0f);
    EXPECT_EQ(c[2], 11.0f);
    EXPECT_EQ(c[3], 12.0f);
}

TEST(Resize, HalfPixelUpsamplingOracle) {
    // Source columns [0, 1]; half-pixel centres map output column i of 4 to
    // source coordinate (i + 0.5) / 2 - 0.5, clamped to [0, 1].
    Video v(Shape{1, 1, 1, 2});
    v[1] = 1.0f;
    const auto r = resize_bilinear(v, 1, 4);
    const float expect[4] = {0.0f, 0.25f, 0.75f, 1.0f};
    for (int i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(r[i], expect[i]);
}

TEST(Resize, DownsampleByTwoAveragesPairs) {
    Video v(Shape{1, 1, 2, 4});
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const auto r = resize_bilinear(v, 1, 2);
    // Output centres land between source pixels: average of each 2x2 block.
    EXPECT_FLOAT_EQ(r[0], (0 + 1 + 4 + 5) / 4.0f);
    EXPECT_FLOAT_EQ(r[1], (2 + 3 + 6 + 7) / 4.0f);
}
