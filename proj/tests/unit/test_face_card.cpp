// Copyright 2026 The Smiledesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "smile/face_card.hpp"
#include "smile/face_template.hpp"
#include "smile/geometry.hpp"
#include "test_support.hpp"

namespace smile {
namespace {

using ::smile::testing::error_code_of;
using ::smile::testing::fixture_path;

FaceTemplate face_with(double curvature, int w = 512, int h = 512) {
  FaceTemplate f;
  f.image_width = w;
  f.image_height = h;
  f.center_x = w / 2.0;
  f.center_y = h / 2.0;
  f.half_width = 0.3 * h;
  f.half_height = 0.38 * h;
  f.mouth_y = f.center_y + 0.5 * f.half_height;
  f.mouth_width = 0.8 * f.half_width;
  f.lip_curvature = curvature;
  return f;
}

TEST(FaceCard, PngRoundTripRecoversCurvatureAndSymmetry) {
  const auto& idx = default_index_map();
  for (double c : {-0.3, 0.0, 0.15, 0.4, 0.7}) {
    const auto img = decode_image(encode_png(render_face_card(face_with(c))));
    const auto lm = extract_face_card_landmarks(img, idx);
    EXPECT_NEAR(smile_curvature(lm, idx), c, 0.02) << c;
    EXPECT_GT(symmetry_score(lm, idx), 0.99) << c;
  }
}

TEST(FaceCard, JpegFixtureMeasuresCloseToGroundTruth) {
  const auto& idx = default_index_map();
  const auto img = read_image_file(fixture_path("fixture.jpg"));
  ASSERT_EQ(img.width(), 1024);
  ASSERT_EQ(img.height(), 768);
  const auto truth = parse_landmarks(read_file_text(fixture_path("fixture.landmarks.json")));
  const auto measured = extract_face_card_landmarks(img, idx);
  const auto a = derive_features(truth, idx);
  const auto b = derive_features(measured, idx);
  EXPECT_NEAR(a.smile_curvature, b.smile_curvature, 0.02);
  EXPECT_NEAR(a.face_width_height_ratio, b.face_width_height_ratio, 0.02);
  EXPECT_NEAR(a.mouth_width_ratio, b.mouth_width_ratio, 0.02);
  EXPECT_GT(b.symmetry_score, 0.95);
}

TEST(FaceCard, DisplacedCornerLowersMeasuredSymmetry) {
  const auto& idx = default_index_map();
  auto f = face_with(0.2);
  const double sym = symmetry_score(extract_face_card_landmarks(render_face_card(f), idx), idx);
  f.right_corner_shift = 12.0;
  f.right_corner_lift = 8.0;
  const auto lm = extract_face_card_landmarks(render_face_card(f), idx);
  const double truth = symmetry_score(f.landmarks(idx), idx);
  EXPECT_LT(symmetry_score(lm, idx), sym);
  EXPECT_NEAR(symmetry_score(lm, idx), truth, 0.03);
}

TEST(FaceCard, BlankImageFailsExtraction) {
  Image blank(256, 256);
  EXPECT_EQ(error_code_of([&] { extract_face_card_landmarks(blank, default_index_map()); }),
            ErrorCode::kLandmarkExtractionFailed);
}

TEST(FaceCard, RenderingIsDeterministic) {
  EXPECT_EQ(render_face_card(face_with(0.3)), render_face_card(face_with(0.3)));
}

}  // namespace
}  // namespace smile
