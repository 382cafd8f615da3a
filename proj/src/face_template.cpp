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

#include "smile/face_template.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "smile/error.hpp"

namespace smile {
namespace {

constexpr double kGoldenAngle = 2.399963229728653;

void check_size(const char* group, std::size_t expected, std::size_t actual) {
  if (expected != actual) {
    throw Error(ErrorCode::kInvalidIndexMap, "face structure does not match the index map",
                {{"group", group}, {"expected", expected}, {"actual", actual}});
  }
}

}  // namespace

LandmarkSet assemble_landmarks(const FaceStructure& face, const LandmarkIndexMap& idx,
                               std::string source_id) {
  check_size("face_oval", idx.face_oval().size(), face.oval.size());
  check_size("lower_lip_outer", idx.lower_lip_outer().size(), face.lower_lip.size());
  check_size("upper_lip_outer", idx.upper_lip_outer().size(), face.upper_lip.size());

  std::vector<std::optional<Point2>> placed(kMeshSize);
  auto place = [&](const std::vector<int>& ids, const std::vector<Point2>& pts) {
    for (std::size_t i = 0; i < ids.size(); ++i) placed[static_cast<std::size_t>(ids[i])] = pts[i];
  };
  place(idx.face_oval(), face.oval);
  place(idx.lower_lip_outer(), face.lower_lip);
  place(idx.upper_lip_outer(), face.upper_lip);
  place(idx.mouth_corners(), {face.corner_left, face.corner_right});

  for (int j : idx.jawline()) {
    if (std::find(idx.face_oval().begin(), idx.face_oval().end(), j) == idx.face_oval().end()) {
      throw Error(ErrorCode::kInvalidIndexMap, "jawline index is not on the face oval", {{"index", j}});
    }
  }

  // Midline: keep anchors placed by other groups, interpolate the rest by
  // list position between neighbouring anchors (top and chin as sentinels).
  const auto& mid = idx.midline();
  const int n_mid = static_cast<int>(mid.size());
  auto anchor_y = [&](int pos) -> std::optional<double> {
    if (pos < 0) return face.top_y;
    if (pos >= n_mid) return face.chin_y;
    const auto& p = placed[static_cast<std::size_t>(mid[pos])];
    return p ? std::optional<double>(p->y) : std::nullopt;
  };
  std::vector<Point2> midline_pts(mid.size());
  for (int pos = 0; pos < n_mid; ++pos) {
    if (placed[static_cast<std::size_t>(mid[pos])]) continue;
    int lo = pos - 1;
    while (!anchor_y(lo)) --lo;
    int hi = pos + 1;
    while (!anchor_y(hi)) ++hi;
    const double t = static_cast<double>(pos - lo) / static_cast<double>(hi - lo);
    const double y = *anchor_y(lo) + t * (*anchor_y(hi) - *anchor_y(lo));
    midline_pts[static_cast<std::size_t>(pos)] = {face.midline_x, y};
  }
  for (int pos = 0; pos < n_mid; ++pos) {
    auto& slot = placed[static_cast<std::size_t>(mid[pos])];
    if (!slot) slot = midline_pts[static_cast<std::size_t>(pos)];
  }

  // Everything else: a deterministic spiral filling the inner face.
  double min_x = INFINITY, max_x = -INFINITY;
  for (const auto& p : face.oval) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
  }
  const double half_w = 0.5 * (max_x - min_x);
  const double half_h = 0.5 * (face.chin_y - face.top_y);
  int remaining = 0;
  for (const auto& p : placed) remaining += p ? 0 : 1;
  int rank = 0;
  for (auto& slot : placed) {
    if (slot) continue;
    const double rho = 0.55 * std::sqrt((rank + 0.5) / std::max(remaining, 1));
    const double theta = rank * kGoldenAngle;
    slot = Point2{face.midline_x + rho * half_w * std::cos(theta),
                  face.center_y + 0.9 * rho * half_h * std::sin(theta)};
    ++rank;
  }

  std::vector<Landmark> points;
  points.reserve(kMeshSize);
  const double w = face.image_width;
  const double h = face.image_height;
  for (const auto& slot : placed) {
    points.push_back({std::clamp(slot->x / w, 0.0, 1.0), std::clamp(slot->y / h, 0.0, 1.0), 0.0});
  }
  return LandmarkSet(std::move(points), face.image_width, face.image_height, std::move(source_id));
}

double FaceTemplate::contour_radius(double angle) const {
  const double s = std::sin(angle);
  const double c = std::cos(angle);
  if (c >= 0.0) {
    return 1.0 / std::sqrt((s / half_width) * (s / half_width) + (c / half_height) * (c / half_height));
  }
  const double width = half_width * (jaw_taper + (1.0 - jaw_taper) * std::abs(s));
  const double n = jaw_squareness;
  return std::pow(std::pow(std::abs(s) / width, n) + std::pow(std::abs(c) / half_height, n), -1.0 / n);
}

Point2 FaceTemplate::contour_point(double angle) const {
  const double r = contour_radius(angle);
  return {center_x + r * std::sin(angle), center_y - r * std::cos(angle)};
}

Point2 FaceTemplate::lower_lip_point(double s) const {
  const double u = s - 0.5;
  const double x = left_corner_x() + s * (right_corner_x() - left_corner_x());
  const double y = mouth_y + lip_curvature * (0.25 - u * u) * mouth_width - right_corner_lift * s;
  return {x, y};
}

FaceStructure FaceTemplate::structure(const LandmarkIndexMap& idx) const {
  FaceStructure f;
  f.image_width = image_width;
  f.image_height = image_height;
  f.midline_x = center_x;
  f.top_y = center_y - half_height;
  f.chin_y = center_y + half_height;
  f.center_y = center_y;

  // Right half computed directly, left half mirrored so symmetric templates
  // produce exactly symmetric meshes.
  const std::size_t n = idx.face_oval().size();
  f.oval.resize(n);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    f.oval[k] = contour_point(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t k = n / 2 + 1; k < n; ++k) {
    const Point2 m = f.oval[n - k];
    f.oval[k] = {2.0 * center_x - m.x, m.y};
  }

  const bool symmetric = right_corner_shift == 0.0 && right_corner_lift == 0.0;
  auto lip = [&](std::size_t count, auto&& at) {
    std::vector<Point2> pts(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t mirror = count - 1 - i;
      if (symmetric && i > mirror) {
        pts[i] = {2.0 * center_x - pts[mirror].x, pts[mirror].y};
      } else {
        pts[i] = at(static_cast<double>(i) / static_cast<double>(count - 1));
      }
    }
    return pts;
  };
  f.lower_lip = lip(idx.lower_lip_outer().size(), [&](double s) { return lower_lip_point(s); });
  f.upper_lip = lip(idx.upper_lip_outer().size(), [&](double s) {
    const double u = s - 0.5;
    const Point2 base{left_corner_x() + s * (right_corner_x() - left_corner_x()),
                      mouth_y - right_corner_lift * s};
    return Point2{base.x, base.y - upper_lip_height * mouth_width * (1.0 - 4.0 * u * u)};
  });
  f.corner_left = f.lower_lip.front();
  f.corner_right = f.lower_lip.back();
  return f;
}

LandmarkSet FaceTemplate::landmarks(const LandmarkIndexMap& idx, std::string source_id) const {
  return assemble_landmarks(structure(idx), idx, std::move(source_id));
}

namespace {

struct ShapePreset {
  double aspect;      // half_width / half_height
  double squareness;  // lower-half exponent
  double taper;
};

ShapePreset preset(FaceShapeLabel label) {
  switch (label) {
    case FaceShapeLabel::kOval: return {0.74, 2.0, 0.80};
    case FaceShapeLabel::kRound: return {0.93, 2.0, 1.00};
    case FaceShapeLabel::kSquare: return {0.90, 4.0, 1.00};
    case FaceShapeLabel::kHeart: return {0.82, 2.0, 0.55};
    case FaceShapeLabel::kOblong: return {0.62, 3.0, 0.95};
  }
  return {0.74, 2.0, 0.80};
}

double jitter(SplitMix64& rng, double spread) { return (2.0 * rng.uniform() - 1.0) * spread; }

}  // namespace

FaceTemplate synthetic_face(FaceShapeLabel label, SplitMix64& rng, int image_width,
                            int image_height) {
  const ShapePreset p = preset(label);
  FaceTemplate t;
  t.image_width = image_width;
  t.image_height = image_height;
  const double aspect = p.aspect + jitter(rng, 0.025);
  // Fit the face inside 80% of the frame in both directions.
  const double max_half_h = 0.40 * image_height;
  const double max_half_w = 0.40 * image_width;
  t.half_height = std::min(max_half_h, max_half_w / aspect) * (0.85 + 0.15 * rng.uniform());
  t.half_width = aspect * t.half_height;
  t.center_x = 0.5 * image_width;
  t.center_y = 0.5 * image_height;
  t.jaw_squareness = std::max(1.6, p.squareness + jitter(rng, 0.3));
  t.jaw_taper = std::clamp(p.taper + jitter(rng, 0.05), 0.3, 1.0);
  t.mouth_width = t.half_width * (0.80 + jitter(rng, 0.08));
  t.mouth_y = t.center_y + t.half_height * (0.48 + jitter(rng, 0.03));
  t.lip_curvature = 0.15 + jitter(rng, 0.1);
  return t;
}

}  // namespace smile
