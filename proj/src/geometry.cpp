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

#include "smile/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "smile/error.hpp"

namespace smile {
namespace {

double midline_x(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  double sum = 0.0;
  for (int i : idx.midline()) sum += pixel_point(lm, i).x;
  return sum / static_cast<double>(idx.midline().size());
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::size_t distinct_x_count(std::span<const Point2> samples) {
  std::vector<double> xs;
  xs.reserve(samples.size());
  for (const auto& p : samples) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  std::size_t count = xs.empty() ? 0 : 1;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] - xs[i - 1] > kDistinctXTolerance) ++count;
  }
  return count;
}

// Solves the 3x3 system in place by Gaussian elimination with partial pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 4>, 3> m) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < 1e-300) {
      throw Error(ErrorCode::kDegenerateGeometry, "singular quadratic fit");
    }
    std::swap(m[col], m[pivot]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = m[r][3];
    for (int c = r + 1; c < 3; ++c) s -= m[r][c] * x[c];
    x[r] = s / m[r][r];
  }
  return x;
}

}  // namespace

Point2 pixel_point(const LandmarkSet& lm, int index) {
  const auto& p = lm[static_cast<std::size_t>(index)];
  return {p.x * lm.image_width(), p.y * lm.image_height()};
}

Quadratic fit_quadratic(std::span<const Point2> samples) {
  if (distinct_x_count(samples) < 3) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "quadratic fit needs at least 3 samples distinct in x",
                {{"distinct", distinct_x_count(samples)}});
  }
  // Centre and scale x so the normal equations stay well conditioned.
  double mean = 0.0;
  for (const auto& p : samples) mean += p.x;
  mean /= static_cast<double>(samples.size());
  double scale = 0.0;
  for (const auto& p : samples) scale = std::max(scale, std::abs(p.x - mean));

  std::array<double, 5> sx{};  // sums of t^0..t^4
  std::array<double, 3> sy{};  // sums of y t^0..t^2
  for (const auto& p : samples) {
    const double t = (p.x - mean) / scale;
    double tk = 1.0;
    for (int k = 0; k < 5; ++k) {
      sx[k] += tk;
      if (k < 3) sy[k] += p.y * tk;
      tk *= t;
    }
  }
  // Unknowns ordered (c', b', a') for y = a' t^2 + b' t + c'.
  const auto sol = solve3({{{sx[0], sx[1], sx[2], sy[0]},
                            {sx[1], sx[2], sx[3], sy[1]},
                            {sx[2], sx[3], sx[4], sy[2]}}});
  const double c1 = sol[0], b1 = sol[1], a1 = sol[2];
  const double s2 = scale * scale;
  return {a1 / s2, b1 / scale - 2.0 * a1 * mean / s2, a1 * mean * mean / s2 - b1 * mean / scale + c1};
}

double smile_curvature(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  const auto& corners = idx.mouth_corners();
  const Point2 left = pixel_point(lm, corners[0]);
  const Point2 right = pixel_point(lm, corners[1]);
  const double mouth_width = distance(left, right);
  if (!(mouth_width > 1e-9)) {
    throw Error(ErrorCode::kDegenerateGeometry, "mouth corners coincide");
  }
  const double mid = midline_x(lm, idx);
  const double y_ref = 0.5 * (left.y + right.y);

  std::vector<Point2> lip;
  lip.reserve(idx.lower_lip_outer().size());
  for (int i : idx.lower_lip_outer()) {
    const Point2 p = pixel_point(lm, i);
    lip.push_back({(p.x - mid) / mouth_width, -(p.y - y_ref) / mouth_width});
  }
  return fit_quadratic(lip).a;
}

FaceExtent face_extent(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  double min_x = INFINITY, max_x = -INFINITY, min_y = INFINITY, max_y = -INFINITY;
  for (int i : idx.face_oval()) {
    const Point2 p = pixel_point(lm, i);
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  return {max_x - min_x, max_y - min_y};
}

double mirror_displacement(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  const auto& pairs = idx.mirror_pairs();
  if (pairs.empty()) return 0.0;
  double norm = face_extent(lm, idx).width;
  if (!(norm > 0.0)) norm = lm.image_width();
  const double mid = midline_x(lm, idx);
  double total = 0.0;
  for (const auto& [i, j] : pairs) {
    const Point2 a = pixel_point(lm, i);
    const Point2 b = pixel_point(lm, j);
    total += distance({2.0 * mid - a.x, a.y}, b);
  }
  return total / static_cast<double>(pairs.size()) / norm;
}

double symmetry_score(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  return 1.0 / (1.0 + kSymmetryGain * mirror_displacement(lm, idx));
}

GeometryFeatures derive_features(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  const FaceExtent extent = face_extent(lm, idx);
  if (!(extent.width > 0.0) || !(extent.height > 0.0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "face oval has zero extent");
  }

  const auto& jaw = idx.jawline();
  const Point2 jaw_left = pixel_point(lm, jaw.front());
  const Point2 jaw_right = pixel_point(lm, jaw.back());
  const Point2 chin = pixel_point(lm, jaw[jaw.size() / 2]);
  const double la = distance(jaw_left, chin);
  const double lb = distance(jaw_right, chin);
  if (!(la > 0.0) || !(lb > 0.0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "jawline ends coincide with the chin");
  }
  const double cosine = ((jaw_left.x - chin.x) * (jaw_right.x - chin.x) +
                         (jaw_left.y - chin.y) * (jaw_right.y - chin.y)) / (la * lb);

  const auto& corners = idx.mouth_corners();
  GeometryFeatures f;
  f.face_width_height_ratio = extent.width / extent.height;
  f.jaw_width_ratio = distance(jaw_left, jaw_right) / extent.width;
  f.chin_angle_deg = std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  f.smile_curvature = smile_curvature(lm, idx);
  f.mouth_width_ratio =
      distance(pixel_point(lm, corners[0]), pixel_point(lm, corners[1])) / extent.width;
  f.symmetry_score = symmetry_score(lm, idx);
  return f;
}

}  // namespace smile
