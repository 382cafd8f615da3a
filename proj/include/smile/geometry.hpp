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

#pragma once

#include <array>
#include <span>

#include "smile/landmarks.hpp"

namespace smile {

/// Ratio and angle features of a face mesh. Every field is invariant under
/// uniform scaling of the image.
struct GeometryFeatures {
  double face_width_height_ratio = 0.0;  // face_oval bounding box, > 0
  double jaw_width_ratio = 0.0;          // jawline end-to-end chord / face width
  double chin_angle_deg = 0.0;           // angle at the chin between the jawline ends
  double smile_curvature = 0.0;          // see smile_curvature()
  double mouth_width_ratio = 0.0;        // corner-to-corner / face width
  double symmetry_score = 0.0;           // [0, 1]

  std::array<double, 6> as_array() const {
    return {face_width_height_ratio, jaw_width_ratio, chin_angle_deg,
            smile_curvature,         mouth_width_ratio, symmetry_score};
  }

  friend bool operator==(const GeometryFeatures&, const GeometryFeatures&) = default;
};

/// Gain applied to the mean normalized mirror displacement; a displacement of
/// 0.02 face widths scores 0.5.
inline constexpr double kSymmetryGain = 50.0;

/// Minimum x separation for two lip samples to count as distinct.
inline constexpr double kDistinctXTolerance = 1e-6;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Landmark i in pixel units.
Point2 pixel_point(const LandmarkSet& lm, int index);

/// Coefficients of y = a x^2 + b x + c.
struct Quadratic {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double operator()(double x) const { return (a * x + b) * x + c; }
};

/// Least-squares quadratic through the samples. Throws DegenerateGeometry
/// when fewer than 3 samples are distinct in x.
Quadratic fit_quadratic(std::span<const Point2> samples);

/// Leading coefficient of a least-squares quadratic through the lower outer
/// lip. Coordinates are centred on the midline, divided by mouth width, with
/// y pointing up, so a smiling arc is positive.
double smile_curvature(const LandmarkSet& lm, const LandmarkIndexMap& idx);

/// 1 / (1 + k d) where d is the mean distance between each landmark reflected
/// across the midline and its mirror partner, in face widths.
double symmetry_score(const LandmarkSet& lm, const LandmarkIndexMap& idx);

/// Mean normalized mirror displacement d used by symmetry_score.
double mirror_displacement(const LandmarkSet& lm, const LandmarkIndexMap& idx);

GeometryFeatures derive_features(const LandmarkSet& lm, const LandmarkIndexMap& idx);

/// Face width and height of the face_oval bounding box, in pixels.
struct FaceExtent {
  double width = 0.0;
  double height = 0.0;
};
FaceExtent face_extent(const LandmarkSet& lm, const LandmarkIndexMap& idx);

}  // namespace smile
