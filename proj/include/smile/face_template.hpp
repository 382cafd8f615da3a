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

#include <string>
#include <vector>

#include "smile/face_shape.hpp"
#include "smile/geometry.hpp"
#include "smile/landmarks.hpp"
#include "smile/util.hpp"

namespace smile {

/// Measured or synthesized face structure in pixel units, ready to be laid
/// out onto the 468-point mesh by assemble_landmarks.
struct FaceStructure {
  int image_width = 0;
  int image_height = 0;
  double midline_x = 0.0;
  double top_y = 0.0;
  double chin_y = 0.0;
  double center_y = 0.0;
  std::vector<Point2> oval;       // one point per face_oval index, ring order
  std::vector<Point2> lower_lip;  // one per lower_lip_outer index, left to right
  std::vector<Point2> upper_lip;  // one per upper_lip_outer index, left to right
  Point2 corner_left;
  Point2 corner_right;
};

/// Lays a FaceStructure onto the mesh. Grouped indices take their measured
/// positions; unplaced midline indices are interpolated along the midline;
/// every other index is placed on a fixed spiral inside the face.
/// Throws InvalidIndexMap when the structure sizes disagree with the map or
/// a jawline index is not part of the face oval.
LandmarkSet assemble_landmarks(const FaceStructure& face, const LandmarkIndexMap& idx,
                               std::string source_id = {});

/// Parametric frontal face. The contour is a polar function of the angle
/// measured clockwise from straight up: an ellipse above the centre line and a
/// tapered superellipse below it.
struct FaceTemplate {
  int image_width = 512;
  int image_height = 512;
  double center_x = 256.0;
  double center_y = 256.0;
  double half_width = 150.0;
  double half_height = 200.0;
  double jaw_squareness = 2.0;  // superellipse exponent of the lower half
  double jaw_taper = 1.0;       // lower-half width factor reached at the chin
  double mouth_y = 340.0;       // corner line, pixels
  double mouth_width = 120.0;
  double lip_curvature = 0.0;   // leading coefficient in mouth-width units
  double upper_lip_height = 0.12;
  double lip_thickness = 0.07;  // rendered band, fraction of mouth width
  double right_corner_shift = 0.0;
  double right_corner_lift = 0.0;

  double contour_radius(double angle) const;
  Point2 contour_point(double angle) const;

  /// Mouth band parameterised by s in [0, 1] from the left to the right corner.
  Point2 lower_lip_point(double s) const;
  double left_corner_x() const { return center_x - 0.5 * mouth_width; }
  double right_corner_x() const { return center_x + 0.5 * mouth_width + right_corner_shift; }

  FaceStructure structure(const LandmarkIndexMap& idx) const;
  LandmarkSet landmarks(const LandmarkIndexMap& idx, std::string source_id = {}) const;
};

/// Template for a face-shape class with seeded within-class variation, used to
/// build synthetic training corpora and fixture photos.
FaceTemplate synthetic_face(FaceShapeLabel label, SplitMix64& rng, int image_width,
                            int image_height);

}  // namespace smile
