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
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smile {

inline constexpr int kMeshSize = 468;

/// Normalized image coordinates: x and y in [0, 1], z is unitless relative
/// depth (carried, not used by the geometry features).
struct Landmark {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// A full face mesh for one photo. Construction validates the invariants, so
/// every live LandmarkSet has exactly kMeshSize in-range points.
class LandmarkSet {
 public:
  /// Throws WrongPointCount, OutOfRangeCoordinate or InvalidArgument.
  LandmarkSet(std::vector<Landmark> points, int image_width, int image_height,
              std::string source_id = {});

  const std::vector<Landmark>& points() const noexcept { return points_; }
  const Landmark& operator[](std::size_t i) const { return points_[i]; }
  int image_width() const noexcept { return image_width_; }
  int image_height() const noexcept { return image_height_; }
  const std::string& source_id() const noexcept { return source_id_; }

  /// Same normalized points attached to different pixel dimensions.
  LandmarkSet with_image_size(int width, int height) const;

  friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

 private:
  std::vector<Landmark> points_;
  int image_width_;
  int image_height_;
  std::string source_id_;
};

inline constexpr int kLandmarkFormatVersion = 1;

/// Strict reader for the landmark interchange document:
///   {"version": 1, "source_id": "...", "image": {"width": W, "height": H},
///    "points": [[x, y, z], ... 468 entries]}
/// `source_id` is optional; any other key is rejected.
/// Throws MalformedDocument, WrongPointCount, OutOfRangeCoordinate.
LandmarkSet parse_landmarks(std::string_view document);

/// Canonical single-line form (fixed key order, no whitespace, shortest
/// round-trip reals, trailing newline). parse_landmarks(serialize_landmarks(s))
/// == s for every valid set.
std::string serialize_landmarks(const LandmarkSet& set);

/// How members of a group pair up under reflection across the face midline.
enum class MirrorMode { kNone, kReverse, kRing, kSelf };

struct LandmarkGroup {
  std::vector<int> indices;
  MirrorMode mirror = MirrorMode::kNone;
};

/// Named semantic groups of mesh indices, loaded from a versioned data file.
class LandmarkIndexMap {
 public:
  static constexpr std::array<std::string_view, 6> kRequiredGroups = {
      "jawline", "lower_lip_outer", "upper_lip_outer", "mouth_corners", "face_oval", "midline"};

  /// Throws InvalidIndexMap when a required group is missing or empty, an
  /// index is outside [0, 467], or mouth_corners does not hold exactly 2.
  explicit LandmarkIndexMap(std::map<std::string, LandmarkGroup> groups, int version = 1);

  const LandmarkGroup& group(std::string_view name) const;
  const std::vector<int>& jawline() const { return group("jawline").indices; }
  const std::vector<int>& lower_lip_outer() const { return group("lower_lip_outer").indices; }
  const std::vector<int>& upper_lip_outer() const { return group("upper_lip_outer").indices; }
  const std::vector<int>& mouth_corners() const { return group("mouth_corners").indices; }
  const std::vector<int>& face_oval() const { return group("face_oval").indices; }
  const std::vector<int>& midline() const { return group("midline").indices; }
  const std::map<std::string, LandmarkGroup>& groups() const noexcept { return groups_; }
  int version() const noexcept { return version_; }

  /// Mirror-symmetric (i, j) landmark pairs from every group with a mirror
  /// mode, i <= j within a group. Self pairs (i, i) are midline points.
  const std::vector<std::pair<int, int>>& mirror_pairs() const noexcept { return pairs_; }

 private:
  std::map<std::string, LandmarkGroup> groups_;
  int version_;
  std::vector<std::pair<int, int>> pairs_;
};

LandmarkIndexMap parse_index_map(std::string_view document);
LandmarkIndexMap load_index_map(const std::string& path);
/// The mapping shipped in data/landmark_index_map.v1.json.
const LandmarkIndexMap& default_index_map();

}  // namespace smile
