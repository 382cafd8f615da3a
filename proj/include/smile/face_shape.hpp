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
#include <optional>
#include <string_view>

namespace smile {

/// Face-shape taxonomy, version 1. Enumerator order is the tie-break order
/// used by the classifier; extending the taxonomy bumps kFaceShapeTaxonomyVersion.
enum class FaceShapeLabel { kOval = 0, kRound, kSquare, kHeart, kOblong };

inline constexpr int kFaceShapeTaxonomyVersion = 1;
inline constexpr int kFaceShapeCount = 5;
inline constexpr std::array<FaceShapeLabel, kFaceShapeCount> kAllFaceShapes = {
    FaceShapeLabel::kOval, FaceShapeLabel::kRound, FaceShapeLabel::kSquare,
    FaceShapeLabel::kHeart, FaceShapeLabel::kOblong};

constexpr std::string_view to_string(FaceShapeLabel label) {
  switch (label) {
    case FaceShapeLabel::kOval: return "OVAL";
    case FaceShapeLabel::kRound: return "ROUND";
    case FaceShapeLabel::kSquare: return "SQUARE";
    case FaceShapeLabel::kHeart: return "HEART";
    case FaceShapeLabel::kOblong: return "OBLONG";
  }
  return "OVAL";
}

constexpr std::optional<FaceShapeLabel> face_shape_from_string(std::string_view text) {
  for (auto label : kAllFaceShapes) {
    if (to_string(label) == text) return label;
  }
  return std::nullopt;
}

/// Throws InvalidArgument for unknown names.
FaceShapeLabel parse_face_shape(std::string_view text);

constexpr int index_of(FaceShapeLabel label) { return static_cast<int>(label); }

}  // namespace smile
