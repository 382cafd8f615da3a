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
#include <cstdint>
#include <string>

#include "smile/face_template.hpp"
#include "smile/image.hpp"

// Procedural "face cards": flat-shaded frontal faces drawn from a FaceTemplate
// with a fixed palette, and the matching measurement routine that recovers a
// landmark mesh from such a raster. Together they stand in for a generative
// model and an upstream landmark detector in offline runs.

namespace smile {

using Rgb = std::array<std::uint8_t, 3>;

struct FaceCardPalette {
  Rgb background{28, 36, 52};
  Rgb skin{226, 188, 160};
  Rgb mouth{176, 38, 56};
  Rgb eye{54, 40, 36};
};

/// Anti-aliased render (4x4 supersampling) of the template's contour, eyes
/// and lower-lip band.
Image render_face_card(const FaceTemplate& face, const FaceCardPalette& palette = {});

/// Measures a face card: contour by ray casting from the face centre, mouth
/// arc from per-column lip mass, and lays the result onto the mesh.
/// Throws LandmarkExtractionFailed when no face or mouth can be found.
LandmarkSet extract_face_card_landmarks(const Image& image, const LandmarkIndexMap& idx,
                                        const FaceCardPalette& palette = {},
                                        std::string source_id = {});

}  // namespace smile
