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

#include "smile/face_shape.hpp"

#include <string>

#include "smile/error.hpp"

namespace smile {

FaceShapeLabel parse_face_shape(std::string_view text) {
  if (auto label = face_shape_from_string(text)) return *label;
  throw Error(ErrorCode::kInvalidArgument, "unknown face shape label: " + std::string(text));
}

}  // namespace smile
