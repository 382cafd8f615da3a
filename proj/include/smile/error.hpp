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

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace smile {

/// Stable error identifiers. The string form (see code_name) is part of the
/// REST contract and must not change between releases.
enum class ErrorCode {
  kMalformedDocument,
  kWrongPointCount,
  kOutOfRangeCoordinate,
  kDegenerateGeometry,
  kInvalidIndexMap,
  kInvalidArgument,
  kInsufficientEligible,
  kTooFewSources,
  kDuplicateSource,
  kConsentMissing,
  kClassUnderrepresented,
  kNonFiniteLoss,
  kDimensionMismatch,
  kEmptyEvaluationSet,
  kBackendUnavailable,
  kEncodeFailure,
  kGenerateFailure,
  kSpaceMismatch,
  kProviderTimeout,
  kProviderRejected,
  kProviderUnavailable,
  kInsufficientCandidates,
  kInvalidConfig,
  kWrongState,
  kImageTooSmall,
  kUndecodableImage,
  kUnknownCandidate,
  kLandmarkExtractionFailed,
  kNotFound,
  kUnauthorized,
  kStorageFailure,
  kCancelled,
  kInternal,
};

std::string_view code_name(ErrorCode code);

/// Parses a code string produced by code_name. Unknown strings map to
/// kInternal.
ErrorCode code_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  /// {code, message, details} as served by the REST layer.
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace smile
