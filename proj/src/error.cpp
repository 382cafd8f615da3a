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

#include "smile/error.hpp"

#include <array>
#include <utility>

namespace smile {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 33> kNames{{
    {ErrorCode::kMalformedDocument, "MalformedDocument"},
    {ErrorCode::kWrongPointCount, "WrongPointCount"},
    {ErrorCode::kOutOfRangeCoordinate, "OutOfRangeCoordinate"},
    {ErrorCode::kDegenerateGeometry, "DegenerateGeometry"},
    {ErrorCode::kInvalidIndexMap, "InvalidIndexMap"},
    {ErrorCode::kInvalidArgument, "InvalidArgument"},
    {ErrorCode::kInsufficientEligible, "InsufficientEligible"},
    {ErrorCode::kTooFewSources, "TooFewSources"},
    {ErrorCode::kDuplicateSource, "DuplicateSource"},
    {ErrorCode::kConsentMissing, "ConsentMissing"},
    {ErrorCode::kClassUnderrepresented, "ClassUnderrepresented"},
    {ErrorCode::kNonFiniteLoss, "NonFiniteLoss"},
    {ErrorCode::kDimensionMismatch, "DimensionMismatch"},
    {ErrorCode::kEmptyEvaluationSet, "EmptyEvaluationSet"},
    {ErrorCode::kBackendUnavailable, "BackendUnavailable"},
    {ErrorCode::kEncodeFailure, "EncodeFailure"},
    {ErrorCode::kGenerateFailure, "GenerateFailure"},
    {ErrorCode::kSpaceMismatch, "SpaceMismatch"},
    {ErrorCode::kProviderTimeout, "ProviderTimeout"},
    {ErrorCode::kProviderRejected, "ProviderRejected"},
    {ErrorCode::kProviderUnavailable, "ProviderUnavailable"},
    {ErrorCode::kInsufficientCandidates, "InsufficientCandidates"},
    {ErrorCode::kInvalidConfig, "InvalidConfig"},
    {ErrorCode::kWrongState, "WrongState"},
    {ErrorCode::kImageTooSmall, "ImageTooSmall"},
    {ErrorCode::kUndecodableImage, "UndecodableImage"},
    {ErrorCode::kUnknownCandidate, "UnknownCandidate"},
    {ErrorCode::kLandmarkExtractionFailed, "LandmarkExtractionFailed"},
    {ErrorCode::kNotFound, "NotFound"},
    {ErrorCode::kUnauthorized, "Unauthorized"},
    {ErrorCode::kStorageFailure, "StorageFailure"},
    {ErrorCode::kCancelled, "Cancelled"},
    {ErrorCode::kInternal, "Internal"},
}};

}  // namespace

std::string_view code_name(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Internal";
}

ErrorCode code_from_name(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return ErrorCode::kInternal;
}

nlohmann::json Error::to_json() const {
  return {{"code", std::string(code_name(code_))},
          {"message", what()},
          {"details", details_}};
}

}  // namespace smile
