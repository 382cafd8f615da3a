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
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smile/face_shape.hpp"
#include "smile/image.hpp"
#include "smile/util.hpp"

namespace smile {

enum class Provenance { kPublicCorpus, kConsentedClinical };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

/// One line of a dataset manifest. `path` is relative to the manifest file.
struct ManifestEntry {
  std::string id;
  std::string path;
  FaceShapeLabel label = FaceShapeLabel::kOval;
  bool frontal = false;
  bool expression_clear = false;
  Provenance provenance = Provenance::kPublicCorpus;
  Timestamp created_at{};
  std::string consent_id;  // required for CONSENTED_CLINICAL entries

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Line-delimited JSON, one ManifestEntry per line. Blank lines are skipped.
/// Throws MalformedDocument on bad lines and DuplicateSource on repeated ids.
DatasetManifest parse_manifest(std::string_view jsonl);
std::string serialize_manifest(const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& manifest);

inline constexpr std::size_t kDefaultCurationTarget = 500;

/// Entries that are frontal with a clear expression, sorted by id and
/// truncated to target_count. Throws InsufficientEligible (details.eligible)
/// when fewer than target_count qualify.
DatasetManifest curate(const DatasetManifest& manifest,
                       std::size_t target_count = kDefaultCurationTarget);

/// out = clamp(round((in - 128) * contrast_factor + 128 + brightness_delta * 255))
/// per channel. Throws InvalidArgument for a non-positive contrast factor.
Image adjust_brightness_contrast(const Image& image, double brightness_delta,
                                 double contrast_factor);

/// Mirror about the vertical axis.
Image hflip(const Image& image);

enum class AugmentOp {
  kOrig,
  kBrightUpContrastDown,
  kBrightDownContrastUp,
  kFlipOrig,
  kFlipBucd,
  kFlipBdcu,
};

inline constexpr std::array<AugmentOp, 6> kAugmentOrder = {
    AugmentOp::kOrig,     AugmentOp::kBrightUpContrastDown, AugmentOp::kBrightDownContrastUp,
    AugmentOp::kFlipOrig, AugmentOp::kFlipBucd,             AugmentOp::kFlipBdcu};

std::string_view to_string(AugmentOp op);  // ORIG, BUCD, BDCU, FLIP_ORIG, FLIP_BUCD, FLIP_BDCU

struct AugmentParams {
  double bucd_brightness = 0.15;
  double bucd_contrast = 0.8;
  double bdcu_brightness = -0.15;
  double bdcu_contrast = 1.25;
};

/// Reads {"bucd": {"brightness", "contrast"}, "bdcu": {...}}; missing keys
/// keep their defaults.
AugmentParams parse_augment_params(std::string_view json_text);

struct SourceImage {
  Image pixels;
  std::string id;
  FaceShapeLabel label = FaceShapeLabel::kOval;
  bool frontal = true;
  bool expression_clear = true;
};

struct AugmentedSample {
  Image pixels;
  FaceShapeLabel label = FaceShapeLabel::kOval;
  std::string source_id;
  AugmentOp op = AugmentOp::kOrig;
};

/// The six variants of one source in kAugmentOrder.
std::array<AugmentedSample, 6> augment6(const SourceImage& source, const AugmentParams& params = {});

struct FoldAssignment {
  int k = 5;
  std::map<std::string, int> assignment;

  /// Throws NotFound for unknown ids.
  int fold_of(const std::string& source_id) const;
  std::vector<std::size_t> fold_sizes() const;
  std::vector<std::string> members(int fold) const;

  nlohmann::json to_json() const;
  static FoldAssignment from_json(const nlohmann::json& j);
};

/// Seeded shuffle of the sorted ids, then round-robin fold numbering.
/// Throws InvalidArgument for k < 2, TooFewSources when fewer than k ids and
/// DuplicateSource on repeated ids.
FoldAssignment kfold_split(std::vector<std::string> sources, int k, std::uint64_t seed);

struct PhasePolicy {
  std::size_t min_clinical = 3000;
  double retire_fraction_per_cycle = 0.2;
};

/// Retirement state carried between merge_and_phase calls.
struct PhaseLedger {
  std::size_t original_public_count = 0;
  std::set<std::string> retired;
  int cycles = 0;

  nlohmann::json to_json() const;
  static PhaseLedger from_json(const nlohmann::json& j);
};

/// Union of public and clinical entries. Once the clinical side reaches
/// policy.min_clinical, each call retires the oldest
/// round(retire_fraction * original public count) public entries still
/// live (created_at, then id). Retired ids are recorded in `ledger` and never
/// returned again. Without a ledger each call behaves as a first cycle.
/// Throws ConsentMissing when a clinical entry is not CONSENTED_CLINICAL or
/// has no consent id.
DatasetManifest merge_and_phase(const DatasetManifest& public_set, const DatasetManifest& clinical,
                                const PhasePolicy& policy = {}, PhaseLedger* ledger = nullptr);

}  // namespace smile
