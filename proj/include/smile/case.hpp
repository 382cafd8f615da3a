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
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smile/aesthetic.hpp"
#include "smile/face_shape.hpp"
#include "smile/geometry.hpp"
#include "smile/util.hpp"

namespace smile {

enum class CaseState {
  kCreated,
  kPhotoUploaded,
  kFeaturesExtracted,
  kGenerating,
  kAwaitingSelection,
  kSelected,
  kFailed,
};

inline constexpr std::array<CaseState, 7> kAllCaseStates = {
    CaseState::kCreated,    CaseState::kPhotoUploaded,     CaseState::kFeaturesExtracted,
    CaseState::kGenerating, CaseState::kAwaitingSelection, CaseState::kSelected,
    CaseState::kFailed};

std::string_view to_string(CaseState s);
CaseState parse_case_state(std::string_view text);

/// The forward chain CREATED -> ... -> SELECTED, plus any non-terminal state
/// to FAILED.
bool is_legal_transition(CaseState from, CaseState to);
bool is_terminal(CaseState s);

enum class ConsentScope { kNone, kAnonymizedTraining };

std::string_view to_string(ConsentScope s);
ConsentScope parse_consent_scope(std::string_view text);

struct ConsentRecord {
  bool granted = false;
  std::optional<Timestamp> granted_at;
  ConsentScope scope = ConsentScope::kNone;

  friend bool operator==(const ConsentRecord&, const ConsentRecord&) = default;
};

struct FaceShapeResult {
  FaceShapeLabel label = FaceShapeLabel::kOval;
  std::array<double, kFaceShapeCount> probabilities{};

  friend bool operator==(const FaceShapeResult&, const FaceShapeResult&) = default;
};

struct StoredCandidate {
  std::string candidate_id;
  std::string image_ref;  // blob name
  double magnitude = 0.0;
  std::string backend_id;
  std::size_t attempt_index = 0;
  LatentCode latent;
  AestheticScore score;

  friend bool operator==(const StoredCandidate&, const StoredCandidate&) = default;
};

struct Case {
  std::string case_id;
  Timestamp created_at{};
  Timestamp updated_at{};
  std::optional<std::string> photo_ref;
  std::optional<std::string> landmark_ref;
  std::optional<GeometryFeatures> features;
  std::optional<FaceShapeResult> face_shape;
  CaseState state = CaseState::kCreated;
  GateConfig gate_config;
  std::vector<StoredCandidate> candidates;
  std::optional<std::string> selection;
  ConsentRecord consent;
  std::optional<nlohmann::json> failure_reason;  // {code, message, details}
  std::optional<std::string> revision_of;

  /// Full persisted record.
  nlohmann::json to_json() const;
  static Case from_json(const nlohmann::json& j);
  /// REST view: no latent vectors or blob names.
  nlohmann::json to_view() const;

  friend bool operator==(const Case&, const Case&) = default;
};

/// Durable storage for case records and binary blobs. Implementations are
/// safe for concurrent use.
class CaseStore {
 public:
  virtual ~CaseStore() = default;
  virtual void put_case(const Case& c) = 0;
  virtual std::optional<Case> get_case(const std::string& case_id) = 0;
  virtual std::vector<std::string> list_case_ids() = 0;
  virtual void put_blob(const std::string& name, std::span<const std::uint8_t> bytes) = 0;
  /// Throws NotFound.
  virtual std::vector<std::uint8_t> get_blob(const std::string& name) = 0;
  /// Secret used to derive anonymous export tokens; stable for the store's lifetime.
  virtual std::string anonymization_salt() = 0;
};

/// Directory layout:
///   <root>/cases/<case_id>.json
///   <root>/blobs/<name>
///   <root>/salt
/// Every write goes through a temporary file and an atomic rename.
class FileCaseStore : public CaseStore {
 public:
  explicit FileCaseStore(std::string root);

  void put_case(const Case& c) override;
  std::optional<Case> get_case(const std::string& case_id) override;
  std::vector<std::string> list_case_ids() override;
  void put_blob(const std::string& name, std::span<const std::uint8_t> bytes) override;
  std::vector<std::uint8_t> get_blob(const std::string& name) override;
  std::string anonymization_salt() override;

  const std::string& root() const { return root_; }

 private:
  std::string root_;
  std::string salt_;
};

class MemoryCaseStore : public CaseStore {
 public:
  MemoryCaseStore();

  void put_case(const Case& c) override;
  std::optional<Case> get_case(const std::string& case_id) override;
  std::vector<std::string> list_case_ids() override;
  void put_blob(const std::string& name, std::span<const std::uint8_t> bytes) override;
  std::vector<std::uint8_t> get_blob(const std::string& name) override;
  std::string anonymization_salt() override { return salt_; }

 private:
  std::mutex mu_;
  std::map<std::string, nlohmann::json> cases_;
  std::map<std::string, std::vector<std::uint8_t>> blobs_;
  std::string salt_;
};

/// Fresh random identifier with the given prefix, e.g. "case-3f9c0d1e2a4b5c6d".
std::string random_id(std::string_view prefix);

}  // namespace smile
