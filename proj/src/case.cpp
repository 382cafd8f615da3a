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

#include "smile/case.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <random>

#include "smile/error.hpp"

namespace smile {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(CaseState s) {
  switch (s) {
    case CaseState::kCreated: return "CREATED";
    case CaseState::kPhotoUploaded: return "PHOTO_UPLOADED";
    case CaseState::kFeaturesExtracted: return "FEATURES_EXTRACTED";
    case CaseState::kGenerating: return "GENERATING";
    case CaseState::kAwaitingSelection: return "AWAITING_SELECTION";
    case CaseState::kSelected: return "SELECTED";
    case CaseState::kFailed: return "FAILED";
  }
  return "FAILED";
}

CaseState parse_case_state(std::string_view text) {
  for (auto s : kAllCaseStates) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::kMalformedDocument, "unknown case state: " + std::string(text));
}

bool is_terminal(CaseState s) { return s == CaseState::kSelected || s == CaseState::kFailed; }

bool is_legal_transition(CaseState from, CaseState to) {
  if (to == CaseState::kFailed) return !is_terminal(from);
  switch (from) {
    case CaseState::kCreated: return to == CaseState::kPhotoUploaded;
    case CaseState::kPhotoUploaded: return to == CaseState::kFeaturesExtracted;
    case CaseState::kFeaturesExtracted: return to == CaseState::kGenerating;
    case CaseState::kGenerating: return to == CaseState::kAwaitingSelection;
    case CaseState::kAwaitingSelection: return to == CaseState::kSelected;
    default: return false;
  }
}

std::string_view to_string(ConsentScope s) {
  return s == ConsentScope::kNone ? "NONE" : "ANONYMIZED_TRAINING";
}

ConsentScope parse_consent_scope(std::string_view text) {
  if (text == "NONE") return ConsentScope::kNone;
  if (text == "ANONYMIZED_TRAINING") return ConsentScope::kAnonymizedTraining;
  throw Error(ErrorCode::kInvalidArgument, "unknown consent scope: " + std::string(text));
}

namespace {

json features_to_json(const GeometryFeatures& f) {
  return {{"face_width_height_ratio", f.face_width_height_ratio},
          {"jaw_width_ratio", f.jaw_width_ratio},
          {"chin_angle_deg", f.chin_angle_deg},
          {"smile_curvature", f.smile_curvature},
          {"mouth_width_ratio", f.mouth_width_ratio},
          {"symmetry_score", f.symmetry_score}};
}

GeometryFeatures features_from_json(const json& j) {
  GeometryFeatures f;
  f.face_width_height_ratio = j.at("face_width_height_ratio").get<double>();
  f.jaw_width_ratio = j.at("jaw_width_ratio").get<double>();
  f.chin_angle_deg = j.at("chin_angle_deg").get<double>();
  f.smile_curvature = j.at("smile_curvature").get<double>();
  f.mouth_width_ratio = j.at("mouth_width_ratio").get<double>();
  f.symmetry_score = j.at("symmetry_score").get<double>();
  return f;
}

json consent_to_json(const ConsentRecord& c) {
  json j = {{"granted", c.granted}, {"scope", std::string(to_string(c.scope))}};
  j["granted_at"] = c.granted_at ? json(format_timestamp(*c.granted_at)) : json(nullptr);
  return j;
}

ConsentRecord consent_from_json(const json& j) {
  ConsentRecord c;
  c.granted = j.at("granted").get<bool>();
  c.scope = parse_consent_scope(j.at("scope").get<std::string>());
  if (j.contains("granted_at") && !j["granted_at"].is_null()) {
    c.granted_at = parse_timestamp(j["granted_at"].get<std::string>());
  }
  return c;
}

json face_shape_to_json(const FaceShapeResult& r) {
  json probs = json::object();
  for (auto label : kAllFaceShapes) {
    probs[std::string(to_string(label))] = r.probabilities[static_cast<std::size_t>(index_of(label))];
  }
  return {{"label", std::string(to_string(r.label))}, {"probabilities", probs}};
}

FaceShapeResult face_shape_from_json(const json& j) {
  FaceShapeResult r;
  r.label = parse_face_shape(j.at("label").get<std::string>());
  for (auto label : kAllFaceShapes) {
    r.probabilities[static_cast<std::size_t>(index_of(label))] =
        j.at("probabilities").at(std::string(to_string(label))).get<double>();
  }
  return r;
}

template <typename T, typename F>
json optional_json(const std::optional<T>& v, F&& convert) {
  return v ? json(convert(*v)) : json(nullptr);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

std::string image_url(const std::string& case_id, const std::string& candidate_id) {
  return "/cases/" + case_id + "/candidates/" + candidate_id + "/image";
}

}  // namespace

json Case::to_json() const {
  json cands = json::array();
  for (const auto& c : candidates) {
    cands.push_back({{"candidate_id", c.candidate_id},
                     {"image_ref", c.image_ref},
                     {"magnitude", c.magnitude},
                     {"backend_id", c.backend_id},
                     {"attempt_index", c.attempt_index},
                     {"latent", {{"space_tag", c.latent.space_tag}, {"vector", c.latent.vector}}},
                     {"score", c.score.to_json()}});
  }
  auto id = [](const auto& v) { return v; };
  return {{"record_version", 1},
          {"case_id", case_id},
          {"created_at", format_timestamp(created_at)},
          {"updated_at", format_timestamp(updated_at)},
          {"photo_ref", optional_json(photo_ref, id)},
          {"landmark_ref", optional_json(landmark_ref, id)},
          {"features", optional_json(features, features_to_json)},
          {"face_shape", optional_json(face_shape, face_shape_to_json)},
          {"state", std::string(to_string(state))},
          {"gate_config", gate_config.to_json()},
          {"candidates", cands},
          {"selection", optional_json(selection, id)},
          {"consent", consent_to_json(consent)},
          {"failure_reason", failure_reason ? *failure_reason : json(nullptr)},
          {"revision_of", optional_json(revision_of, id)}};
}

Case Case::from_json(const json& j) {
  try {
    Case c;
    c.case_id = j.at("case_id").get<std::string>();
    c.created_at = parse_timestamp(j.at("created_at").get<std::string>());
    c.updated_at = parse_timestamp(j.at("updated_at").get<std::string>());
    c.photo_ref = optional_field<std::string>(j, "photo_ref");
    c.landmark_ref = optional_field<std::string>(j, "landmark_ref");
    if (j.contains("features") && !j["features"].is_null()) c.features = features_from_json(j["features"]);
    if (j.contains("face_shape") && !j["face_shape"].is_null()) {
      c.face_shape = face_shape_from_json(j["face_shape"]);
    }
    c.state = parse_case_state(j.at("state").get<std::string>());
    c.gate_config = GateConfig::merged(GateConfig{}, j.at("gate_config"));
    for (const auto& e : j.at("candidates")) {
      StoredCandidate s;
      s.candidate_id = e.at("candidate_id").get<std::string>();
      s.image_ref = e.at("image_ref").get<std::string>();
      s.magnitude = e.at("magnitude").get<double>();
      s.backend_id = e.at("backend_id").get<std::string>();
      s.attempt_index = e.at("attempt_index").get<std::size_t>();
      s.latent.space_tag = e.at("latent").at("space_tag").get<std::string>();
      s.latent.vector = e.at("latent").at("vector").get<std::vector<double>>();
      s.score = AestheticScore::from_json(e.at("score"));
      c.candidates.push_back(std::move(s));
    }
    c.selection = optional_field<std::string>(j, "selection");
    c.consent = consent_from_json(j.at("consent"));
    if (j.contains("failure_reason") && !j["failure_reason"].is_null()) c.failure_reason = j["failure_reason"];
    c.revision_of = optional_field<std::string>(j, "revision_of");
    return c;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad case record: ") + ex.what());
  }
}

json Case::to_view() const {
  json cands = json::array();
  for (const auto& c : candidates) {
    cands.push_back({{"candidate_id", c.candidate_id},
                     {"score", c.score.to_json()},
                     {"magnitude", c.magnitude},
                     {"attempt_index", c.attempt_index},
                     {"backend_id", c.backend_id},
                     {"image_url", image_url(case_id, c.candidate_id)}});
  }
  auto id = [](const auto& v) { return v; };
  return {{"case_id", case_id},
          {"created_at", format_timestamp(created_at)},
          {"updated_at", format_timestamp(updated_at)},
          {"state", std::string(to_string(state))},
          {"has_photo", photo_ref.has_value()},
          {"has_landmarks", landmark_ref.has_value()},
          {"features", optional_json(features, features_to_json)},
          {"face_shape", optional_json(face_shape, face_shape_to_json)},
          {"gate_config", gate_config.to_json()},
          {"candidates", cands},
          {"selection", optional_json(selection, id)},
          {"consent", consent_to_json(consent)},
          {"failure_reason", failure_reason ? *failure_reason : json(nullptr)},
          {"revision_of", optional_json(revision_of, id)}};
}

// ---------------------------------------------------------------------------

namespace {

void check_name(const std::string& name) {
  const bool ok = !name.empty() && name.find("..") == std::string::npos && name.front() != '/' &&
                  std::all_of(name.begin(), name.end(), [](char ch) {
                    return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ||
                           ch == '.' || ch == '/';
                  });
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "invalid storage name", {{"name", name}});
}

std::string fresh_salt() {
  std::random_device rd;
  std::array<std::uint8_t, 32> bytes{};
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rd());
  return to_hex(bytes);
}

}  // namespace

std::string random_id(std::string_view prefix) {
  static std::mutex mu;
  static SplitMix64 rng = [] {
    std::random_device rd;
    return SplitMix64((static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
                      static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  }();
  std::lock_guard lock(mu);
  const std::uint64_t v = rng.next();
  std::array<std::uint8_t, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(v >> (8 * (7 - i)));
  return std::string(prefix) + "-" + to_hex(bytes);
}

FileCaseStore::FileCaseStore(std::string root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(fs::path(root_) / "cases", ec);
  fs::create_directories(fs::path(root_) / "blobs", ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot create store directories", {{"root", root_}});
  const auto salt_path = (fs::path(root_) / "salt").string();
  if (fs::exists(salt_path)) {
    salt_ = read_file_text(salt_path);
  } else {
    salt_ = fresh_salt();
    write_file_atomic(salt_path, salt_);
  }
}

void FileCaseStore::put_case(const Case& c) {
  check_name(c.case_id);
  write_file_atomic((fs::path(root_) / "cases" / (c.case_id + ".json")).string(), c.to_json().dump() + "\n");
}

std::optional<Case> FileCaseStore::get_case(const std::string& case_id) {
  check_name(case_id);
  const auto path = fs::path(root_) / "cases" / (case_id + ".json");
  if (!fs::exists(path)) return std::nullopt;
  try {
    return Case::from_json(json::parse(read_file_text(path.string())));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::kStorageFailure, std::string("corrupt case record: ") + ex.what(),
                {{"case_id", case_id}});
  }
}

std::vector<std::string> FileCaseStore::list_case_ids() {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(fs::path(root_) / "cases")) {
    if (entry.path().extension() == ".json") ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

void FileCaseStore::put_blob(const std::string& name, std::span<const std::uint8_t> bytes) {
  check_name(name);
  const auto path = fs::path(root_) / "blobs" / name;
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  write_file_atomic(path.string(), bytes);
}

std::vector<std::uint8_t> FileCaseStore::get_blob(const std::string& name) {
  check_name(name);
  const auto path = fs::path(root_) / "blobs" / name;
  if (!fs::exists(path)) throw Error(ErrorCode::kNotFound, "blob not found", {{"name", name}});
  return read_file_bytes(path.string());
}

std::string FileCaseStore::anonymization_salt() { return salt_; }

MemoryCaseStore::MemoryCaseStore() : salt_(fresh_salt()) {}

void MemoryCaseStore::put_case(const Case& c) {
  std::lock_guard lock(mu_);
  cases_[c.case_id] = c.to_json();
}

std::optional<Case> MemoryCaseStore::get_case(const std::string& case_id) {
  std::lock_guard lock(mu_);
  auto it = cases_.find(case_id);
  if (it == cases_.end()) return std::nullopt;
  return Case::from_json(it->second);
}

std::vector<std::string> MemoryCaseStore::list_case_ids() {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : cases_) ids.push_back(id);
  return ids;
}

void MemoryCaseStore::put_blob(const std::string& name, std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mu_);
  blobs_[name] = {bytes.begin(), bytes.end()};
}

std::vector<std::uint8_t> MemoryCaseStore::get_blob(const std::string& name) {
  std::lock_guard lock(mu_);
  auto it = blobs_.find(name);
  if (it == blobs_.end()) throw Error(ErrorCode::kNotFound, "blob not found", {{"name", name}});
  return it->second;
}

}  // namespace smile
