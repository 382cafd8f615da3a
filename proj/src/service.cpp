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

#include "smile/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include "smile/error.hpp"
#include "smile/face_card.hpp"
#include "smile/geometry.hpp"
#include "smile/image.hpp"

namespace smile {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string photo_blob(const std::string& case_id) { return "cases/" + case_id + "/photo"; }
std::string landmark_blob(const std::string& case_id) { return "cases/" + case_id + "/landmarks.json"; }
std::string candidate_blob(const std::string& case_id, const std::string& candidate_id) {
  return "cases/" + case_id + "/candidates/" + candidate_id + ".png";
}

[[noreturn]] void wrong_state(const Case& c, std::string_view operation) {
  throw Error(ErrorCode::kWrongState,
              std::string(operation) + " is not allowed in state " + std::string(to_string(c.state)),
              {{"case_id", c.case_id}, {"state", std::string(to_string(c.state))}});
}

void transition(Case& c, CaseState to) {
  if (!is_legal_transition(c.state, to)) {
    throw Error(ErrorCode::kInternal, "illegal transition",
                {{"from", std::string(to_string(c.state))}, {"to", std::string(to_string(to))}});
  }
  c.state = to;
}

}  // namespace

CaseService::CaseService(ServiceDeps deps, ServiceOptions options)
    : deps_(std::move(deps)), options_(std::move(options)) {
  if (!deps_.store || !deps_.backend || !deps_.provider) {
    throw Error(ErrorCode::kInvalidConfig, "service needs a store, a backend and a score provider");
  }
  if (options_.workers < 0) throw Error(ErrorCode::kInvalidConfig, "worker count must be non-negative");
  if (!options_.clock) options_.clock = now_utc;
  options_.gate_defaults.validate();
  engine_ = std::make_shared<GenerationEngine>(deps_.backend);
  for (int i = 0; i < options_.workers; ++i) workers_.emplace_back([this] { worker_loop(); });
  if (options_.recover_on_start) {
    for (const auto& id : deps_.store->list_case_ids()) {
      auto c = deps_.store->get_case(id);
      if (c && c->state == CaseState::kGenerating) enqueue(id);
    }
  }
}

CaseService::~CaseService() { shutdown(); }

std::shared_ptr<std::mutex> CaseService::case_mutex(const std::string& case_id) {
  std::lock_guard lock(locks_mu_);
  auto& m = locks_[case_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

Case CaseService::load(const std::string& case_id) {
  auto c = deps_.store->get_case(case_id);
  if (!c) throw Error(ErrorCode::kNotFound, "no such case", {{"case_id", case_id}});
  return *std::move(c);
}

void CaseService::save(Case& c) {
  c.updated_at = options_.clock();
  deps_.store->put_case(c);
}

void CaseService::fail(Case& c, const Error& error) {
  transition(c, CaseState::kFailed);
  c.failure_reason = error.to_json();
  save(c);
}

Case CaseService::create_case(const json& overrides) {
  if (!overrides.is_null() && !overrides.is_object()) {
    throw Error(ErrorCode::kInvalidConfig, "case options must be a JSON object");
  }
  Case c;
  c.case_id = random_id("case");
  c.created_at = options_.clock();
  c.gate_config = options_.gate_defaults;
  if (overrides.is_object()) {
    for (const auto& [key, value] : overrides.items()) {
      if (key == "gate_config") {
        c.gate_config = GateConfig::merged(options_.gate_defaults, value);
      } else if (key == "revision_of") {
        if (!value.is_string()) throw Error(ErrorCode::kInvalidConfig, "revision_of must be a string");
        load(value.get<std::string>());
        c.revision_of = value.get<std::string>();
      } else {
        throw Error(ErrorCode::kInvalidConfig, "unknown case option", {{"key", key}});
      }
    }
  }
  auto lock = case_mutex(c.case_id);
  std::lock_guard guard(*lock);
  save(c);
  return c;
}

Case CaseService::upload_photo(const std::string& case_id, std::span<const std::uint8_t> bytes,
                               const std::optional<std::string>& landmarks_document) {
  auto lock = case_mutex(case_id);
  std::lock_guard guard(*lock);
  Case c = load(case_id);
  if (c.state != CaseState::kCreated) wrong_state(c, "photo upload");

  const Image photo = decode_image(bytes);
  if (photo.width() < options_.min_photo_width || photo.height() < options_.min_photo_height) {
    throw Error(ErrorCode::kImageTooSmall, "photo is below the minimum resolution",
                {{"width", photo.width()},
                 {"height", photo.height()},
                 {"min_width", options_.min_photo_width},
                 {"min_height", options_.min_photo_height}});
  }
  std::optional<std::string> canonical;
  if (landmarks_document) {
    const LandmarkSet lm = parse_landmarks(*landmarks_document);
    if (lm.image_width() != photo.width() || lm.image_height() != photo.height()) {
      throw Error(ErrorCode::kInvalidArgument, "landmark image size does not match the photo",
                  {{"landmarks", {lm.image_width(), lm.image_height()}},
                   {"photo", {photo.width(), photo.height()}}});
    }
    canonical = serialize_landmarks(lm);
  }

  deps_.store->put_blob(photo_blob(case_id), bytes);
  c.photo_ref = photo_blob(case_id);
  if (canonical) {
    deps_.store->put_blob(landmark_blob(case_id),
                          std::span(reinterpret_cast<const std::uint8_t*>(canonical->data()), canonical->size()));
    c.landmark_ref = landmark_blob(case_id);
  }
  transition(c, CaseState::kPhotoUploaded);
  save(c);
  return c;
}

Case CaseService::copy_photo(const std::string& case_id, const std::string& source_case_id) {
  const Case source = get_case(source_case_id);
  if (!source.photo_ref) {
    throw Error(ErrorCode::kInvalidArgument, "source case has no photo", {{"case_id", source_case_id}});
  }
  const auto bytes = deps_.store->get_blob(*source.photo_ref);
  std::optional<std::string> landmarks;
  if (source.landmark_ref) {
    const auto doc = deps_.store->get_blob(*source.landmark_ref);
    landmarks = std::string(doc.begin(), doc.end());
  }
  return upload_photo(case_id, bytes, landmarks);
}

Case CaseService::run_pipeline(const std::string& case_id) {
  {
    auto lock = case_mutex(case_id);
    std::lock_guard guard(*lock);
    Case c = load(case_id);
    if (c.state != CaseState::kPhotoUploaded) wrong_state(c, "pipeline run");
    try {
      const auto photo_bytes = deps_.store->get_blob(*c.photo_ref);
      const Image photo = decode_image(photo_bytes);
      std::optional<LandmarkSet> lm;
      if (c.landmark_ref) {
        const auto doc = deps_.store->get_blob(*c.landmark_ref);
        lm = parse_landmarks(std::string_view(reinterpret_cast<const char*>(doc.data()), doc.size()));
      } else {
        lm = extract_face_card_landmarks(photo, *deps_.index_map, {}, case_id);
      }
      c.features = derive_features(*lm, *deps_.index_map);
      const auto cls = classify(deps_.model, featurize(*lm, *deps_.index_map));
      c.face_shape = FaceShapeResult{cls.label, cls.probabilities};
      transition(c, CaseState::kFeaturesExtracted);
      save(c);
      transition(c, CaseState::kGenerating);
      save(c);
    } catch (const Error& e) {
      fail(c, e);
      return c;
    } catch (const std::exception& e) {
      fail(c, Error(ErrorCode::kInternal, e.what()));
      return c;
    }
  }
  if (options_.workers == 0) {
    run_job(case_id);
  } else {
    enqueue(case_id);
  }
  return get_case(case_id);
}

void CaseService::run_job(const std::string& case_id) {
  Case snapshot;
  {
    auto lock = case_mutex(case_id);
    std::lock_guard guard(*lock);
    snapshot = load(case_id);
  }
  if (snapshot.state != CaseState::kGenerating) return;

  std::vector<StoredCandidate> stored;
  std::optional<Error> failure;
  try {
    const auto photo = decode_image(deps_.store->get_blob(*snapshot.photo_ref));
    const LatentCode latent = engine_->encode(photo);
    GateContext ctx{case_id, seed_from_string(case_id),
                    snapshot.gate_config.fallback_enabled ? deps_.fallback.get() : nullptr, &cancel_};
    const GateResult result =
        refine_loop(*engine_, latent, deps_.direction, snapshot.gate_config, *deps_.provider, ctx);
    for (const auto& a : result.accepted) {
      const auto name = candidate_blob(case_id, a.candidate.candidate_id);
      deps_.store->put_blob(name, encode_png(a.candidate.pixels));
      stored.push_back({a.candidate.candidate_id, name, a.candidate.magnitude, a.candidate.backend_id,
                        a.attempt_index, a.candidate.latent, a.score});
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCancelled) return;
    failure = e;
  } catch (const std::exception& e) {
    failure = Error(ErrorCode::kInternal, e.what());
  }

  auto lock = case_mutex(case_id);
  std::lock_guard guard(*lock);
  Case c = load(case_id);
  if (c.state != CaseState::kGenerating) return;
  if (failure) {
    fail(c, *failure);
    return;
  }
  c.candidates = std::move(stored);
  transition(c, CaseState::kAwaitingSelection);
  save(c);
}

Case CaseService::record_selection(const std::string& case_id, const std::string& candidate_id) {
  auto lock = case_mutex(case_id);
  std::lock_guard guard(*lock);
  Case c = load(case_id);
  if (c.state != CaseState::kAwaitingSelection) wrong_state(c, "selection");
  const bool known = std::any_of(c.candidates.begin(), c.candidates.end(),
                                 [&](const auto& s) { return s.candidate_id == candidate_id; });
  if (!known) {
    throw Error(ErrorCode::kUnknownCandidate, "candidate does not belong to this case",
                {{"case_id", case_id}, {"candidate_id", candidate_id}});
  }
  c.selection = candidate_id;
  transition(c, CaseState::kSelected);
  save(c);
  return c;
}

Case CaseService::record_consent(const std::string& case_id, bool granted, ConsentScope scope) {
  if (granted && scope != ConsentScope::kAnonymizedTraining) {
    throw Error(ErrorCode::kInvalidArgument, "granted consent needs scope ANONYMIZED_TRAINING");
  }
  auto lock = case_mutex(case_id);
  std::lock_guard guard(*lock);
  Case c = load(case_id);
  if (granted) {
    c.consent = {true, options_.clock(), ConsentScope::kAnonymizedTraining};
  } else {
    c.consent = {};
  }
  save(c);
  return c;
}

Case CaseService::get_case(const std::string& case_id) {
  auto lock = case_mutex(case_id);
  std::lock_guard guard(*lock);
  return load(case_id);
}

std::vector<Case> CaseService::list_cases() {
  std::vector<Case> out;
  for (const auto& id : deps_.store->list_case_ids()) {
    if (auto c = deps_.store->get_case(id)) out.push_back(*std::move(c));
  }
  return out;
}

std::vector<std::uint8_t> CaseService::candidate_image(const std::string& case_id,
                                                       const std::string& candidate_id) {
  const Case c = get_case(case_id);
  for (const auto& s : c.candidates) {
    if (s.candidate_id == candidate_id) return deps_.store->get_blob(s.image_ref);
  }
  throw Error(ErrorCode::kUnknownCandidate, "candidate does not belong to this case",
              {{"case_id", case_id}, {"candidate_id", candidate_id}});
}

void CaseService::enqueue(const std::string& case_id) {
  if (options_.workers == 0) {
    run_job(case_id);
    return;
  }
  {
    std::lock_guard lock(queue_mu_);
    if (std::find(queue_.begin(), queue_.end(), case_id) != queue_.end()) return;
    queue_.push_back(case_id);
  }
  queue_cv_.notify_one();
}

void CaseService::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = std::move(queue_.front());
      queue_.pop_front();
      ++active_;
    }
    try {
      run_job(id);
    } catch (...) {
      // The store rejected a write; the case keeps its last durable state.
    }
    {
      std::lock_guard lock(queue_mu_);
      --active_;
    }
    idle_cv_.notify_all();
  }
}

void CaseService::wait_idle() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return stopping_ || (queue_.empty() && active_ == 0); });
}

void CaseService::shutdown() {
  {
    std::lock_guard lock(queue_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cancel_.cancel();
  queue_cv_.notify_all();
  idle_cv_.notify_all();
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
}

// ---------------------------------------------------------------------------

std::string anonymized_token(const std::string& salt, const std::string& case_id) {
  return "anon-" + to_hex(sha256(salt + ":" + case_id)).substr(0, 24);
}

DatasetManifest export_consented(CaseStore& store, const std::optional<std::string>& out_dir) {
  const std::string salt = store.anonymization_salt();
  DatasetManifest manifest;
  for (const auto& id : store.list_case_ids()) {
    const auto c = store.get_case(id);
    if (!c || !c->consent.granted || c->consent.scope != ConsentScope::kAnonymizedTraining) continue;
    if (!c->photo_ref || !c->face_shape) continue;
    ManifestEntry e;
    e.id = anonymized_token(salt, c->case_id);
    e.path = e.id + ".png";
    e.label = c->face_shape->label;
    e.frontal = true;
    e.expression_clear = true;
    e.provenance = Provenance::kConsentedClinical;
    e.created_at = c->consent.granted_at.value_or(c->created_at);
    e.consent_id = "consent-" + to_hex(sha256(salt + ":consent:" + c->case_id)).substr(0, 16);
    if (out_dir) {
      fs::create_directories(*out_dir);
      const Image photo = decode_image(store.get_blob(*c->photo_ref));
      write_file_atomic((fs::path(*out_dir) / e.path).string(), encode_png(photo));
    }
    manifest.entries.push_back(std::move(e));
  }
  std::sort(manifest.entries.begin(), manifest.entries.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  if (out_dir) {
    fs::create_directories(*out_dir);
    save_manifest((fs::path(*out_dir) / "manifest.jsonl").string(), manifest);
  }
  return manifest;
}

// ---------------------------------------------------------------------------

namespace {

int parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidConfig, "expected an integer", {{"key", key}, {"value", text}});
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidConfig, "expected a number", {{"key", key}, {"value", text}});
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "on" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "off" || text == "no") return false;
  throw Error(ErrorCode::kInvalidConfig, "expected a boolean", {{"key", key}, {"value", text}});
}

}  // namespace

void ServiceConfig::apply_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "store") store_path = value.get<std::string>();
      else if (key == "workers") workers = value.get<int>();
      else if (key == "host") host = value.get<std::string>();
      else if (key == "port") port = value.get<int>();
      else if (key == "api_token") api_token = value.get<std::string>();
      else if (key == "gate") gate = GateConfig::merged(gate, value);
      else if (key == "min_photo") min_photo = value.get<int>();
      else if (key == "provider_url") provider_url = value.get<std::string>();
      else if (key == "provider_key") provider_key = value.get<std::string>();
      else if (key == "provider_secret") provider_secret = value.get<std::string>();
      else if (key == "provider_rps") provider_rps = value.get<double>();
      else if (key == "provider_combine") provider_combine = value.get<std::string>();
      else if (key == "backend_url") backend_url = value.get<std::string>();
      else if (key == "direction_file") direction_file = value.get<std::string>();
      else if (key == "model_file") model_file = value.get<std::string>();
      else if (key == "ui_dir") ui_dir = value.get<std::string>();
      else throw Error(ErrorCode::kInvalidConfig, "unknown config key", {{"key", key}});
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad config value: ") + ex.what());
  }
}

void ServiceConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
  auto str = [&](const char* name, std::string& field) {
    if (const char* v = getenv(name)) field = v;
  };
  auto num = [&](const char* name, auto& field) {
    if (const char* v = getenv(name)) {
      if constexpr (std::is_same_v<std::decay_t<decltype(field)>, int>) {
        field = parse_int(name, v);
      } else {
        field = parse_double(name, v);
      }
    }
  };
  str("SMILE_STORE", store_path);
  num("SMILE_WORKERS", workers);
  str("SMILE_HOST", host);
  num("SMILE_PORT", port);
  str("SMILE_API_TOKEN", api_token);
  num("SMILE_MIN_PHOTO", min_photo);
  str("SMILE_PROVIDER_URL", provider_url);
  str("SMILE_PROVIDER_KEY", provider_key);
  str("SMILE_PROVIDER_SECRET", provider_secret);
  num("SMILE_PROVIDER_RPS", provider_rps);
  str("SMILE_PROVIDER_COMBINE", provider_combine);
  str("SMILE_BACKEND_URL", backend_url);
  str("SMILE_DIRECTION_FILE", direction_file);
  str("SMILE_MODEL_FILE", model_file);
  str("SMILE_UI_DIR", ui_dir);

  json gate_overrides = json::object();
  if (const char* v = getenv("SMILE_THRESHOLD")) gate_overrides["threshold"] = parse_double("SMILE_THRESHOLD", v);
  if (const char* v = getenv("SMILE_REQUIRED_COUNT")) {
    gate_overrides["required_count"] = parse_int("SMILE_REQUIRED_COUNT", v);
  }
  if (const char* v = getenv("SMILE_MAX_ATTEMPTS")) {
    gate_overrides["max_attempts"] = parse_int("SMILE_MAX_ATTEMPTS", v);
  }
  if (const char* v = getenv("SMILE_FALLBACK")) gate_overrides["fallback_enabled"] = parse_bool("SMILE_FALLBACK", v);
  if (const char* v = getenv("SMILE_IN_FLIGHT")) gate_overrides["in_flight"] = parse_int("SMILE_IN_FLIGHT", v);
  if (!gate_overrides.empty()) gate = GateConfig::merged(gate, gate_overrides);
}

ServiceConfig ServiceConfig::load(const std::optional<std::string>& file) {
  ServiceConfig cfg;
  std::optional<std::string> path = file;
  if (!path) {
    if (const char* v = std::getenv("SMILE_CONFIG")) path = v;
  }
  if (path) {
    try {
      cfg.apply_json(json::parse(read_file_text(*path)));
    } catch (const json::parse_error& ex) {
      throw Error(ErrorCode::kInvalidConfig, std::string("config file is not JSON: ") + ex.what(),
                  {{"path", *path}});
    }
  }
  cfg.apply_env([](const char* name) { return std::getenv(name); });
  if (cfg.workers < 0) throw Error(ErrorCode::kInvalidConfig, "workers must be non-negative");
  if (cfg.min_photo < 1) throw Error(ErrorCode::kInvalidConfig, "min_photo must be positive");
  parse_beauty_combine(cfg.provider_combine);
  return cfg;
}

ServiceDeps make_service_deps(const ServiceConfig& config, bool offline) {
  ServiceDeps deps;
  deps.store = std::make_shared<FileCaseStore>(config.store_path);
  if (offline || config.backend_url.empty()) {
    deps.backend = std::make_shared<MockBackend>();
  } else {
    deps.backend = std::make_shared<HttpBackend>(config.backend_url);
  }
  auto local = std::make_shared<LocalFallbackScorer>(*deps.index_map);
  deps.fallback = local;
  if (offline || config.provider_url.empty()) {
    deps.provider = local;
  } else {
    RemoteScoreConfig rc;
    rc.url = config.provider_url;
    rc.api_key = config.provider_key;
    rc.api_secret = config.provider_secret;
    rc.rate_per_second = config.provider_rps;
    rc.combine = parse_beauty_combine(config.provider_combine);
    deps.provider = std::make_shared<RemoteScoreClient>(rc);
  }
  deps.model = config.model_file.empty() ? reference_model(*deps.index_map)
                                         : ClassifierModel::load(config.model_file);
  if (!config.direction_file.empty()) {
    deps.direction = load_direction_file(config.direction_file);
  } else {
    const auto info = deps.backend->info();
    if (info.space_tag != MockBackend::kSpaceTag) {
      throw Error(ErrorCode::kInvalidConfig, "an edit direction file is required for this backend",
                  {{"space_tag", info.space_tag}});
    }
    deps.direction = MockBackend::smile_direction(info.dim);
  }
  return deps;
}

}  // namespace smile
