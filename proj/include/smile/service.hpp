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

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "smile/aesthetic.hpp"
#include "smile/case.hpp"
#include "smile/classifier.hpp"
#include "smile/dataset.hpp"
#include "smile/generation.hpp"
#include "smile/landmarks.hpp"

namespace smile {

struct ServiceDeps {
  std::shared_ptr<CaseStore> store;
  std::shared_ptr<GeneratorBackend> backend;
  std::shared_ptr<ScoreProvider> provider;
  std::shared_ptr<ScoreProvider> fallback;  // may be null when the gate never falls back
  ClassifierModel model;
  EditDirection direction;
  const LandmarkIndexMap* index_map = &default_index_map();
};

struct ServiceOptions {
  GateConfig gate_defaults;
  /// Zero runs pipeline jobs inline on the caller of run_pipeline().
  int workers = 2;
  int min_photo_width = 512;
  int min_photo_height = 512;
  std::function<Timestamp()> clock;
  /// Re-queue cases found in GENERATING when the service starts.
  bool recover_on_start = true;
};

/// The clinical workflow over a CaseStore. Operations on one case are
/// serialized; different cases proceed independently. Generation runs on a
/// bounded worker pool.
class CaseService {
 public:
  CaseService(ServiceDeps deps, ServiceOptions options);
  ~CaseService();

  CaseService(const CaseService&) = delete;
  CaseService& operator=(const CaseService&) = delete;

  /// Throws InvalidConfig.
  Case create_case(const nlohmann::json& overrides = nlohmann::json::object());

  /// Stores the photo (and an optional landmark document for it).
  /// Throws NotFound, WrongState, UndecodableImage, ImageTooSmall,
  /// MalformedDocument, WrongPointCount, OutOfRangeCoordinate.
  Case upload_photo(const std::string& case_id, std::span<const std::uint8_t> bytes,
                    const std::optional<std::string>& landmarks_document = std::nullopt);

  /// Uploads the photo (and landmarks) of `source_case_id` into `case_id`.
  Case copy_photo(const std::string& case_id, const std::string& source_case_id);

  /// Extracts features synchronously, then queues generation. Errors after
  /// the state check land on the case as FAILED. Throws NotFound, WrongState.
  Case run_pipeline(const std::string& case_id);

  /// Throws NotFound, WrongState, UnknownCandidate.
  Case record_selection(const std::string& case_id, const std::string& candidate_id);

  /// Allowed in every state. Granting requires scope ANONYMIZED_TRAINING;
  /// revoking clears the scope. Throws NotFound, InvalidArgument.
  Case record_consent(const std::string& case_id, bool granted, ConsentScope scope);

  /// Throws NotFound.
  Case get_case(const std::string& case_id);
  std::vector<Case> list_cases();

  /// PNG bytes. Throws NotFound, UnknownCandidate.
  std::vector<std::uint8_t> candidate_image(const std::string& case_id,
                                            const std::string& candidate_id);

  /// Blocks until the job queue is empty and no job is running.
  void wait_idle();
  /// Cancels running jobs and joins the workers. Cancelled cases stay in
  /// GENERATING and are picked up by the next service on the same store.
  void shutdown();

  CaseStore& store() { return *deps_.store; }
  const ServiceOptions& options() const { return options_; }

 private:
  std::shared_ptr<std::mutex> case_mutex(const std::string& case_id);
  Case load(const std::string& case_id);
  void save(Case& c);
  void fail(Case& c, const Error& error);
  void enqueue(const std::string& case_id);
  void worker_loop();
  void run_job(const std::string& case_id);

  ServiceDeps deps_;
  ServiceOptions options_;
  std::shared_ptr<GenerationEngine> engine_;
  CancelToken cancel_;

  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::string> queue_;
  int active_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Opaque export token for a case: "anon-" followed by 24 hex digits of
/// sha256(salt ":" case_id).
std::string anonymized_token(const std::string& salt, const std::string& case_id);

/// Manifest of photos from cases whose consent is granted with scope
/// ANONYMIZED_TRAINING and that carry a photo and a face shape. Entries are
/// keyed by anonymized token, sorted, and carry no case id. With `out_dir`,
/// photos are re-encoded as PNG next to a manifest.jsonl.
DatasetManifest export_consented(CaseStore& store,
                                 const std::optional<std::string>& out_dir = std::nullopt);

/// Runtime configuration for `smile serve` and `smile case run`.
struct ServiceConfig {
  std::string store_path = "smile-store";
  int workers = 2;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string api_token;  // empty disables auth
  GateConfig gate;
  int min_photo = 512;
  std::string provider_url;  // empty selects the local fallback scorer
  std::string provider_key;
  std::string provider_secret;
  double provider_rps = 3.0;
  std::string provider_combine = "mean";
  std::string backend_url;  // empty selects the in-process mock backend
  std::string direction_file;
  std::string model_file;  // empty trains the synthetic reference model
  std::string ui_dir;

  /// Reads an optional JSON file, then SMILE_* environment variables on top.
  /// Throws InvalidConfig.
  static ServiceConfig load(const std::optional<std::string>& file = std::nullopt);
  /// Applies the recognized keys of a JSON object. Unknown keys are rejected.
  void apply_json(const nlohmann::json& j);
  /// Applies SMILE_* variables read through `getenv`.
  void apply_env(const std::function<const char*(const char*)>& getenv);
};

/// Builds store, backend, scorers, model and direction from a config.
/// `offline` forces the mock backend and the local fallback scorer.
ServiceDeps make_service_deps(const ServiceConfig& config, bool offline);

}  // namespace smile
