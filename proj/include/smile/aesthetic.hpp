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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "smile/error.hpp"
#include "smile/generation.hpp"
#include "smile/image.hpp"
#include "smile/landmarks.hpp"
#include "smile/util.hpp"

namespace smile {

struct AestheticScore {
  double value = 0.0;  // [0, 100]
  std::string provider_id;
  Timestamp scored_at{};
  bool heuristic = false;

  nlohmann::json to_json() const;
  static AestheticScore from_json(const nlohmann::json& j);

  friend bool operator==(const AestheticScore&, const AestheticScore&) = default;
};

struct ScoreRequest {
  const Image& image;
  std::size_t attempt_index = 0;
  std::string candidate_id;
};

/// An aesthetic scoring service. Implementations must be safe to call from
/// several threads at once.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual std::string id() const = 0;
  /// Throws ProviderTimeout, ProviderRejected or ProviderUnavailable.
  virtual AestheticScore score(const ScoreRequest& request) = 0;
};

/// Test double that answers by attempt index. An empty slot simulates an
/// outage (ProviderUnavailable); values outside [0, 100] are rejected as
/// out-of-contract. Indices past the end wrap around.
class ScriptedProvider : public ScoreProvider {
 public:
  explicit ScriptedProvider(std::vector<std::optional<double>> script,
                            std::string provider_id = "scripted");
  static std::shared_ptr<ScriptedProvider> of(std::vector<double> scores);

  std::string id() const override { return id_; }
  AestheticScore score(const ScoreRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::vector<std::optional<double>> script_;
  std::string id_;
  std::atomic<std::size_t> calls_{0};
};

inline constexpr double kFallbackSymmetryWeight = 0.6;
inline constexpr double kFallbackCurvatureWeight = 0.4;
inline constexpr double kFallbackCurvatureRef = 0.5;
inline constexpr const char* kFallbackProviderId = "local-fallback";

/// 100 * (0.6 * symmetry + 0.4 * clamp(curvature / 0.5, 0, 1)).
double fallback_formula(double symmetry, double curvature);

/// Heuristic scorer. Measures the image as a face card; when that fails it
/// scores 0.6 * (left/right pixel mirror similarity). Not a model of any
/// human or third-party aesthetic judgment.
AestheticScore local_fallback_score(const Image& image,
                                    const LandmarkIndexMap& idx = default_index_map());

class LocalFallbackScorer : public ScoreProvider {
 public:
  using Clock = std::function<Timestamp()>;

  explicit LocalFallbackScorer(const LandmarkIndexMap& idx = default_index_map(), Clock clock = {})
      : idx_(idx), clock_(std::move(clock)) {}
  std::string id() const override { return kFallbackProviderId; }
  AestheticScore score(const ScoreRequest& request) override;

 private:
  const LandmarkIndexMap& idx_;
  Clock clock_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;

/// Blocking token bucket. `rate` tokens per second, at most `burst` stored.
class TokenBucket {
 public:
  TokenBucket(double rate, double burst, SteadyClock clock = {}, Sleeper sleeper = {});
  void acquire();

 private:
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  SteadyClock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
};

enum class BeautyCombine { kMean, kMax, kMale, kFemale };

struct RemoteScoreConfig {
  std::string url;  // full endpoint, e.g. https://api-us.faceplusplus.com/facepp/v3/detect
  std::string api_key;
  std::string api_secret;
  std::chrono::milliseconds timeout{10000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{250};
  double backoff_factor = 2.0;
  double rate_per_second = 3.0;
  double burst = 3.0;
  BeautyCombine combine = BeautyCombine::kMean;
  std::string provider_id = "facepp";
};

BeautyCombine parse_beauty_combine(std::string_view text);

/// Extracts the attractiveness value from a Face++-style detect response.
/// Accepts faces[0].attributes.beauty, a top-level "beauty" object or a bare
/// object, reading "score" or combining "male_score"/"female_score".
/// Throws ProviderRejected when no face or no usable value is present, or
/// the value lies outside [0, 100].
double parse_beauty_payload(const nlohmann::json& payload, BeautyCombine combine);

struct RemoteCallStats {
  std::size_t http_calls = 0;
  std::size_t retries = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;
};

/// Multipart client for a Face++-compatible beauty endpoint. Retries
/// timeouts, connection errors and 5xx with exponential backoff; 4xx fail
/// immediately as ProviderRejected.
class RemoteScoreClient : public ScoreProvider {
 public:
  explicit RemoteScoreClient(RemoteScoreConfig config, Sleeper sleeper = {}, SteadyClock clock = {});
  ~RemoteScoreClient() override;

  std::string id() const override { return config_.provider_id; }
  AestheticScore score(const ScoreRequest& request) override;
  AestheticScore score_image(const Image& image);
  RemoteCallStats stats() const;

 private:
  RemoteScoreConfig config_;
  Sleeper sleeper_;
  TokenBucket bucket_;
  mutable std::mutex stats_mu_;
  RemoteCallStats stats_;
};

/// Transcript: JSON lines, a header {"format": "score-transcript",
/// "version": 1} followed by {"digest", "score"} or {"digest", "error"}
/// records keyed by the image digest, in call order.
class RecordingProvider : public ScoreProvider {
 public:
  RecordingProvider(std::shared_ptr<ScoreProvider> inner, const std::string& path);
  std::string id() const override { return inner_->id(); }
  AestheticScore score(const ScoreRequest& request) override;

 private:
  std::shared_ptr<ScoreProvider> inner_;
  std::mutex mu_;
  std::ofstream out_;
};

/// Answers from a transcript. Repeated digests replay their outcomes in
/// recorded order. Unknown digests raise ProviderUnavailable.
class ReplayProvider : public ScoreProvider {
 public:
  explicit ReplayProvider(const std::string& path);
  std::string id() const override { return id_; }
  AestheticScore score(const ScoreRequest& request) override;

 private:
  using Outcome = std::variant<AestheticScore, Error>;
  std::string id_ = "replay";
  std::mutex mu_;
  std::map<std::string, std::deque<Outcome>> outcomes_;
};

struct GateConfig {
  double threshold = 70.0;
  int required_count = 5;
  int max_attempts = 50;
  std::vector<double> magnitude_schedule = default_magnitude_schedule();
  bool fallback_enabled = true;
  int in_flight = 2;

  /// Throws InvalidConfig when an invariant fails.
  void validate() const;
  nlohmann::json to_json() const;
  /// Applies the keys present in `overrides` on top of `base` and validates.
  static GateConfig merged(const GateConfig& base, const nlohmann::json& overrides);

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

inline constexpr double kScheduleJitter = 0.25;

/// Magnitude for a zero-based attempt: the schedule in order, then repeated
/// cycles with a uniform offset in [-0.25, 0.25) drawn from (case_seed, attempt).
double magnitude_for_attempt(const GateConfig& cfg, std::size_t attempt, std::uint64_t case_seed);

struct ScoredCandidate {
  CandidateImage candidate;
  AestheticScore score;
  std::size_t attempt_index = 0;
};

struct GateResult {
  std::vector<ScoredCandidate> accepted;
  int attempts_used = 0;
  int rejected_count = 0;
  int provider_failures = 0;
};

class CancelToken {
 public:
  void cancel() { flag_.store(true); }
  bool cancelled() const { return flag_.load(); }

 private:
  std::atomic<bool> flag_{false};
};

struct GateContext {
  std::string case_id;
  std::uint64_t case_seed = 0;
  ScoreProvider* fallback = nullptr;  // used when cfg.fallback_enabled
  const CancelToken* cancel = nullptr;
};

/// Generates and scores candidates until cfg.required_count reach
/// cfg.threshold (inclusive) or cfg.max_attempts scores have been taken.
/// Scores up to cfg.in_flight candidates concurrently; decisions are applied
/// in attempt order. Throws InsufficientCandidates {found, attempts},
/// ProviderUnavailable (fallback disabled) or Cancelled.
GateResult refine_loop(GenerationEngine& engine, const LatentCode& latent, const EditDirection& dir,
                       const GateConfig& cfg, ScoreProvider& provider, const GateContext& ctx);

}  // namespace smile
