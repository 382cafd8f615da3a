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

#include "smile/aesthetic.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

#include "smile/face_card.hpp"
#include "smile/geometry.hpp"

namespace smile {

using nlohmann::json;

json AestheticScore::to_json() const {
  return {{"value", value}, {"provider_id", provider_id}, {"scored_at", format_timestamp(scored_at)},
          {"heuristic", heuristic}};
}

AestheticScore AestheticScore::from_json(const json& j) {
  AestheticScore s;
  s.value = j.at("value").get<double>();
  s.provider_id = j.at("provider_id").get<std::string>();
  s.scored_at = parse_timestamp(j.at("scored_at").get<std::string>());
  s.heuristic = j.value("heuristic", false);
  return s;
}

namespace {

void check_range(double value, const std::string& provider) {
  if (!(value >= 0.0 && value <= 100.0)) {
    throw Error(ErrorCode::kProviderRejected, "score outside [0, 100]",
                {{"value", std::isfinite(value) ? json(value) : json("non-finite")}, {"provider", provider}});
  }
}

}  // namespace

ScriptedProvider::ScriptedProvider(std::vector<std::optional<double>> script, std::string provider_id)
    : script_(std::move(script)), id_(std::move(provider_id)) {
  if (script_.empty()) throw Error(ErrorCode::kInvalidArgument, "scripted provider needs at least one entry");
}

std::shared_ptr<ScriptedProvider> ScriptedProvider::of(std::vector<double> scores) {
  return std::make_shared<ScriptedProvider>(std::vector<std::optional<double>>(scores.begin(), scores.end()));
}

AestheticScore ScriptedProvider::score(const ScoreRequest& request) {
  ++calls_;
  const auto& slot = script_[request.attempt_index % script_.size()];
  if (!slot) {
    throw Error(ErrorCode::kProviderUnavailable, "scripted outage", {{"attempt", request.attempt_index}});
  }
  check_range(*slot, id_);
  return {*slot, id_, Timestamp{}, false};
}

double fallback_formula(double symmetry, double curvature) {
  const double bonus = std::clamp(curvature / kFallbackCurvatureRef, 0.0, 1.0);
  return 100.0 * (kFallbackSymmetryWeight * symmetry + kFallbackCurvatureWeight * bonus);
}

namespace {

double mirror_similarity(const Image& image) {
  const int w = image.width();
  double diff = 0.0;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const auto* a = image.pixel(x, y);
      const auto* b = image.pixel(w - 1 - x, y);
      for (int c = 0; c < Image::kChannels; ++c) diff += std::abs(static_cast<int>(a[c]) - static_cast<int>(b[c]));
    }
  }
  return 1.0 - diff / (255.0 * static_cast<double>(image.bytes().size()));
}

double fallback_value(const Image& image, const LandmarkIndexMap& idx) {
  try {
    const LandmarkSet lm = extract_face_card_landmarks(image, idx);
    return std::clamp(fallback_formula(symmetry_score(lm, idx), smile_curvature(lm, idx)), 0.0, 100.0);
  } catch (const Error&) {
    if (image.empty()) return 0.0;
    return std::clamp(100.0 * kFallbackSymmetryWeight * mirror_similarity(image), 0.0, 100.0);
  }
}

}  // namespace

AestheticScore local_fallback_score(const Image& image, const LandmarkIndexMap& idx) {
  return {fallback_value(image, idx), kFallbackProviderId, now_utc(), true};
}

AestheticScore LocalFallbackScorer::score(const ScoreRequest& request) {
  return {fallback_value(request.image, idx_), kFallbackProviderId, clock_ ? clock_() : now_utc(), true};
}

// ---------------------------------------------------------------------------
// Transcripts

namespace {

constexpr const char* kTranscriptFormat = "score-transcript";
constexpr int kTranscriptVersion = 1;

std::string digest_key(const Image& image) { return to_hex(image_digest(image)); }

}  // namespace

RecordingProvider::RecordingProvider(std::shared_ptr<ScoreProvider> inner, const std::string& path)
    : inner_(std::move(inner)), out_(path, std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::kStorageFailure, "cannot open transcript for writing", {{"path", path}});
  out_ << json({{"format", kTranscriptFormat}, {"version", kTranscriptVersion}, {"provider_id", inner_->id()}})
              .dump()
       << '\n';
  out_.flush();
}

AestheticScore RecordingProvider::score(const ScoreRequest& request) {
  const std::string key = digest_key(request.image);
  try {
    AestheticScore s = inner_->score(request);
    std::lock_guard lock(mu_);
    out_ << json({{"digest", key}, {"score", s.to_json()}}).dump() << '\n';
    out_.flush();
    return s;
  } catch (const Error& e) {
    std::lock_guard lock(mu_);
    out_ << json({{"digest", key}, {"error", e.to_json()}}).dump() << '\n';
    out_.flush();
    throw;
  }
}

ReplayProvider::ReplayProvider(const std::string& path) {
  std::istringstream in(read_file_text(path));
  std::string line;
  bool header = false;
  int line_no = 0;
  try {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (!header) {
        if (j.value("format", "") != kTranscriptFormat || j.value("version", 0) != kTranscriptVersion) {
          throw Error(ErrorCode::kMalformedDocument, "not a score transcript", {{"path", path}});
        }
        id_ = j.value("provider_id", id_);
        header = true;
        continue;
      }
      auto& queue = outcomes_[j.at("digest").get<std::string>()];
      if (j.contains("score")) {
        queue.emplace_back(AestheticScore::from_json(j.at("score")));
      } else {
        const json& e = j.at("error");
        queue.emplace_back(Error(code_from_name(e.at("code").get<std::string>()),
                                 e.at("message").get<std::string>(), e.value("details", json::object())));
      }
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad transcript: ") + ex.what(),
                {{"path", path}, {"line", line_no}});
  }
  if (!header) throw Error(ErrorCode::kMalformedDocument, "empty transcript", {{"path", path}});
}

AestheticScore ReplayProvider::score(const ScoreRequest& request) {
  std::unique_lock lock(mu_);
  auto it = outcomes_.find(digest_key(request.image));
  if (it == outcomes_.end() || it->second.empty()) {
    throw Error(ErrorCode::kProviderUnavailable, "image not present in transcript",
                {{"candidate_id", request.candidate_id}});
  }
  Outcome outcome = std::move(it->second.front());
  it->second.pop_front();
  lock.unlock();
  if (auto* e = std::get_if<Error>(&outcome)) throw *e;
  return std::get<AestheticScore>(outcome);
}

// ---------------------------------------------------------------------------
// Gate

void GateConfig::validate() const {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, "invalid gate config: " + what, to_json());
  };
  if (!(threshold >= 0.0 && threshold <= 100.0)) fail("threshold must lie in [0, 100]");
  if (required_count < 1) fail("required_count must be at least 1");
  if (max_attempts < required_count) fail("max_attempts must be at least required_count");
  if (magnitude_schedule.empty()) fail("magnitude_schedule must not be empty");
  if (!std::all_of(magnitude_schedule.begin(), magnitude_schedule.end(),
                   [](double m) { return std::isfinite(m); })) {
    fail("magnitude_schedule must be finite");
  }
  if (in_flight < 1) fail("in_flight must be at least 1");
}

json GateConfig::to_json() const {
  return {{"threshold", threshold},
          {"required_count", required_count},
          {"max_attempts", max_attempts},
          {"magnitude_schedule", magnitude_schedule},
          {"fallback_enabled", fallback_enabled},
          {"in_flight", in_flight}};
}

GateConfig GateConfig::merged(const GateConfig& base, const json& overrides) {
  if (!overrides.is_object() && !overrides.is_null()) {
    throw Error(ErrorCode::kInvalidConfig, "gate overrides must be an object");
  }
  GateConfig cfg = base;
  static const std::set<std::string> kKnown = {"threshold",          "required_count", "max_attempts",
                                                "magnitude_schedule", "fallback_enabled", "in_flight"};
  try {
    if (overrides.is_object()) {
      for (const auto& [key, value] : overrides.items()) {
        if (!kKnown.contains(key)) {
          throw Error(ErrorCode::kInvalidConfig, "unknown gate setting", {{"key", key}});
        }
      }
      cfg.threshold = overrides.value("threshold", cfg.threshold);
      cfg.required_count = overrides.value("required_count", cfg.required_count);
      cfg.max_attempts = overrides.value("max_attempts", cfg.max_attempts);
      cfg.magnitude_schedule = overrides.value("magnitude_schedule", cfg.magnitude_schedule);
      cfg.fallback_enabled = overrides.value("fallback_enabled", cfg.fallback_enabled);
      cfg.in_flight = overrides.value("in_flight", cfg.in_flight);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidConfig, std::string("bad gate override: ") + ex.what());
  }
  cfg.validate();
  return cfg;
}

double magnitude_for_attempt(const GateConfig& cfg, std::size_t attempt, std::uint64_t case_seed) {
  const auto& schedule = cfg.magnitude_schedule;
  const double base = schedule[attempt % schedule.size()];
  if (attempt < schedule.size()) return base;
  SplitMix64 rng(case_seed ^ (0xD1B54A32D192ED03ULL * (static_cast<std::uint64_t>(attempt) + 1)));
  return base + (2.0 * rng.uniform() - 1.0) * kScheduleJitter;
}

namespace {

struct Outcome {
  std::optional<AestheticScore> score;
  std::optional<Error> error;
};

Outcome score_once(ScoreProvider& provider, const CandidateImage& c, std::size_t attempt) {
  try {
    return {provider.score({c.pixels, attempt, c.candidate_id}), std::nullopt};
  } catch (const Error& e) {
    return {std::nullopt, e};
  } catch (const std::exception& e) {
    return {std::nullopt, Error(ErrorCode::kProviderUnavailable, e.what())};
  }
}

}  // namespace

GateResult refine_loop(GenerationEngine& engine, const LatentCode& latent, const EditDirection& dir,
                       const GateConfig& cfg, ScoreProvider& provider, const GateContext& ctx) {
  cfg.validate();
  LocalFallbackScorer default_fallback;
  ScoreProvider* fallback = ctx.fallback ? ctx.fallback : &default_fallback;

  GateResult result;
  const auto required = static_cast<std::size_t>(cfg.required_count);
  const auto max_attempts = static_cast<std::size_t>(cfg.max_attempts);
  std::size_t attempt = 0;
  while (result.accepted.size() < required && attempt < max_attempts) {
    if (ctx.cancel && ctx.cancel->cancelled()) {
      throw Error(ErrorCode::kCancelled, "refinement cancelled", {{"attempts", attempt}});
    }
    const std::size_t batch = std::min({static_cast<std::size_t>(cfg.in_flight), max_attempts - attempt,
                                        required - result.accepted.size()});
    std::vector<CandidateImage> candidates;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t a = attempt + i;
      candidates.push_back(engine.generate_edit(latent, dir, magnitude_for_attempt(cfg, a, ctx.case_seed),
                                                make_candidate_id(ctx.case_id, a)));
    }
    std::vector<Outcome> outcomes(batch);
    if (batch == 1) {
      outcomes[0] = score_once(provider, candidates[0], attempt);
    } else {
      std::vector<std::future<Outcome>> futures;
      for (std::size_t i = 0; i < batch; ++i) {
        futures.push_back(std::async(std::launch::async, [&, i] {
          return score_once(provider, candidates[i], attempt + i);
        }));
      }
      for (std::size_t i = 0; i < batch; ++i) outcomes[i] = futures[i].get();
    }

    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t a = attempt + i;
      Outcome& o = outcomes[i];
      if (!o.score) {
        ++result.provider_failures;
        if (!cfg.fallback_enabled) {
          throw Error(ErrorCode::kProviderUnavailable, "scoring provider failed and fallback is disabled",
                      {{"attempt", a}, {"cause", o.error->to_json()}});
        }
        o.score = fallback->score({candidates[i].pixels, a, candidates[i].candidate_id});
      }
      if (o.score->value >= cfg.threshold) {
        result.accepted.push_back({std::move(candidates[i]), *o.score, a});
      } else {
        ++result.rejected_count;
      }
    }
    attempt += batch;
    result.attempts_used = static_cast<int>(attempt);
  }
  if (result.accepted.size() < required) {
    throw Error(ErrorCode::kInsufficientCandidates, "not enough candidates met the threshold",
                {{"found", result.accepted.size()}, {"attempts", result.attempts_used}});
  }
  return result;
}

}  // namespace smile
