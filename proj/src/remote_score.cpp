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

#include <algorithm>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "smile/aesthetic.hpp"

namespace smile {

using nlohmann::json;

TokenBucket::TokenBucket(double rate, double burst, SteadyClock clock, Sleeper sleeper)
    : rate_(rate), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      clock_(clock ? std::move(clock) : SteadyClock([] { return std::chrono::steady_clock::now(); })),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) { std::this_thread::sleep_for(d); })) {
  if (!(rate > 0.0)) throw Error(ErrorCode::kInvalidConfig, "rate limit must be positive");
  last_ = clock_();
}

void TokenBucket::acquire() {
  std::lock_guard lock(mu_);
  for (;;) {
    const auto now = clock_();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const double wait_s = (1.0 - tokens_) / rate_;
    sleeper_(std::chrono::milliseconds(static_cast<long>(std::ceil(wait_s * 1000.0))));
  }
}

BeautyCombine parse_beauty_combine(std::string_view text) {
  if (text == "mean") return BeautyCombine::kMean;
  if (text == "max") return BeautyCombine::kMax;
  if (text == "male") return BeautyCombine::kMale;
  if (text == "female") return BeautyCombine::kFemale;
  throw Error(ErrorCode::kInvalidConfig, "beauty combine must be mean, max, male or female",
              {{"value", std::string(text)}});
}

double parse_beauty_payload(const json& payload, BeautyCombine combine) {
  auto reject = [&](const std::string& why) -> double {
    throw Error(ErrorCode::kProviderRejected, "unusable beauty payload: " + why);
  };
  if (!payload.is_object()) return reject("not an object");
  const json* beauty = &payload;
  if (auto faces = payload.find("faces"); faces != payload.end()) {
    if (!faces->is_array() || faces->empty()) return reject("no face detected");
    const json& face = faces->front();
    if (!face.contains("attributes") || !face["attributes"].contains("beauty")) {
      return reject("face carries no beauty attribute");
    }
    beauty = &face["attributes"]["beauty"];
  } else if (auto b = payload.find("beauty"); b != payload.end()) {
    beauty = &*b;
  }
  if (!beauty->is_object()) return reject("beauty is not an object");

  auto number = [&](const char* key) -> std::optional<double> {
    auto it = beauty->find(key);
    if (it == beauty->end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
  };
  double value = 0.0;
  if (auto s = number("score")) {
    value = *s;
  } else {
    const auto male = number("male_score");
    const auto female = number("female_score");
    switch (combine) {
      case BeautyCombine::kMale:
        if (!male) return reject("male_score missing");
        value = *male;
        break;
      case BeautyCombine::kFemale:
        if (!female) return reject("female_score missing");
        value = *female;
        break;
      case BeautyCombine::kMax:
        if (!male || !female) return reject("male_score or female_score missing");
        value = std::max(*male, *female);
        break;
      case BeautyCombine::kMean:
        if (!male || !female) return reject("male_score or female_score missing");
        value = 0.5 * (*male + *female);
        break;
    }
  }
  if (!(value >= 0.0 && value <= 100.0)) {
    throw Error(ErrorCode::kProviderRejected, "score outside [0, 100]", {{"value", value}});
  }
  return value;
}

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Target split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidConfig, "provider url needs a scheme", {{"url", url}});
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

RemoteScoreClient::RemoteScoreClient(RemoteScoreConfig config, Sleeper sleeper, SteadyClock clock)
    : config_(std::move(config)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) { std::this_thread::sleep_for(d); })),
      bucket_(config_.rate_per_second, config_.burst, std::move(clock), sleeper_) {
  if (config_.url.empty()) throw Error(ErrorCode::kInvalidConfig, "provider url is not configured");
  if (config_.max_retries < 0) throw Error(ErrorCode::kInvalidConfig, "max_retries must be non-negative");
  split_url(config_.url);
}

RemoteScoreClient::~RemoteScoreClient() = default;

RemoteCallStats RemoteScoreClient::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

AestheticScore RemoteScoreClient::score(const ScoreRequest& request) { return score_image(request.image); }

AestheticScore RemoteScoreClient::score_image(const Image& image) {
  const Target target = split_url(config_.url);
  const auto png = encode_png(image);
  const httplib::MultipartFormDataItems form = {
      {"api_key", config_.api_key, "", ""},
      {"api_secret", config_.api_secret, "", ""},
      {"image_file", std::string(png.begin(), png.end()), "candidate.png", "image/png"},
      {"return_attributes", "beauty", "", ""},
  };

  auto bump = [&](std::size_t RemoteCallStats::*field) {
    std::lock_guard lock(stats_mu_);
    ++(stats_.*field);
  };

  ErrorCode last_code = ErrorCode::kProviderUnavailable;
  std::string last_message;
  auto delay = std::chrono::duration<double, std::milli>(config_.backoff_base);
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      bump(&RemoteCallStats::retries);
      sleeper_(std::chrono::milliseconds(static_cast<long>(delay.count())));
      delay *= config_.backoff_factor;
    }
    bucket_.acquire();
    bump(&RemoteCallStats::http_calls);

    httplib::Client client(target.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    auto res = client.Post(target.path, form);
    if (!res) {
      const auto err = res.error();
      last_code = (err == httplib::Error::Read || err == httplib::Error::Write ||
                   err == httplib::Error::ConnectionTimeout)
                      ? ErrorCode::kProviderTimeout
                      : ErrorCode::kProviderUnavailable;
      last_message = "provider request failed: " + httplib::to_string(err);
      continue;
    }
    if (res->status >= 500) {
      last_code = ErrorCode::kProviderUnavailable;
      last_message = "provider returned status " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      bump(&RemoteCallStats::failures);
      throw Error(ErrorCode::kProviderRejected, "provider rejected the request",
                  {{"status", res->status}, {"body", res->body.substr(0, 512)}});
    }
    double value = 0.0;
    try {
      value = parse_beauty_payload(json::parse(res->body), config_.combine);
    } catch (const json::exception& ex) {
      bump(&RemoteCallStats::failures);
      throw Error(ErrorCode::kProviderRejected, std::string("provider sent invalid JSON: ") + ex.what());
    } catch (const Error&) {
      bump(&RemoteCallStats::failures);
      throw;
    }
    bump(&RemoteCallStats::successes);
    return {value, config_.provider_id, now_utc(), false};
  }
  bump(&RemoteCallStats::failures);
  throw Error(last_code, last_message, {{"attempts", config_.max_retries + 1}});
}

}  // namespace smile
