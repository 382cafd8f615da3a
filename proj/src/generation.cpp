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

#include "smile/generation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "smile/error.hpp"
#include "smile/face_card.hpp"
#include "smile/util.hpp"

namespace smile {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSmileDirectionSeed = 0x5EED5A11EULL;
constexpr std::uint64_t kShapeAxesSeed = 0xFACE0A7E5ULL;
constexpr std::uint64_t kEncodeSalt = 0x9E3779B97F4A7C15ULL;
constexpr int kShapeAxisCount = 5;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (auto& x : v) x /= n;
}

void check_same_space(const LatentCode& latent, const EditDirection& dir) {
  if (latent.space_tag != dir.space_tag) {
    throw Error(ErrorCode::kSpaceMismatch, "latent and direction live in different spaces",
                {{"latent", latent.space_tag}, {"direction", dir.space_tag}});
  }
  if (latent.vector.size() != dir.direction.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "latent and direction differ in length",
                {{"latent", latent.vector.size()}, {"direction", dir.direction.size()}});
  }
}

}  // namespace

EditDirection EditDirection::make(std::string attribute, std::vector<double> raw, std::string space_tag) {
  if (raw.empty() || !std::all_of(raw.begin(), raw.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kInvalidArgument, "edit direction must be a non-empty finite vector");
  }
  const double norm = std::sqrt(dot(raw, raw));
  if (!(norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "edit direction has zero length");
  for (auto& v : raw) v /= norm;
  return {std::move(attribute), std::move(raw), std::move(space_tag)};
}

LatentCode edit(const LatentCode& latent, const EditDirection& dir, double magnitude) {
  check_same_space(latent, dir);
  LatentCode out = latent;
  for (std::size_t i = 0; i < out.vector.size(); ++i) out.vector[i] += magnitude * dir.direction[i];
  return out;
}

double project(const LatentCode& latent, const EditDirection& dir) {
  check_same_space(latent, dir);
  return dot(latent.vector, dir.direction);
}

json direction_to_json(const EditDirection& dir) {
  return {{"format", "edit-direction"},
          {"version", kDirectionFormatVersion},
          {"attribute", dir.attribute},
          {"space_tag", dir.space_tag},
          {"dim", dir.direction.size()},
          {"direction", dir.direction}};
}

EditDirection direction_from_json(const json& j) {
  try {
    if (j.at("format") != "edit-direction" || j.at("version") != kDirectionFormatVersion) {
      throw Error(ErrorCode::kMalformedDocument, "not a version 1 edit-direction document");
    }
    auto v = j.at("direction").get<std::vector<double>>();
    if (v.size() != j.at("dim").get<std::size_t>()) {
      throw Error(ErrorCode::kMalformedDocument, "direction length disagrees with dim");
    }
    return EditDirection::make(j.at("attribute").get<std::string>(), std::move(v),
                               j.at("space_tag").get<std::string>());
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad edit-direction document: ") + ex.what());
  }
}

EditDirection load_direction_file(const std::string& path) {
  try {
    return direction_from_json(json::parse(read_file_text(path)));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad edit-direction document: ") + ex.what());
  }
}

void save_direction_file(const std::string& path, const EditDirection& dir) {
  write_file_atomic(path, direction_to_json(dir).dump() + "\n");
}

json BackendInfo::to_json() const {
  return {{"backend_id", backend_id}, {"D", dim}, {"space_tag", space_tag}, {"single_flight", single_flight}};
}

BackendInfo BackendInfo::from_json(const json& j) {
  BackendInfo info;
  info.backend_id = j.at("backend_id").get<std::string>();
  info.dim = j.at("D").get<int>();
  info.space_tag = j.at("space_tag").get<std::string>();
  info.single_flight = j.value("single_flight", false);
  if (info.dim <= 0) throw Error(ErrorCode::kMalformedDocument, "backend declares a non-positive D");
  return info;
}

const EditDirection& MockBackend::smile_direction(int dim) {
  static std::mutex mu;
  static std::map<int, EditDirection> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(dim);
  if (it == cache.end()) {
    SplitMix64 rng(kSmileDirectionSeed);
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.normal();
    it = cache.emplace(dim, EditDirection::make("smile", std::move(v), kSpaceTag)).first;
  }
  return it->second;
}

MockBackend::MockBackend(int dim, int image_size) : dim_(dim), image_size_(image_size) {
  if (dim < kShapeAxisCount + 1 || image_size < 64) {
    throw Error(ErrorCode::kInvalidArgument, "mock backend needs D > 5 and images of at least 64 px");
  }
  std::vector<std::vector<double>> basis = {smile_direction(dim).direction};
  SplitMix64 rng(kShapeAxesSeed);
  for (int k = 0; k < kShapeAxisCount; ++k) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = rng.normal();
    for (const auto& b : basis) {
      const double c = dot(v, b);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * b[i];
    }
    normalize(v);
    basis.push_back(v);
    shape_axes_.push_back(std::move(v));
  }
}

BackendInfo MockBackend::info() { return {kBackendId, dim_, kSpaceTag, false}; }

void MockBackend::check_space(const LatentCode& latent) const {
  if (latent.space_tag != kSpaceTag) {
    throw Error(ErrorCode::kSpaceMismatch, "latent is not in the mock space",
                {{"expected", kSpaceTag}, {"actual", latent.space_tag}});
  }
  if (latent.vector.size() != static_cast<std::size_t>(dim_)) {
    throw Error(ErrorCode::kDimensionMismatch, "latent has the wrong dimension",
                {{"expected", dim_}, {"actual", latent.vector.size()}});
  }
}

LatentCode MockBackend::encode(const Image& photo) {
  if (photo.empty()) throw Error(ErrorCode::kEncodeFailure, "cannot encode an empty image");
  SplitMix64 rng(seed_from_digest(image_digest(photo)) ^ kEncodeSalt);
  LatentCode code{std::vector<double>(static_cast<std::size_t>(dim_)), kSpaceTag};
  for (auto& x : code.vector) x = (2.0 * rng.uniform() - 1.0) * std::sqrt(3.0);
  const auto& d = smile_direction(dim_).direction;
  const double target = rng.uniform() - 0.5;
  const double shift = target - dot(code.vector, d);
  for (std::size_t i = 0; i < code.vector.size(); ++i) code.vector[i] += shift * d[i];
  return code;
}

FaceTemplate MockBackend::face_for(const LatentCode& latent) const {
  check_space(latent);
  const double s = dot(latent.vector, smile_direction(dim_).direction);
  std::array<double, kShapeAxisCount> q{};
  for (int k = 0; k < kShapeAxisCount; ++k) q[k] = std::tanh(0.5 * dot(latent.vector, shape_axes_[k]));

  FaceTemplate t;
  t.image_width = image_size_;
  t.image_height = image_size_;
  t.center_x = 0.5 * image_size_;
  t.center_y = 0.5 * image_size_;
  const double aspect = 0.78 + 0.12 * q[0];
  t.half_height = 0.38 * image_size_;
  t.half_width = aspect * t.half_height;
  t.jaw_squareness = 2.5 + 1.0 * q[1];
  t.jaw_taper = 0.8 + 0.15 * q[2];
  t.mouth_width = t.half_width * (0.8 + 0.06 * q[3]);
  t.mouth_y = t.center_y + t.half_height * (0.48 + 0.03 * q[4]);
  t.lip_curvature = std::clamp(kMockCurvatureBase + kMockCurvatureGain * s, -0.8, 0.8);
  return t;
}

Image MockBackend::generate(const LatentCode& latent) {
  for (double v : latent.vector) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kGenerateFailure, "latent holds non-finite values");
  }
  return render_face_card(face_for(latent));
}

std::vector<double> default_magnitude_schedule() {
  constexpr int kCount = 7;
  constexpr double kLow = -1.5, kHigh = 3.0;
  std::vector<double> out;
  for (int i = 0; i < kCount; ++i) out.push_back(kLow + (kHigh - kLow) * i / (kCount - 1));
  return out;
}

std::string make_candidate_id(const std::string& case_id, std::size_t index) {
  return fmt::format("{}-v{:02d}", case_id, index);
}

GenerationEngine::GenerationEngine(std::shared_ptr<GeneratorBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) throw Error(ErrorCode::kBackendUnavailable, "no generator backend configured");
  info_ = backend_->info();
}

LatentCode GenerationEngine::encode(const Image& photo) {
  std::unique_lock lock(flight_, std::defer_lock);
  if (info_.single_flight) lock.lock();
  LatentCode code = backend_->encode(photo);
  if (code.space_tag != info_.space_tag || code.vector.size() != static_cast<std::size_t>(info_.dim)) {
    throw Error(ErrorCode::kEncodeFailure, "backend returned a latent outside its declared space");
  }
  return code;
}

CandidateImage GenerationEngine::generate(const LatentCode& latent, double magnitude, std::string candidate_id) {
  if (latent.space_tag != info_.space_tag) {
    throw Error(ErrorCode::kSpaceMismatch, "latent does not belong to the backend space",
                {{"expected", info_.space_tag}, {"actual", latent.space_tag}});
  }
  std::unique_lock lock(flight_, std::defer_lock);
  if (info_.single_flight) lock.lock();
  Image pixels = backend_->generate(latent);
  if (pixels.empty()) throw Error(ErrorCode::kGenerateFailure, "backend returned an empty image");
  return {std::move(pixels), latent, magnitude, info_.backend_id, std::move(candidate_id)};
}

CandidateImage GenerationEngine::generate_edit(const LatentCode& latent, const EditDirection& dir,
                                               double magnitude, std::string candidate_id) {
  return generate(edit(latent, dir, magnitude), magnitude, std::move(candidate_id));
}

std::vector<CandidateImage> GenerationEngine::variant_sweep(const LatentCode& latent, const EditDirection& dir,
                                                            std::span<const double> magnitudes,
                                                            const std::string& case_id) {
  if (magnitudes.empty()) throw Error(ErrorCode::kInvalidArgument, "magnitude list is empty");
  std::vector<CandidateImage> out;
  out.reserve(magnitudes.size());
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    out.push_back(generate_edit(latent, dir, magnitudes[i], make_candidate_id(case_id, i)));
  }
  return out;
}

}  // namespace smile
