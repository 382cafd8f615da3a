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

#include <chrono>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smile/face_template.hpp"
#include "smile/image.hpp"

namespace smile {

struct LatentCode {
  std::vector<double> vector;
  std::string space_tag;

  friend bool operator==(const LatentCode&, const LatentCode&) = default;
};

/// Unit-length attribute direction within one latent space.
struct EditDirection {
  std::string attribute = "smile";
  std::vector<double> direction;
  std::string space_tag;

  /// Normalizes `raw` to unit length. Throws InvalidArgument for an empty,
  /// zero or non-finite vector.
  static EditDirection make(std::string attribute, std::vector<double> raw, std::string space_tag);
};

/// latent + magnitude * direction, elementwise.
/// Throws SpaceMismatch when the space tags differ and DimensionMismatch when
/// the lengths differ.
LatentCode edit(const LatentCode& latent, const EditDirection& dir, double magnitude);

/// Dot product of the latent with the direction (same space required).
double project(const LatentCode& latent, const EditDirection& dir);

inline constexpr int kDirectionFormatVersion = 1;

/// {"format": "edit-direction", "version": 1, "attribute", "space_tag",
///  "dim", "direction": [...]}. The stored vector is re-normalized on load.
nlohmann::json direction_to_json(const EditDirection& dir);
EditDirection direction_from_json(const nlohmann::json& j);
EditDirection load_direction_file(const std::string& path);
void save_direction_file(const std::string& path, const EditDirection& dir);

struct CandidateImage {
  Image pixels;
  LatentCode latent;
  double magnitude = 0.0;
  std::string backend_id;
  std::string candidate_id;
};

struct BackendInfo {
  std::string backend_id;
  int dim = 0;
  std::string space_tag;
  bool single_flight = false;

  nlohmann::json to_json() const;
  static BackendInfo from_json(const nlohmann::json& j);
};

/// A generative model runtime: declares its latent space, encodes photos into
/// it and renders latents back to images.
class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;
  virtual BackendInfo info() = 0;
  /// Throws BackendUnavailable or EncodeFailure.
  virtual LatentCode encode(const Image& photo) = 0;
  /// Throws BackendUnavailable, GenerateFailure or SpaceMismatch.
  virtual Image generate(const LatentCode& latent) = 0;
};

/// In-process deterministic backend. Encoding expands the pixel digest into a
/// latent whose component along smile_direction() lies in [-0.5, 0.5];
/// generation renders a face card whose lip curvature is
/// kMockCurvatureBase + kMockCurvatureGain * project(latent, smile_direction()).
class MockBackend : public GeneratorBackend {
 public:
  static constexpr int kDefaultDim = 512;
  static constexpr const char* kSpaceTag = "mock-v1";
  static constexpr const char* kBackendId = "mock-facecard";
  static constexpr double kMockCurvatureBase = 0.1;
  static constexpr double kMockCurvatureGain = 0.1;

  explicit MockBackend(int dim = kDefaultDim, int image_size = 256);

  BackendInfo info() override;
  LatentCode encode(const Image& photo) override;
  Image generate(const LatentCode& latent) override;

  /// Template that generate() renders for `latent`.
  FaceTemplate face_for(const LatentCode& latent) const;

  /// The published smile direction of the mock space.
  static const EditDirection& smile_direction(int dim = kDefaultDim);

 private:
  void check_space(const LatentCode& latent) const;

  int dim_;
  int image_size_;
  std::vector<std::vector<double>> shape_axes_;
};

std::vector<double> default_magnitude_schedule();

/// "<case_id>-v<index>" with the index zero-padded to two digits.
std::string make_candidate_id(const std::string& case_id, std::size_t index);

/// Front door to a backend. Serializes calls when the backend declares
/// single-flight.
class GenerationEngine {
 public:
  explicit GenerationEngine(std::shared_ptr<GeneratorBackend> backend);

  const BackendInfo& info() const { return info_; }
  LatentCode encode(const Image& photo);
  CandidateImage generate(const LatentCode& latent, double magnitude = 0.0,
                          std::string candidate_id = {});
  /// Renders edit(latent, dir, magnitude).
  CandidateImage generate_edit(const LatentCode& latent, const EditDirection& dir, double magnitude,
                               std::string candidate_id);
  /// One candidate per magnitude, in order. Throws InvalidArgument on an
  /// empty list.
  std::vector<CandidateImage> variant_sweep(const LatentCode& latent, const EditDirection& dir,
                                            std::span<const double> magnitudes,
                                            const std::string& case_id);

 private:
  std::shared_ptr<GeneratorBackend> backend_;
  BackendInfo info_;
  std::mutex flight_;
};

/// Client for an out-of-process backend adapter:
///   GET  /info      -> BackendInfo JSON
///   POST /encode    image/png body -> {"space_tag", "vector"}
///   POST /generate  {"space_tag", "vector"} -> image/png body
class HttpBackend : public GeneratorBackend {
 public:
  explicit HttpBackend(std::string base_url,
                       std::chrono::milliseconds timeout = std::chrono::seconds(30));
  ~HttpBackend() override;

  BackendInfo info() override;
  LatentCode encode(const Image& photo) override;
  Image generate(const LatentCode& latent) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Serves `backend` over the adapter contract until stop() is called.
class BackendAdapterServer {
 public:
  explicit BackendAdapterServer(std::shared_ptr<GeneratorBackend> backend);
  ~BackendAdapterServer();

  /// Binds and starts listening on a background thread; returns the port.
  /// Port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace smile
