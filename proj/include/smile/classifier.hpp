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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smile/dataset.hpp"
#include "smile/face_shape.hpp"
#include "smile/landmarks.hpp"

namespace smile {

/// Feature layout:
///   [0..5]   GeometryFeatures in declaration order
///   [6..11]  face_oval chords between ring positions k and n-k,
///            k = round(i*n/14) for i = 1..6, divided by face width
///   [12..17] mean distance from the chin (middle jawline point) to jawline
///            points j and m-1-j, j = round(i*(m/2)/6) for i = 0..5, divided
///            by face height
inline constexpr int kFeatureDim = 18;

std::vector<double> featurize(const LandmarkSet& lm, const LandmarkIndexMap& idx);
const std::vector<std::string>& feature_names();

struct Hyperparams {
  double learning_rate = 0.1;
  double l2 = 1e-3;
  int iterations = 500;
  double init_scale = 0.01;

  nlohmann::json to_json() const;
  static Hyperparams from_json(const nlohmann::json& j);
};

inline constexpr int kModelFormatVersion = 1;

/// Multinomial logistic regression over normalized features. `weights` holds
/// class_count rows of feature_dim + 1 values each, bias last.
struct ClassifierModel {
  int feature_dim = kFeatureDim;
  int class_count = kFaceShapeCount;
  std::vector<double> weights;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::string version = "softmax-v1";
  std::uint64_t train_seed = 0;

  /// All-zero weights with identity normalization.
  static ClassifierModel zero(int feature_dim = kFeatureDim);

  nlohmann::json to_json() const;
  /// Throws MalformedDocument on schema violations or non-finite values.
  static ClassifierModel from_json(const nlohmann::json& j);
  static ClassifierModel load(const std::string& path);
  void save(const std::string& path) const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;
};

struct Classification {
  FaceShapeLabel label = FaceShapeLabel::kOval;
  std::array<double, kFaceShapeCount> probabilities{};
};

/// Throws DimensionMismatch when features.size() != model.feature_dim.
Classification classify(const ClassifierModel& model, std::span<const double> features);

/// Class probabilities for raw logits; stable under adding a constant.
std::array<double, kFaceShapeCount> softmax(std::span<const double, kFaceShapeCount> logits);

using ConfusionMatrix = std::array<std::array<std::size_t, kFaceShapeCount>, kFaceShapeCount>;

struct Evaluation {
  double accuracy = 0.0;
  ConfusionMatrix confusion{};  // [true][predicted]
  std::size_t total = 0;
};

/// Throws EmptyEvaluationSet or InvalidArgument on a size mismatch.
Evaluation evaluate(const ClassifierModel& model, const std::vector<std::vector<double>>& features,
                    const std::vector<FaceShapeLabel>& labels);

/// Mean cross-entropy plus 0.5 * l2 * |W|^2 (biases unpenalized) on already
/// normalized inputs. Fills `gradient` (same layout as weights) when given.
double softmax_loss(std::span<const double> weights, const std::vector<std::vector<double>>& x,
                    const std::vector<FaceShapeLabel>& y, double l2,
                    std::vector<double>* gradient = nullptr);

struct LabeledSample {
  std::vector<double> features;
  FaceShapeLabel label = FaceShapeLabel::kOval;
  std::string source_id;
};

/// Full-batch gradient descent on the given samples. Normalization statistics
/// come from the same samples. Throws NonFiniteLoss when the loss diverges.
/// `loss_trace`, when given, receives the loss before every step.
ClassifierModel fit_softmax(const std::vector<LabeledSample>& samples, const Hyperparams& hp,
                            std::uint64_t seed, std::vector<double>* loss_trace = nullptr);

struct TrainingReport {
  std::vector<double> per_fold_accuracy;
  std::vector<std::size_t> per_fold_count;
  double mean_accuracy = 0.0;
  ConfusionMatrix confusion{};
  Hyperparams hyperparams;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

inline constexpr std::size_t kMinSamplesPerClass = 10;

/// k-fold cross-validation by source followed by a final fit on every
/// sample. Throws ClassUnderrepresented, NonFiniteLoss, InvalidArgument when
/// a sample's source has no fold.
std::pair<ClassifierModel, TrainingReport> train(const std::vector<LabeledSample>& samples,
                                                 const FoldAssignment& folds, const Hyperparams& hp,
                                                 std::uint64_t seed);

/// Model fitted on seeded synthetic template faces; used when no model file
/// is configured.
ClassifierModel reference_model(const LandmarkIndexMap& idx, std::size_t per_class = 40,
                                std::uint64_t seed = 2026);

}  // namespace smile
