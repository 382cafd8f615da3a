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

#include "smile/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "smile/error.hpp"
#include "smile/face_template.hpp"
#include "smile/geometry.hpp"

namespace smile {

using nlohmann::json;

namespace {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::size_t row_stride(int feature_dim) { return static_cast<std::size_t>(feature_dim) + 1; }

}  // namespace

std::vector<double> featurize(const LandmarkSet& lm, const LandmarkIndexMap& idx) {
  const GeometryFeatures g = derive_features(lm, idx);
  const FaceExtent extent = face_extent(lm, idx);
  std::vector<double> out;
  out.reserve(kFeatureDim);
  for (double v : g.as_array()) out.push_back(v);

  const auto& oval = idx.face_oval();
  const long n = static_cast<long>(oval.size());
  for (int i = 1; i <= 6; ++i) {
    const long k = std::lround(static_cast<double>(i) * static_cast<double>(n) / 14.0);
    const Point2 a = pixel_point(lm, oval[static_cast<std::size_t>(k % n)]);
    const Point2 b = pixel_point(lm, oval[static_cast<std::size_t>((n - k) % n)]);
    out.push_back(distance(a, b) / extent.width);
  }

  const auto& jaw = idx.jawline();
  const std::size_t m = jaw.size();
  const Point2 chin = pixel_point(lm, jaw[m / 2]);
  for (int i = 0; i < 6; ++i) {
    const auto j = static_cast<std::size_t>(
        std::lround(static_cast<double>(i) * static_cast<double>(m / 2) / 6.0));
    const double d = 0.5 * (distance(chin, pixel_point(lm, jaw[j])) +
                            distance(chin, pixel_point(lm, jaw[m - 1 - j])));
    out.push_back(d / extent.height);
  }
  return out;
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {"face_width_height_ratio", "jaw_width_ratio", "chin_angle_deg",
                                  "smile_curvature",         "mouth_width_ratio", "symmetry_score"};
    for (int i = 1; i <= 6; ++i) v.push_back("oval_chord_" + std::to_string(i));
    for (int i = 0; i < 6; ++i) v.push_back("chin_reach_" + std::to_string(i));
    return v;
  }();
  return names;
}

json Hyperparams::to_json() const {
  return {{"learning_rate", learning_rate}, {"l2", l2}, {"iterations", iterations},
          {"init_scale", init_scale}};
}

Hyperparams Hyperparams::from_json(const json& j) {
  Hyperparams hp;
  hp.learning_rate = j.value("learning_rate", hp.learning_rate);
  hp.l2 = j.value("l2", hp.l2);
  hp.iterations = j.value("iterations", hp.iterations);
  hp.init_scale = j.value("init_scale", hp.init_scale);
  if (!(hp.learning_rate > 0.0) || !(hp.l2 >= 0.0) || hp.iterations < 0 || !(hp.init_scale >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid classifier hyperparameters", hp.to_json());
  }
  return hp;
}

ClassifierModel ClassifierModel::zero(int feature_dim) {
  ClassifierModel m;
  m.feature_dim = feature_dim;
  m.weights.assign(static_cast<std::size_t>(m.class_count) * row_stride(feature_dim), 0.0);
  m.mean.assign(static_cast<std::size_t>(feature_dim), 0.0);
  m.stddev.assign(static_cast<std::size_t>(feature_dim), 1.0);
  return m;
}

json ClassifierModel::to_json() const {
  json classes = json::array();
  for (auto label : kAllFaceShapes) classes.push_back(std::string(to_string(label)));
  return {{"format", "smile-classifier"},
          {"format_version", kModelFormatVersion},
          {"model_version", version},
          {"taxonomy_version", kFaceShapeTaxonomyVersion},
          {"classes", classes},
          {"feature_dim", feature_dim},
          {"feature_names", feature_dim == kFeatureDim ? json(feature_names()) : json::array()},
          {"normalization", {{"mean", mean}, {"stddev", stddev}}},
          {"weights", weights},
          {"train_seed", train_seed}};
}

ClassifierModel ClassifierModel::from_json(const json& j) {
  try {
    if (j.at("format") != "smile-classifier" || j.at("format_version") != kModelFormatVersion) {
      throw Error(ErrorCode::kMalformedDocument, "not a version 1 classifier model");
    }
    if (j.at("taxonomy_version") != kFaceShapeTaxonomyVersion) {
      throw Error(ErrorCode::kMalformedDocument, "model uses a different face-shape taxonomy");
    }
    ClassifierModel m;
    m.version = j.at("model_version").get<std::string>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.class_count = static_cast<int>(j.at("classes").size());
    m.mean = j.at("normalization").at("mean").get<std::vector<double>>();
    m.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();
    const auto dim = static_cast<std::size_t>(m.feature_dim);
    if (m.class_count != kFaceShapeCount || m.feature_dim <= 0 || m.mean.size() != dim ||
        m.stddev.size() != dim || m.weights.size() != static_cast<std::size_t>(m.class_count) * (dim + 1)) {
      throw Error(ErrorCode::kMalformedDocument, "classifier model dimensions are inconsistent");
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(m.weights.begin(), m.weights.end(), finite) ||
        !std::all_of(m.mean.begin(), m.mean.end(), finite) ||
        !std::all_of(m.stddev.begin(), m.stddev.end(), [](double v) { return std::isfinite(v) && v > 0.0; })) {
      throw Error(ErrorCode::kMalformedDocument, "classifier model holds invalid numbers");
    }
    return m;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad classifier model: ") + ex.what());
  }
}

ClassifierModel ClassifierModel::load(const std::string& path) {
  try {
    return from_json(json::parse(read_file_text(path)));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::kMalformedDocument, std::string("bad classifier model: ") + ex.what());
  }
}

void ClassifierModel::save(const std::string& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

std::array<double, kFaceShapeCount> softmax(std::span<const double, kFaceShapeCount> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::array<double, kFaceShapeCount> p{};
  double sum = 0.0;
  for (int c = 0; c < kFaceShapeCount; ++c) {
    p[c] = std::exp(logits[c] - top);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

Classification classify(const ClassifierModel& model, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(model.feature_dim)) {
    throw Error(ErrorCode::kDimensionMismatch, "feature vector has the wrong length",
                {{"expected", model.feature_dim}, {"actual", features.size()}});
  }
  const std::size_t stride = row_stride(model.feature_dim);
  std::array<double, kFaceShapeCount> logits{};
  for (std::size_t c = 0; c < kFaceShapeCount; ++c) {
    const double* w = model.weights.data() + c * stride;
    double z = w[model.feature_dim];
    for (std::size_t f = 0; f < features.size(); ++f) {
      z += w[f] * (features[f] - model.mean[f]) / model.stddev[f];
    }
    logits[c] = z;
  }
  Classification out;
  out.probabilities = softmax(logits);
  // Strict comparison keeps the earliest label on ties.
  int best = 0;
  for (int c = 1; c < kFaceShapeCount; ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  out.label = kAllFaceShapes[static_cast<std::size_t>(best)];
  return out;
}

Evaluation evaluate(const ClassifierModel& model, const std::vector<std::vector<double>>& features,
                    const std::vector<FaceShapeLabel>& labels) {
  if (features.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "nothing to evaluate");
  if (features.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument, "features and labels differ in length");
  }
  Evaluation e;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FaceShapeLabel predicted = classify(model, features[i]).label;
    ++e.confusion[static_cast<std::size_t>(index_of(labels[i]))][static_cast<std::size_t>(index_of(predicted))];
    if (predicted == labels[i]) ++correct;
  }
  e.total = features.size();
  e.accuracy = static_cast<double>(correct) / static_cast<double>(e.total);
  return e;
}

double softmax_loss(std::span<const double> weights, const std::vector<std::vector<double>>& x,
                    const std::vector<FaceShapeLabel>& y, double l2, std::vector<double>* gradient) {
  if (x.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "no training samples");
  const std::size_t dim = x.front().size();
  const std::size_t stride = dim + 1;
  if (weights.size() != kFaceShapeCount * stride || y.size() != x.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "weights, samples and labels disagree in shape");
  }
  if (gradient) gradient->assign(weights.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(x.size());
  double loss = 0.0;
  std::array<double, kFaceShapeCount> logits{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& xi = x[i];
    for (std::size_t c = 0; c < kFaceShapeCount; ++c) {
      const double* w = weights.data() + c * stride;
      double z = w[dim];
      for (std::size_t f = 0; f < dim; ++f) z += w[f] * xi[f];
      logits[c] = z;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - top);
    const auto target = static_cast<std::size_t>(index_of(y[i]));
    loss += (top + std::log(sum) - logits[target]) * inv_n;
    if (gradient) {
      for (std::size_t c = 0; c < kFaceShapeCount; ++c) {
        const double residual = (std::exp(logits[c] - top) / sum - (c == target ? 1.0 : 0.0)) * inv_n;
        double* g = gradient->data() + c * stride;
        for (std::size_t f = 0; f < dim; ++f) g[f] += residual * xi[f];
        g[dim] += residual;
      }
    }
  }
  for (std::size_t c = 0; c < kFaceShapeCount; ++c) {
    for (std::size_t f = 0; f < dim; ++f) {
      const double w = weights[c * stride + f];
      loss += 0.5 * l2 * w * w;
      if (gradient) (*gradient)[c * stride + f] += l2 * w;
    }
  }
  return loss;
}

ClassifierModel fit_softmax(const std::vector<LabeledSample>& samples, const Hyperparams& hp,
                            std::uint64_t seed, std::vector<double>* loss_trace) {
  if (samples.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "no training samples");
  const std::size_t dim = samples.front().features.size();
  for (const auto& s : samples) {
    if (s.features.size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "training samples differ in feature length");
    }
  }
  ClassifierModel model = ClassifierModel::zero(static_cast<int>(dim));
  model.train_seed = seed;

  const double n = static_cast<double>(samples.size());
  for (std::size_t f = 0; f < dim; ++f) {
    double mean = 0.0;
    for (const auto& s : samples) mean += s.features[f];
    mean /= n;
    double var = 0.0;
    for (const auto& s : samples) var += (s.features[f] - mean) * (s.features[f] - mean);
    const double sd = std::sqrt(var / n);
    model.mean[f] = mean;
    model.stddev[f] = sd > 1e-12 ? sd : 1.0;
  }
  std::vector<std::vector<double>> x;
  std::vector<FaceShapeLabel> y;
  x.reserve(samples.size());
  for (const auto& s : samples) {
    std::vector<double> row(dim);
    for (std::size_t f = 0; f < dim; ++f) row[f] = (s.features[f] - model.mean[f]) / model.stddev[f];
    x.push_back(std::move(row));
    y.push_back(s.label);
  }

  SplitMix64 rng(seed);
  for (auto& w : model.weights) w = hp.init_scale * (2.0 * rng.uniform() - 1.0);

  std::vector<double> grad;
  for (int it = 0; it < hp.iterations; ++it) {
    const double loss = softmax_loss(model.weights, x, y, hp.l2, &grad);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss, "training loss diverged",
                  {{"iteration", it}, {"hyperparams", hp.to_json()}});
    }
    if (loss_trace) loss_trace->push_back(loss);
    for (std::size_t i = 0; i < grad.size(); ++i) model.weights[i] -= hp.learning_rate * grad[i];
  }
  for (double w : model.weights) {
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::kNonFiniteLoss, "training produced non-finite weights",
                  {{"hyperparams", hp.to_json()}});
    }
  }
  return model;
}

json TrainingReport::to_json() const {
  json conf = json::array();
  for (const auto& row : confusion) conf.push_back(row);
  return {{"per_fold_accuracy", per_fold_accuracy},
          {"per_fold_count", per_fold_count},
          {"mean_accuracy", mean_accuracy},
          {"confusion", conf},
          {"hyperparams", hyperparams.to_json()},
          {"seed", seed}};
}

std::pair<ClassifierModel, TrainingReport> train(const std::vector<LabeledSample>& samples,
                                                 const FoldAssignment& folds, const Hyperparams& hp,
                                                 std::uint64_t seed) {
  std::array<std::size_t, kFaceShapeCount> counts{};
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(index_of(s.label))];
  for (auto label : kAllFaceShapes) {
    const std::size_t c = counts[static_cast<std::size_t>(index_of(label))];
    if (c < kMinSamplesPerClass) {
      throw Error(ErrorCode::kClassUnderrepresented, "too few samples for a class",
                  {{"label", std::string(to_string(label))}, {"count", c},
                   {"minimum", kMinSamplesPerClass}});
    }
  }
  std::vector<int> fold_of(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto it = folds.assignment.find(samples[i].source_id);
    if (it == folds.assignment.end()) {
      throw Error(ErrorCode::kInvalidArgument, "sample source has no fold",
                  {{"source_id", samples[i].source_id}});
    }
    fold_of[i] = it->second;
  }

  TrainingReport report;
  report.hyperparams = hp;
  report.seed = seed;
  for (int k = 0; k < folds.k; ++k) {
    std::vector<LabeledSample> train_set;
    std::vector<std::vector<double>> val_x;
    std::vector<FaceShapeLabel> val_y;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (fold_of[i] == k) {
        val_x.push_back(samples[i].features);
        val_y.push_back(samples[i].label);
      } else {
        train_set.push_back(samples[i]);
      }
    }
    if (val_x.empty() || train_set.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "fold has no validation or training samples", {{"fold", k}});
    }
    const ClassifierModel fold_model = fit_softmax(train_set, hp, seed + static_cast<std::uint64_t>(k) + 1);
    const Evaluation e = evaluate(fold_model, val_x, val_y);
    report.per_fold_accuracy.push_back(e.accuracy);
    report.per_fold_count.push_back(e.total);
    for (std::size_t t = 0; t < kFaceShapeCount; ++t) {
      for (std::size_t p = 0; p < kFaceShapeCount; ++p) report.confusion[t][p] += e.confusion[t][p];
    }
  }
  double sum = 0.0;
  for (double a : report.per_fold_accuracy) sum += a;
  report.mean_accuracy = sum / static_cast<double>(report.per_fold_accuracy.size());
  return {fit_softmax(samples, hp, seed), report};
}

ClassifierModel reference_model(const LandmarkIndexMap& idx, std::size_t per_class, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<LabeledSample> samples;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (auto label : kAllFaceShapes) {
      const FaceTemplate t = synthetic_face(label, rng, 512, 512);
      samples.push_back({featurize(t.landmarks(idx), idx), label, {}});
    }
  }
  ClassifierModel m = fit_softmax(samples, Hyperparams{}, seed);
  m.version = "softmax-v1-synthetic-reference";
  return m;
}

}  // namespace smile
