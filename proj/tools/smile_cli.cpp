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

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smile/aesthetic.hpp"
#include "smile/case.hpp"
#include "smile/classifier.hpp"
#include "smile/dataset.hpp"
#include "smile/error.hpp"
#include "smile/face_card.hpp"
#include "smile/face_template.hpp"
#include "smile/generation.hpp"
#include "smile/image.hpp"
#include "smile/landmarks.hpp"
#include "smile/rest.hpp"
#include "smile/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

fs::path resolve(const fs::path& manifest, const std::string& relative) {
  return manifest.parent_path() / relative;
}

/// Landmarks for a manifest image: a sibling "<stem>.landmarks.json" when
/// present, otherwise measured from the image as a face card.
smile::LandmarkSet landmarks_for(const fs::path& image_path, const smile::LandmarkIndexMap& idx) {
  fs::path doc = image_path;
  doc.replace_extension(".landmarks.json");
  if (fs::exists(doc)) return smile::parse_landmarks(smile::read_file_text(doc.string()));
  return smile::extract_face_card_landmarks(smile::read_image_file(image_path.string()), idx, {},
                                            image_path.stem().string());
}

std::string source_of(const std::string& id) { return id.substr(0, id.find('#')); }

std::vector<smile::LabeledSample> samples_from_manifest(const std::string& manifest_path) {
  const auto& idx = smile::default_index_map();
  const auto manifest = smile::load_manifest(manifest_path);
  std::vector<smile::LabeledSample> samples;
  for (const auto& e : manifest.entries) {
    const auto lm = landmarks_for(resolve(manifest_path, e.path), idx);
    samples.push_back({smile::featurize(lm, idx), e.label, source_of(e.id)});
  }
  return samples;
}

int dataset_curate(const std::string& in, const std::string& out, std::size_t target) {
  const auto curated = smile::curate(smile::load_manifest(in), target);
  smile::save_manifest(out, curated);
  print({{"entries", curated.entries.size()}, {"out", out}});
  return 0;
}

int dataset_augment(const std::string& in, const std::string& out_dir, const std::string& params_file) {
  const auto manifest = smile::load_manifest(in);
  const auto params =
      params_file.empty() ? smile::AugmentParams{} : smile::parse_augment_params(smile::read_file_text(params_file));
  fs::create_directories(out_dir);
  smile::DatasetManifest out;
  std::map<std::string, int> per_op;
  for (const auto& e : manifest.entries) {
    smile::SourceImage src{smile::read_image_file(resolve(in, e.path).string()), e.id, e.label,
                           e.frontal, e.expression_clear};
    for (const auto& s : smile::augment6(src, params)) {
      const std::string tag(smile::to_string(s.op));
      smile::ManifestEntry a = e;
      a.id = e.id + "#" + tag;
      a.path = e.id + "." + tag + ".png";
      smile::write_image_file((fs::path(out_dir) / a.path).string(), s.pixels);
      out.entries.push_back(std::move(a));
      ++per_op[tag];
    }
  }
  smile::save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), out);
  print({{"sources", manifest.entries.size()}, {"samples", out.entries.size()}, {"per_op", per_op}});
  return 0;
}

int dataset_split(const std::string& in, int k, std::uint64_t seed, const std::string& out) {
  std::vector<std::string> ids;
  for (const auto& e : smile::load_manifest(in).entries) {
    const auto src = source_of(e.id);
    if (ids.empty() || std::find(ids.begin(), ids.end(), src) == ids.end()) ids.push_back(src);
  }
  const auto folds = smile::kfold_split(ids, k, seed);
  const json j = folds.to_json();
  if (out.empty()) {
    print(j);
  } else {
    smile::write_file_atomic(out, j.dump(2) + "\n");
    print({{"fold_sizes", folds.fold_sizes()}, {"out", out}});
  }
  return 0;
}

int dataset_merge(const std::string& pub, const std::string& clinical, const std::string& ledger_path,
                  const std::string& out, std::size_t min_clinical, double retire_fraction) {
  smile::PhaseLedger ledger;
  if (!ledger_path.empty() && fs::exists(ledger_path)) {
    ledger = smile::PhaseLedger::from_json(json::parse(smile::read_file_text(ledger_path)));
  }
  const auto merged = smile::merge_and_phase(smile::load_manifest(pub), smile::load_manifest(clinical),
                                             {min_clinical, retire_fraction}, &ledger);
  smile::save_manifest(out, merged);
  if (!ledger_path.empty()) smile::write_file_atomic(ledger_path, ledger.to_json().dump(2) + "\n");
  print({{"entries", merged.entries.size()}, {"retired", ledger.retired.size()}, {"cycles", ledger.cycles}});
  return 0;
}

int classifier_train(const std::string& manifest, const std::string& out, int k, std::uint64_t seed,
                     const std::string& hp_file, const std::string& report_path) {
  const auto samples = samples_from_manifest(manifest);
  std::vector<std::string> sources;
  for (const auto& s : samples) sources.push_back(s.source_id);
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  const auto hp = hp_file.empty() ? smile::Hyperparams{}
                                  : smile::Hyperparams::from_json(json::parse(smile::read_file_text(hp_file)));
  const auto [model, report] = smile::train(samples, smile::kfold_split(sources, k, seed), hp, seed);
  model.save(out);
  if (!report_path.empty()) smile::write_file_atomic(report_path, report.to_json().dump(2) + "\n");
  print(report.to_json());
  return 0;
}

int classifier_eval(const std::string& model_path, const std::string& manifest) {
  const auto model = smile::ClassifierModel::load(model_path);
  std::vector<std::vector<double>> x;
  std::vector<smile::FaceShapeLabel> y;
  for (auto& s : samples_from_manifest(manifest)) {
    x.push_back(std::move(s.features));
    y.push_back(s.label);
  }
  const auto ev = smile::evaluate(model, x, y);
  print({{"accuracy", ev.accuracy}, {"total", ev.total}, {"confusion", ev.confusion}});
  return 0;
}

int classifier_predict(const std::string& model_path, const std::string& landmarks, const std::string& photo) {
  const auto& idx = smile::default_index_map();
  const auto model = model_path.empty() ? smile::reference_model(idx) : smile::ClassifierModel::load(model_path);
  const auto lm = !landmarks.empty() ? smile::parse_landmarks(smile::read_file_text(landmarks))
                                     : smile::extract_face_card_landmarks(smile::read_image_file(photo), idx);
  const auto c = smile::classify(model, smile::featurize(lm, idx));
  json probs = json::object();
  for (auto label : smile::kAllFaceShapes) {
    probs[std::string(smile::to_string(label))] = c.probabilities[static_cast<std::size_t>(smile::index_of(label))];
  }
  const auto f = smile::derive_features(lm, idx);
  print({{"label", std::string(smile::to_string(c.label))},
         {"probabilities", probs},
         {"features",
          {{"face_width_height_ratio", f.face_width_height_ratio},
           {"jaw_width_ratio", f.jaw_width_ratio},
           {"chin_angle_deg", f.chin_angle_deg},
           {"smile_curvature", f.smile_curvature},
           {"mouth_width_ratio", f.mouth_width_ratio},
           {"symmetry_score", f.symmetry_score}}}});
  return 0;
}

int synth_corpus(const std::string& out_dir, int per_class, std::uint64_t seed, int size, bool with_landmarks) {
  const auto& idx = smile::default_index_map();
  fs::create_directories(out_dir);
  smile::SplitMix64 rng(seed);
  smile::DatasetManifest manifest;
  const auto created = smile::parse_timestamp("2026-01-01T00:00:00Z");
  for (auto label : smile::kAllFaceShapes) {
    for (int i = 0; i < per_class; ++i) {
      const auto face = smile::synthetic_face(label, rng, size, size);
      smile::ManifestEntry e;
      e.id = std::string(smile::to_string(label)) + "-" + std::to_string(i);
      e.path = e.id + ".png";
      e.label = label;
      e.frontal = true;
      e.expression_clear = true;
      e.created_at = created;
      smile::write_image_file((fs::path(out_dir) / e.path).string(), smile::render_face_card(face));
      if (with_landmarks) {
        smile::write_file_atomic((fs::path(out_dir) / (e.id + ".landmarks.json")).string(),
                                 smile::serialize_landmarks(face.landmarks(idx, e.id)));
      }
      manifest.entries.push_back(std::move(e));
    }
  }
  smile::save_manifest((fs::path(out_dir) / "manifest.jsonl").string(), manifest);
  print({{"entries", manifest.entries.size()}, {"out_dir", out_dir}});
  return 0;
}

int synth_photo(const std::string& out, const std::string& shape, int width, int height, std::uint64_t seed,
                const std::string& landmarks_out) {
  smile::SplitMix64 rng(seed);
  const auto face = smile::synthetic_face(smile::parse_face_shape(shape), rng, width, height);
  smile::write_image_file(out, smile::render_face_card(face));
  if (!landmarks_out.empty()) {
    smile::write_file_atomic(landmarks_out, smile::serialize_landmarks(face.landmarks(smile::default_index_map())));
  }
  print({{"out", out}, {"width", width}, {"height", height}, {"shape", shape}});
  return 0;
}

int serve(const std::optional<std::string>& config_file, bool offline) {
  const auto cfg = smile::ServiceConfig::load(config_file);
  smile::ServiceOptions opts;
  opts.gate_defaults = cfg.gate;
  opts.workers = cfg.workers;
  opts.min_photo_width = opts.min_photo_height = cfg.min_photo;
  smile::CaseService service(smile::make_service_deps(cfg, offline), opts);
  smile::RestServer server(service, {cfg.api_token, cfg.ui_dir, true});
  std::cerr << "listening on " << cfg.host << ":" << cfg.port << "\n";
  server.listen(cfg.host, cfg.port);
  return 0;
}

struct CaseRunArgs {
  std::string photo;
  std::string landmarks;
  std::string store;
  std::optional<std::string> config;
  bool offline = false;
  std::optional<double> threshold;
  std::optional<int> required;
  std::optional<int> max_attempts;
};

int case_run(const CaseRunArgs& a) {
  auto cfg = smile::ServiceConfig::load(a.config);
  if (!a.store.empty()) cfg.store_path = a.store;
  smile::ServiceOptions opts;
  opts.gate_defaults = cfg.gate;
  opts.workers = 0;
  opts.min_photo_width = opts.min_photo_height = cfg.min_photo;
  smile::CaseService service(smile::make_service_deps(cfg, a.offline), opts);

  json gate = json::object();
  if (a.threshold) gate["threshold"] = *a.threshold;
  if (a.required) gate["required_count"] = *a.required;
  if (a.max_attempts) gate["max_attempts"] = *a.max_attempts;
  const auto created = service.create_case({{"gate_config", gate}});
  std::optional<std::string> landmarks;
  if (!a.landmarks.empty()) landmarks = smile::read_file_text(a.landmarks);
  service.upload_photo(created.case_id, smile::read_file_bytes(a.photo), landmarks);
  service.run_pipeline(created.case_id);
  service.wait_idle();
  const auto c = service.get_case(created.case_id);
  json view = c.to_view();
  view["store"] = cfg.store_path;
  print(view);
  return c.state == smile::CaseState::kAwaitingSelection ? 0 : 1;
}

int case_export(const std::string& store, const std::string& out_dir) {
  smile::FileCaseStore s(store);
  const auto manifest = smile::export_consented(s, out_dir.empty() ? std::nullopt : std::optional(out_dir));
  if (out_dir.empty()) {
    std::cout << smile::serialize_manifest(manifest);
  } else {
    print({{"entries", manifest.entries.size()}, {"out_dir", out_dir}});
  }
  return 0;
}

int serve_mock_backend(const std::string& host, int port) {
  smile::BackendAdapterServer server(std::make_shared<smile::MockBackend>());
  std::cerr << "mock backend on " << host << ":" << port << "\n";
  server.listen(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smile: facial analysis, smile design generation and case management"};
  app.require_subcommand(1);
  std::function<int()> action;

  auto* dataset = app.add_subcommand("dataset", "Curate, augment, split and merge image manifests");
  dataset->require_subcommand(1);
  std::string in, out, out_dir, params_file, ledger, clinical;
  std::size_t target = smile::kDefaultCurationTarget, min_clinical = 3000;
  double retire_fraction = 0.2;
  int k = 5;
  std::uint64_t seed = 2026;

  auto* curate = dataset->add_subcommand("curate", "Keep frontal, clear-expression entries");
  curate->add_option("--manifest", in, "Input manifest (JSONL)")->required()->check(CLI::ExistingFile);
  curate->add_option("--out", out, "Output manifest")->required();
  curate->add_option("--target-count", target, "Entries to keep")->capture_default_str();
  curate->callback([&] { action = [&] { return dataset_curate(in, out, target); }; });

  auto* augment = dataset->add_subcommand("augment", "Write the six augmented variants of every entry");
  augment->add_option("--manifest", in)->required()->check(CLI::ExistingFile);
  augment->add_option("--out-dir", out_dir)->required();
  augment->add_option("--params-file", params_file, "JSON brightness/contrast parameters");
  augment->callback([&] { action = [&] { return dataset_augment(in, out_dir, params_file); }; });

  auto* split = dataset->add_subcommand("split", "Assign sources to k folds");
  split->add_option("--manifest", in)->required()->check(CLI::ExistingFile);
  split->add_option("--k", k)->capture_default_str();
  split->add_option("--seed", seed)->capture_default_str();
  split->add_option("--out", out, "Fold assignment JSON (stdout when omitted)");
  split->callback([&] { action = [&] { return dataset_split(in, k, seed, out); }; });

  auto* merge = dataset->add_subcommand("merge", "Merge consented clinical entries and phase out public ones");
  merge->add_option("--public", in)->required()->check(CLI::ExistingFile);
  merge->add_option("--clinical", clinical)->required()->check(CLI::ExistingFile);
  merge->add_option("--ledger", ledger, "Phase ledger JSON, read and updated");
  merge->add_option("--out", out)->required();
  merge->add_option("--min-clinical", min_clinical)->capture_default_str();
  merge->add_option("--retire-fraction", retire_fraction)->capture_default_str();
  merge->callback([&] {
    action = [&] { return dataset_merge(in, clinical, ledger, out, min_clinical, retire_fraction); };
  });

  auto* classifier = app.add_subcommand("classifier", "Train, evaluate and apply the face-shape model");
  classifier->require_subcommand(1);
  std::string model, hp_file, report, landmarks, photo;
  auto* train = classifier->add_subcommand("train", "Cross-validate and fit on a manifest");
  train->add_option("--manifest", in)->required()->check(CLI::ExistingFile);
  train->add_option("--out", out, "Model JSON")->required();
  train->add_option("--k", k)->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--hyperparams", hp_file, "Hyperparameter JSON");
  train->add_option("--report", report, "Write the training report here");
  train->callback([&] { action = [&] { return classifier_train(in, out, k, seed, hp_file, report); }; });

  auto* eval = classifier->add_subcommand("eval", "Accuracy and confusion on a manifest");
  eval->add_option("--model", model)->required()->check(CLI::ExistingFile);
  eval->add_option("--manifest", in)->required()->check(CLI::ExistingFile);
  eval->callback([&] { action = [&] { return classifier_eval(model, in); }; });

  auto* predict = classifier->add_subcommand("predict", "Classify one face");
  predict->add_option("--model", model, "Model JSON (reference model when omitted)");
  auto* lm_opt = predict->add_option("--landmarks", landmarks)->check(CLI::ExistingFile);
  auto* photo_opt = predict->add_option("--photo", photo)->check(CLI::ExistingFile);
  lm_opt->excludes(photo_opt);
  predict->callback([&] {
    if (landmarks.empty() && photo.empty()) throw CLI::ValidationError("one of --landmarks or --photo is required");
    action = [&] { return classifier_predict(model, landmarks, photo); };
  });

  auto* synth = app.add_subcommand("synth", "Render synthetic face cards");
  synth->require_subcommand(1);
  int per_class = 20, size = 512, width = 1024, height = 768;
  bool with_landmarks = false;
  std::string shape = "OVAL", landmarks_out;
  auto* corpus = synth->add_subcommand("corpus", "Labelled corpus with a manifest");
  corpus->add_option("--out-dir", out_dir)->required();
  corpus->add_option("--per-class", per_class)->capture_default_str();
  corpus->add_option("--seed", seed)->capture_default_str();
  corpus->add_option("--size", size)->capture_default_str();
  corpus->add_flag("--with-landmarks", with_landmarks, "Write ground-truth landmark documents");
  corpus->callback([&] { action = [&] { return synth_corpus(out_dir, per_class, seed, size, with_landmarks); }; });

  auto* synth_photo_cmd = synth->add_subcommand("photo", "One face-card photo (PNG or JPEG by extension)");
  synth_photo_cmd->add_option("--out", out)->required();
  synth_photo_cmd->add_option("--shape", shape)->capture_default_str();
  synth_photo_cmd->add_option("--width", width)->capture_default_str();
  synth_photo_cmd->add_option("--height", height)->capture_default_str();
  synth_photo_cmd->add_option("--seed", seed)->capture_default_str();
  synth_photo_cmd->add_option("--landmarks-out", landmarks_out, "Write the ground-truth landmark document");
  synth_photo_cmd->callback([&] {
    action = [&] { return synth_photo(out, shape, width, height, seed, landmarks_out); };
  });

  std::optional<std::string> config;
  bool offline = false;
  auto* serve_cmd = app.add_subcommand("serve", "Run the case REST API");
  serve_cmd->add_option("--config", config, "JSON config file (SMILE_* variables override it)");
  serve_cmd->add_flag("--offline", offline, "Mock backend and local fallback scorer");
  serve_cmd->callback([&] { action = [&] { return serve(config, offline); }; });

  auto* case_cmd = app.add_subcommand("case", "Run or export cases without the HTTP layer");
  case_cmd->require_subcommand(1);
  CaseRunArgs run_args;
  auto* run = case_cmd->add_subcommand("run", "Create a case for a photo and run it to candidate selection");
  run->add_option("--photo", run_args.photo)->required()->check(CLI::ExistingFile);
  run->add_option("--landmarks", run_args.landmarks, "Landmark document for the photo")->check(CLI::ExistingFile);
  run->add_option("--store", run_args.store, "Case store directory");
  run->add_option("--config", run_args.config);
  run->add_flag("--offline", run_args.offline, "Mock backend and local fallback scorer");
  run->add_option("--threshold", run_args.threshold);
  run->add_option("--required-count", run_args.required);
  run->add_option("--max-attempts", run_args.max_attempts);
  run->callback([&] { action = [&] { return case_run(run_args); }; });

  std::string store;
  auto* export_cmd = case_cmd->add_subcommand("export", "Manifest of consented, anonymized case photos");
  export_cmd->add_option("--store", store)->required()->check(CLI::ExistingDirectory);
  export_cmd->add_option("--out-dir", out_dir, "Write photos and manifest.jsonl here (stdout when omitted)");
  export_cmd->callback([&] { action = [&] { return case_export(store, out_dir); }; });

  auto* backend = app.add_subcommand("backend", "Generator backend adapters");
  backend->require_subcommand(1);
  std::string host = "127.0.0.1";
  int port = 8090;
  auto* serve_mock = backend->add_subcommand("serve-mock", "Serve the mock backend over HTTP");
  serve_mock->add_option("--host", host)->capture_default_str();
  serve_mock->add_option("--port", port)->capture_default_str();
  serve_mock->callback([&] { action = [&] { return serve_mock_backend(host, port); }; });

  auto* lm_cmd = app.add_subcommand("landmarks", "Landmark documents");
  lm_cmd->require_subcommand(1);
  auto* canon = lm_cmd->add_subcommand("canon", "Validate and print the canonical form");
  canon->add_option("--in", in)->required()->check(CLI::ExistingFile);
  canon->callback([&] {
    action = [&] {
      std::cout << smile::serialize_landmarks(smile::parse_landmarks(smile::read_file_text(in)));
      return 0;
    };
  });
  auto* extract = lm_cmd->add_subcommand("extract", "Measure a face-card photo");
  extract->add_option("--photo", photo)->required()->check(CLI::ExistingFile);
  extract->callback([&] {
    action = [&] {
      std::cout << smile::serialize_landmarks(smile::extract_face_card_landmarks(
          smile::read_image_file(photo), smile::default_index_map(), {}, fs::path(photo).stem().string()));
      return 0;
    };
  });

  CLI11_PARSE(app, argc, argv);
  try {
    return action ? action() : 0;
  } catch (const smile::Error& e) {
    std::cerr << e.to_json().dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
