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

#include "smile/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smile/error.hpp"

namespace smile {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  return p == Provenance::kPublicCorpus ? "PUBLIC_CORPUS" : "CONSENTED_CLINICAL";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "PUBLIC_CORPUS") return Provenance::kPublicCorpus;
  if (text == "CONSENTED_CLINICAL") return Provenance::kConsentedClinical;
  throw Error(ErrorCode::kInvalidArgument, "unknown provenance: " + std::string(text));
}

namespace {

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.id = j.at("id").get<std::string>();
  e.path = j.at("path").get<std::string>();
  e.label = parse_face_shape(j.at("label").get<std::string>());
  e.frontal = j.at("frontal").get<bool>();
  e.expression_clear = j.at("expression_clear").get<bool>();
  e.provenance = parse_provenance(j.at("provenance").get<std::string>());
  e.created_at = parse_timestamp(j.at("created_at").get<std::string>());
  if (auto it = j.find("consent_id"); it != j.end() && !it->is_null()) {
    e.consent_id = it->get<std::string>();
  }
  return e;
}

json entry_to_json(const ManifestEntry& e) {
  json j = json::object();
  j["id"] = e.id;
  j["path"] = e.path;
  j["label"] = std::string(to_string(e.label));
  j["frontal"] = e.frontal;
  j["expression_clear"] = e.expression_clear;
  j["provenance"] = std::string(to_string(e.provenance));
  j["created_at"] = format_timestamp(e.created_at);
  if (!e.consent_id.empty()) j["consent_id"] = e.consent_id;
  return j;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view jsonl) {
  DatasetManifest m;
  std::set<std::string> seen;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ManifestEntry e;
    try {
      e = entry_from_json(json::parse(line));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kMalformedDocument, "bad manifest line: " + std::string(ex.what()),
                  {{"line", line_no}});
    } catch (const Error& ex) {
      throw Error(ErrorCode::kMalformedDocument, "bad manifest line: " + std::string(ex.what()),
                  {{"line", line_no}});
    }
    if (!seen.insert(e.id).second) {
      throw Error(ErrorCode::kDuplicateSource, "duplicate manifest id", {{"id", e.id}, {"line", line_no}});
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) {
    out += entry_to_json(e).dump();
    out += '\n';
  }
  return out;
}

DatasetManifest load_manifest(const std::string& path) { return parse_manifest(read_file_text(path)); }

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  write_file_atomic(path, serialize_manifest(manifest));
}

DatasetManifest curate(const DatasetManifest& manifest, std::size_t target_count) {
  DatasetManifest out;
  for (const auto& e : manifest.entries) {
    if (e.frontal && e.expression_clear) out.entries.push_back(e);
  }
  if (out.entries.size() < target_count) {
    throw Error(ErrorCode::kInsufficientEligible, "not enough eligible entries",
                {{"eligible", out.entries.size()}, {"target_count", target_count}});
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
  out.entries.resize(target_count);
  return out;
}

Image adjust_brightness_contrast(const Image& image, double brightness_delta, double contrast_factor) {
  if (!(contrast_factor > 0.0) || !std::isfinite(brightness_delta)) {
    throw Error(ErrorCode::kInvalidArgument, "contrast factor must be positive and brightness finite");
  }
  std::array<std::uint8_t, 256> lut{};
  for (int v = 0; v < 256; ++v) {
    const double mapped = std::round((v - 128) * contrast_factor + 128 + brightness_delta * 255);
    lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(std::clamp(mapped, 0.0, 255.0));
  }
  Image out = image;
  for (auto& b : out.bytes()) b = lut[b];
  return out;
}

Image hflip(const Image& image) {
  Image out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto* src = image.pixel(image.width() - 1 - x, y);
      std::copy(src, src + Image::kChannels, out.pixel(x, y));
    }
  }
  return out;
}

std::string_view to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::kOrig: return "ORIG";
    case AugmentOp::kBrightUpContrastDown: return "BUCD";
    case AugmentOp::kBrightDownContrastUp: return "BDCU";
    case AugmentOp::kFlipOrig: return "FLIP_ORIG";
    case AugmentOp::kFlipBucd: return "FLIP_BUCD";
    case AugmentOp::kFlipBdcu: return "FLIP_BDCU";
  }
  return "ORIG";
}

AugmentParams parse_augment_params(std::string_view json_text) {
  AugmentParams p;
  try {
    const json j = json::parse(json_text);
    if (auto it = j.find("bucd"); it != j.end()) {
      p.bucd_brightness = it->value("brightness", p.bucd_brightness);
      p.bucd_contrast = it->value("contrast", p.bucd_contrast);
    }
    if (auto it = j.find("bdcu"); it != j.end()) {
      p.bdcu_brightness = it->value("brightness", p.bdcu_brightness);
      p.bdcu_contrast = it->value("contrast", p.bdcu_contrast);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kInvalidConfig, "bad augmentation params: " + std::string(ex.what()));
  }
  if (!(p.bucd_contrast > 0.0) || !(p.bdcu_contrast > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "contrast factors must be positive");
  }
  return p;
}

std::array<AugmentedSample, 6> augment6(const SourceImage& source, const AugmentParams& params) {
  const Image& orig = source.pixels;
  Image bucd = adjust_brightness_contrast(orig, params.bucd_brightness, params.bucd_contrast);
  Image bdcu = adjust_brightness_contrast(orig, params.bdcu_brightness, params.bdcu_contrast);
  Image flip_orig = hflip(orig);
  Image flip_bucd = hflip(bucd);
  Image flip_bdcu = hflip(bdcu);
  auto make = [&](Image pixels, AugmentOp op) {
    return AugmentedSample{std::move(pixels), source.label, source.id, op};
  };
  return {make(orig, AugmentOp::kOrig),
          make(std::move(bucd), AugmentOp::kBrightUpContrastDown),
          make(std::move(bdcu), AugmentOp::kBrightDownContrastUp),
          make(std::move(flip_orig), AugmentOp::kFlipOrig),
          make(std::move(flip_bucd), AugmentOp::kFlipBucd),
          make(std::move(flip_bdcu), AugmentOp::kFlipBdcu)};
}

int FoldAssignment::fold_of(const std::string& source_id) const {
  auto it = assignment.find(source_id);
  if (it == assignment.end()) {
    throw Error(ErrorCode::kNotFound, "source not in fold assignment", {{"source_id", source_id}});
  }
  return it->second;
}

std::vector<std::size_t> FoldAssignment::fold_sizes() const {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& [id, fold] : assignment) ++sizes[static_cast<std::size_t>(fold)];
  return sizes;
}

std::vector<std::string> FoldAssignment::members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignment) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

json FoldAssignment::to_json() const { return {{"k", k}, {"assignment", assignment}}; }

FoldAssignment FoldAssignment::from_json(const json& j) {
  FoldAssignment f;
  f.k = j.at("k").get<int>();
  f.assignment = j.at("assignment").get<std::map<std::string, int>>();
  for (const auto& [id, fold] : f.assignment) {
    if (fold < 0 || fold >= f.k) {
      throw Error(ErrorCode::kMalformedDocument, "fold index out of range", {{"source_id", id}});
    }
  }
  return f;
}

FoldAssignment kfold_split(std::vector<std::string> sources, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k must be at least 2", {{"k", k}});
  if (sources.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewSources, "fewer sources than folds",
                {{"sources", sources.size()}, {"k", k}});
  }
  std::sort(sources.begin(), sources.end());
  if (auto dup = std::adjacent_find(sources.begin(), sources.end()); dup != sources.end()) {
    throw Error(ErrorCode::kDuplicateSource, "duplicate source id", {{"id", *dup}});
  }
  SplitMix64 rng(seed);
  for (std::size_t i = sources.size() - 1; i > 0; --i) {
    std::swap(sources[i], sources[rng.below(i + 1)]);
  }
  FoldAssignment out;
  out.k = k;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    out.assignment[sources[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return out;
}

json PhaseLedger::to_json() const {
  return {{"original_public_count", original_public_count}, {"retired", retired}, {"cycles", cycles}};
}

PhaseLedger PhaseLedger::from_json(const json& j) {
  PhaseLedger l;
  l.original_public_count = j.at("original_public_count").get<std::size_t>();
  l.retired = j.at("retired").get<std::set<std::string>>();
  l.cycles = j.value("cycles", 0);
  return l;
}

DatasetManifest merge_and_phase(const DatasetManifest& public_set, const DatasetManifest& clinical,
                                const PhasePolicy& policy, PhaseLedger* ledger) {
  if (!(policy.retire_fraction_per_cycle >= 0.0 && policy.retire_fraction_per_cycle <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "retire fraction must be within [0, 1]");
  }
  for (const auto& e : clinical.entries) {
    if (e.provenance != Provenance::kConsentedClinical || e.consent_id.empty()) {
      throw Error(ErrorCode::kConsentMissing, "clinical entry lacks consent linkage", {{"id", e.id}});
    }
  }
  PhaseLedger scratch;
  PhaseLedger& state = ledger ? *ledger : scratch;
  if (state.original_public_count == 0) state.original_public_count = public_set.entries.size();

  std::vector<const ManifestEntry*> live;
  for (const auto& e : public_set.entries) {
    if (!state.retired.contains(e.id)) live.push_back(&e);
  }
  if (clinical.entries.size() >= policy.min_clinical) {
    std::sort(live.begin(), live.end(), [](const ManifestEntry* a, const ManifestEntry* b) {
      return a->created_at != b->created_at ? a->created_at < b->created_at : a->id < b->id;
    });
    const auto quota = static_cast<std::size_t>(
        std::llround(policy.retire_fraction_per_cycle * static_cast<double>(state.original_public_count)));
    const std::size_t n = std::min(quota, live.size());
    for (std::size_t i = 0; i < n; ++i) state.retired.insert(live[i]->id);
    ++state.cycles;
  }

  DatasetManifest out;
  for (const auto& e : public_set.entries) {
    if (!state.retired.contains(e.id)) out.entries.push_back(e);
  }
  std::set<std::string> ids;
  for (const auto& e : out.entries) ids.insert(e.id);
  for (const auto& e : clinical.entries) {
    if (!ids.insert(e.id).second) {
      throw Error(ErrorCode::kDuplicateSource, "clinical id collides with public id", {{"id", e.id}});
    }
    out.entries.push_back(e);
  }
  return out;
}

}  // namespace smile
