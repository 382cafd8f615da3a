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

#include "smile/landmarks.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "smile/error.hpp"
#include "smile/util.hpp"

namespace smile {

extern const char* const kDefaultIndexMapJson;  // generated from data/

using nlohmann::json;

LandmarkSet::LandmarkSet(std::vector<Landmark> points, int image_width, int image_height,
                         std::string source_id)
    : points_(std::move(points)),
      image_width_(image_width),
      image_height_(image_height),
      source_id_(std::move(source_id)) {
  if (points_.size() != static_cast<std::size_t>(kMeshSize)) {
    throw Error(ErrorCode::kWrongPointCount, "a landmark set holds exactly 468 points",
                {{"expected", kMeshSize}, {"actual", points_.size()}});
  }
  if (image_width_ <= 0 || image_height_ <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive",
                {{"width", image_width_}, {"height", image_height_}});
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& p = points_[i];
    if (!std::isfinite(p.z) || !(p.x >= 0.0 && p.x <= 1.0) || !(p.y >= 0.0 && p.y <= 1.0)) {
      throw Error(ErrorCode::kOutOfRangeCoordinate, "landmark outside the normalized image",
                  {{"index", i}, {"x", std::isfinite(p.x) ? json(p.x) : json("non-finite")},
                   {"y", std::isfinite(p.y) ? json(p.y) : json("non-finite")}});
    }
  }
}

LandmarkSet LandmarkSet::with_image_size(int width, int height) const {
  return LandmarkSet(points_, width, height, source_id_);
}

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::kMalformedDocument, "malformed landmark document: " + why);
}

int positive_int(const json& parent, const char* key) {
  const auto it = parent.find(key);
  if (it == parent.end()) malformed(std::string("missing '") + key + "'");
  if (!it->is_number_integer()) malformed(std::string("'") + key + "' must be an integer");
  const auto v = it->get<std::int64_t>();
  if (v <= 0 || v > (1 << 20)) malformed(std::string("'") + key + "' out of range");
  return static_cast<int>(v);
}

}  // namespace

LandmarkSet parse_landmarks(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("top level must be an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "version" && key != "image" && key != "points" && key != "source_id") {
      malformed("unexpected key '" + key + "'");
    }
  }
  const auto version = doc.find("version");
  if (version == doc.end() || !version->is_number_integer()) malformed("'version' must be an integer");
  if (version->get<std::int64_t>() != kLandmarkFormatVersion) malformed("unsupported version");

  std::string source_id;
  if (const auto sid = doc.find("source_id"); sid != doc.end()) {
    if (!sid->is_string()) malformed("'source_id' must be a string");
    source_id = sid->get<std::string>();
  }

  const auto image = doc.find("image");
  if (image == doc.end() || !image->is_object()) malformed("'image' must be an object");
  for (const auto& [key, _] : image->items()) {
    if (key != "width" && key != "height") malformed("unexpected key 'image." + key + "'");
  }
  const int width = positive_int(*image, "width");
  const int height = positive_int(*image, "height");

  const auto points = doc.find("points");
  if (points == doc.end() || !points->is_array()) malformed("'points' must be an array");
  std::vector<Landmark> out;
  out.reserve(points->size());
  for (const auto& p : *points) {
    if (!p.is_array() || p.size() != 3) malformed("every point must be an [x, y, z] triple");
    for (const auto& c : p) {
      if (!c.is_number()) malformed("point coordinates must be numbers");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  if (out.size() != static_cast<std::size_t>(kMeshSize)) {
    throw Error(ErrorCode::kWrongPointCount, "a landmark document holds exactly 468 points",
                {{"expected", kMeshSize}, {"actual", out.size()}});
  }
  return LandmarkSet(std::move(out), width, height, std::move(source_id));
}

std::string serialize_landmarks(const LandmarkSet& set) {
  std::string out;
  out.reserve(32 * kMeshSize);
  out += R"({"version":)" + std::to_string(kLandmarkFormatVersion);
  out += R"(,"source_id":)" + json(set.source_id()).dump();
  out += R"(,"image":{"width":)" + std::to_string(set.image_width());
  out += R"(,"height":)" + std::to_string(set.image_height()) + "}";
  out += R"(,"points":[)";
  bool first = true;
  for (const auto& p : set.points()) {
    if (!first) out += ',';
    first = false;
    out += '[';
    out += format_real(p.x);
    out += ',';
    out += format_real(p.y);
    out += ',';
    out += format_real(p.z);
    out += ']';
  }
  out += "]}\n";
  return out;
}

LandmarkIndexMap::LandmarkIndexMap(std::map<std::string, LandmarkGroup> groups, int version)
    : groups_(std::move(groups)), version_(version) {
  for (auto name : kRequiredGroups) {
    const auto it = groups_.find(std::string(name));
    if (it == groups_.end() || it->second.indices.empty()) {
      throw Error(ErrorCode::kInvalidIndexMap, "required landmark group missing or empty",
                  {{"group", std::string(name)}});
    }
  }
  for (const auto& [name, g] : groups_) {
    for (int idx : g.indices) {
      if (idx < 0 || idx >= kMeshSize) {
        throw Error(ErrorCode::kInvalidIndexMap, "landmark index out of range",
                    {{"group", name}, {"index", idx}});
      }
    }
  }
  if (mouth_corners().size() != 2) {
    throw Error(ErrorCode::kInvalidIndexMap, "mouth_corners must hold exactly 2 indices",
                {{"actual", mouth_corners().size()}});
  }

  std::set<std::pair<int, int>> seen;
  auto add = [&](int a, int b) {
    if (seen.insert({a, b}).second) pairs_.emplace_back(a, b);
  };
  for (const auto& [name, g] : groups_) {
    const auto& ix = g.indices;
    const std::size_t n = ix.size();
    switch (g.mirror) {
      case MirrorMode::kNone:
        break;
      case MirrorMode::kSelf:
        for (int i : ix) add(i, i);
        break;
      case MirrorMode::kReverse:
        for (std::size_t i = 0; i <= (n - 1) / 2; ++i) add(ix[i], ix[n - 1 - i]);
        break;
      case MirrorMode::kRing:
        for (std::size_t i = 0; i <= n / 2; ++i) add(ix[i], ix[(n - i) % n]);
        break;
    }
  }
}

const LandmarkGroup& LandmarkIndexMap::group(std::string_view name) const {
  const auto it = groups_.find(std::string(name));
  if (it == groups_.end()) {
    throw Error(ErrorCode::kInvalidIndexMap, "unknown landmark group", {{"group", std::string(name)}});
  }
  return it->second;
}

LandmarkIndexMap parse_index_map(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidIndexMap, std::string("index map is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "landmark-index-map") {
      throw Error(ErrorCode::kInvalidIndexMap, "not a landmark index map document");
    }
    const int version = doc.at("version").get<int>();
    if (version != 1) {
      throw Error(ErrorCode::kInvalidIndexMap, "unsupported index map version", {{"version", version}});
    }
    if (doc.value("mesh_size", kMeshSize) != kMeshSize) {
      throw Error(ErrorCode::kInvalidIndexMap, "index map targets a different mesh size");
    }
    std::map<std::string, LandmarkGroup> groups;
    for (const auto& [name, g] : doc.at("groups").items()) {
      LandmarkGroup group;
      group.indices = g.at("indices").get<std::vector<int>>();
      const auto mode = g.value("mirror", std::string("none"));
      if (mode == "none") {
        group.mirror = MirrorMode::kNone;
      } else if (mode == "reverse") {
        group.mirror = MirrorMode::kReverse;
      } else if (mode == "ring") {
        group.mirror = MirrorMode::kRing;
      } else if (mode == "self") {
        group.mirror = MirrorMode::kSelf;
      } else {
        throw Error(ErrorCode::kInvalidIndexMap, "unknown mirror mode", {{"group", name}, {"mirror", mode}});
      }
      groups.emplace(name, std::move(group));
    }
    return LandmarkIndexMap(std::move(groups), version);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidIndexMap, std::string("index map schema violation: ") + e.what());
  }
}

LandmarkIndexMap load_index_map(const std::string& path) {
  return parse_index_map(read_file_text(path));
}

const LandmarkIndexMap& default_index_map() {
  static const LandmarkIndexMap map = parse_index_map(kDefaultIndexMapJson);
  return map;
}

}  // namespace smile
