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

#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "smile/dataset.hpp"
#include "test_support.hpp"

namespace smile {
namespace {

using ::smile::testing::error_code_of;
using ::smile::testing::random_image;
using ::smile::testing::TempDir;

DatasetManifest synthetic_manifest(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestEntry e;
    e.id = "src-" + std::to_string(100000 + i);
    e.path = e.id + ".png";
    e.label = kAllFaceShapes[rng.below(kFaceShapeCount)];
    e.frontal = rng.uniform() < 0.5;
    e.expression_clear = rng.uniform() < 0.5;
    e.created_at = parse_timestamp("2025-01-01T00:00:00Z") + std::chrono::seconds(rng.below(86400 * 365));
    m.entries.push_back(e);
  }
  return m;
}

// Scalar per-pixel oracle written out without a lookup table.
std::uint8_t oracle_pixel(std::uint8_t v, double brightness, double contrast) {
  double out = (static_cast<double>(v) - 128.0) * contrast + 128.0 + brightness * 255.0;
  out = std::round(out);
  if (out < 0) out = 0;
  if (out > 255) out = 255;
  return static_cast<std::uint8_t>(out);
}

TEST(Manifest, RoundTripsThroughJsonl) {
  auto m = synthetic_manifest(40, 1);
  m.entries[3].provenance = Provenance::kConsentedClinical;
  m.entries[3].consent_id = "consent-1";
  EXPECT_EQ(parse_manifest(serialize_manifest(m)), m);
  TempDir dir;
  save_manifest(dir.str("m.jsonl"), m);
  EXPECT_EQ(load_manifest(dir.str("m.jsonl")), m);
}

TEST(Manifest, RejectsBadLinesAndDuplicates) {
  const auto m = synthetic_manifest(3, 2);
  auto text = serialize_manifest(m);
  try {
    parse_manifest(text + "{\"id\": 5}\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedDocument);
    EXPECT_EQ(e.details().at("line"), 4);
  }
  const auto first_line = text.substr(0, text.find('\n') + 1);
  EXPECT_EQ(error_code_of([&] { parse_manifest(text + first_line); }), ErrorCode::kDuplicateSource);
}

TEST(Curate, KeepsEligibleSortedAndTruncated) {
  const auto m = synthetic_manifest(300, 3);
  std::vector<std::string> want;
  for (const auto& e : m.entries) {
    if (e.frontal && e.expression_clear) want.push_back(e.id);
  }
  std::sort(want.begin(), want.end());
  want.resize(40);
  const auto got = curate(m, 40);
  ASSERT_EQ(got.entries.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(got.entries[i].id, want[i]);
}

TEST(Curate, InsufficientEligibleReportsCount) {
  const auto m = synthetic_manifest(100, 4);
  std::size_t eligible = 0;
  for (const auto& e : m.entries) eligible += (e.frontal && e.expression_clear) ? 1 : 0;
  try {
    curate(m, eligible + 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientEligible);
    EXPECT_EQ(e.details().at("eligible"), eligible);
  }
}

TEST(Curate, DefaultTargetIsFiveHundred) { EXPECT_EQ(kDefaultCurationTarget, 500u); }

TEST(Augment, FiveHundredSourcesYieldThreeThousandSamples) {
  const auto curated = curate(synthetic_manifest(5500, 5));
  ASSERT_EQ(curated.entries.size(), 500u);
  std::map<std::string, std::set<std::string>> tags;
  std::size_t samples = 0;
  for (const auto& e : curated.entries) {
    const SourceImage src{Image(4, 4), e.id, e.label};
    for (const auto& s : augment6(src)) {
      ++samples;
      EXPECT_EQ(s.source_id, e.id);
      EXPECT_EQ(s.label, e.label);
      tags[s.source_id].insert(std::string(to_string(s.op)));
    }
  }
  EXPECT_EQ(samples, 3000u);
  EXPECT_EQ(tags.size(), 500u);
  for (const auto& [id, t] : tags) EXPECT_EQ(t.size(), 6u) << id;
}

TEST(Augment, VariantsFollowFixedOrder) {
  SplitMix64 rng(6);
  const SourceImage src{random_image(rng, 9, 5), "a", FaceShapeLabel::kHeart};
  const auto out = augment6(src);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].op, kAugmentOrder[i]);
  EXPECT_EQ(out[0].pixels, src.pixels);
}

TEST(Hflip, IsAnInvolution) {
  SplitMix64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto img = random_image(rng, 1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
    EXPECT_EQ(hflip(hflip(img)), img);
  }
}

TEST(Hflip, MovesColumnsToMirrorPositions) {
  SplitMix64 rng(8);
  const auto img = random_image(rng, 7, 3);
  const auto f = hflip(img);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 7; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(f.pixel(x, y)[c], img.pixel(6 - x, y)[c]);
    }
  }
}

TEST(Augment, FlippedVariantsAreFlipsOfAdjustedImages) {
  SplitMix64 rng(9);
  for (int i = 0; i < 10; ++i) {
    const SourceImage src{random_image(rng, 31, 17), "s", FaceShapeLabel::kOval};
    const auto out = augment6(src);
    EXPECT_EQ(out[3].pixels, hflip(out[0].pixels));
    EXPECT_EQ(out[4].pixels, hflip(out[1].pixels));
    EXPECT_EQ(out[5].pixels, hflip(out[2].pixels));
  }
}

TEST(BrightnessContrast, MatchesScalarOracle) {
  SplitMix64 rng(10);
  const AugmentParams p;
  for (int i = 0; i < 5; ++i) {
    const auto img = random_image(rng, 64, 48);
    for (auto [b, c] : {std::pair{p.bucd_brightness, p.bucd_contrast}, std::pair{p.bdcu_brightness, p.bdcu_contrast},
                        std::pair{0.3, 2.0}}) {
      const auto out = adjust_brightness_contrast(img, b, c);
      const auto in_bytes = img.bytes();
      const auto out_bytes = out.bytes();
      for (std::size_t k = 0; k < in_bytes.size(); ++k) {
        ASSERT_EQ(out_bytes[k], oracle_pixel(in_bytes[k], b, c)) << "byte " << k;
      }
    }
  }
}

TEST(BrightnessContrast, DirectionOfVariants) {
  Image grey(1, 1, {100, 100, 100});
  const AugmentParams p;
  EXPECT_GT(adjust_brightness_contrast(grey, p.bucd_brightness, p.bucd_contrast).pixel(0, 0)[0], 100);
  EXPECT_LT(adjust_brightness_contrast(grey, p.bdcu_brightness, p.bdcu_contrast).pixel(0, 0)[0], 100);
  EXPECT_EQ(error_code_of([&] { adjust_brightness_contrast(grey, 0.0, 0.0); }), ErrorCode::kInvalidArgument);
}

TEST(AugmentParamsFile, OverridesOnlyGivenKeys) {
  const auto p = parse_augment_params(R"({"bucd": {"brightness": 0.2}})");
  EXPECT_DOUBLE_EQ(p.bucd_brightness, 0.2);
  EXPECT_DOUBLE_EQ(p.bucd_contrast, 0.8);
  EXPECT_DOUBLE_EQ(p.bdcu_contrast, 1.25);
  EXPECT_EQ(error_code_of([] { parse_augment_params(R"({"bdcu": {"contrast": -1}})"); }), ErrorCode::kInvalidConfig);
}

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

TEST(KFold, FiveFoldsOfExactlyOneHundred) {
  const auto folds = kfold_split(ids(500), 5, 42);
  EXPECT_EQ(folds.fold_sizes(), (std::vector<std::size_t>{100, 100, 100, 100, 100}));
}

TEST(KFold, NoSourceLeaksAcrossFolds) {
  const auto folds = kfold_split(ids(500), 5, 42);
  std::vector<AugmentedSample> samples;
  for (const auto& id : ids(500)) {
    for (auto op : kAugmentOrder) samples.push_back({Image(), FaceShapeLabel::kOval, id, op});
  }
  ASSERT_EQ(samples.size(), 3000u);
  for (int held_out = 0; held_out < 5; ++held_out) {
    std::set<std::string> train_sources, val_sources;
    for (const auto& s : samples) {
      (folds.fold_of(s.source_id) == held_out ? val_sources : train_sources).insert(s.source_id);
    }
    for (const auto& v : val_sources) EXPECT_EQ(train_sources.count(v), 0u);
    EXPECT_EQ(val_sources.size(), 100u);
  }
}

TEST(KFold, DeterministicAndOrderIndependent) {
  auto shuffled = ids(120);
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = kfold_split(ids(120), 5, 7);
  const auto b = kfold_split(shuffled, 5, 7);
  const auto c = kfold_split(ids(120), 5, 8);
  EXPECT_EQ(a.assignment, b.assignment);
  EXPECT_NE(a.assignment, c.assignment);
  EXPECT_EQ(FoldAssignment::from_json(a.to_json()).assignment, a.assignment);
}

TEST(KFold, Guards) {
  EXPECT_EQ(error_code_of([] { kfold_split(ids(10), 1, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([] { kfold_split(ids(3), 5, 0); }), ErrorCode::kTooFewSources);
  EXPECT_EQ(error_code_of([] { kfold_split({"a", "b", "a", "c", "d"}, 2, 0); }), ErrorCode::kDuplicateSource);
  const auto f = kfold_split(ids(10), 2, 0);
  EXPECT_EQ(error_code_of([&] { f.fold_of("zzz"); }), ErrorCode::kNotFound);
}

DatasetManifest clinical_manifest(std::size_t n) {
  DatasetManifest m;
  for (std::size_t i = 0; i < n; ++i) {
    ManifestEntry e;
    e.id = "clin-" + std::to_string(i);
    e.path = e.id + ".png";
    e.provenance = Provenance::kConsentedClinical;
    e.consent_id = "c" + std::to_string(i);
    e.frontal = e.expression_clear = true;
    m.entries.push_back(e);
  }
  return m;
}

TEST(MergeAndPhase, NoRetirementBelowClinicalMinimum) {
  const auto pub = synthetic_manifest(100, 11);
  const auto merged = merge_and_phase(pub, clinical_manifest(10), {50, 0.2});
  EXPECT_EQ(merged.entries.size(), 110u);
}

TEST(MergeAndPhase, RetiresOldestFractionPerCycle) {
  const auto pub = synthetic_manifest(100, 12);
  auto oldest = pub.entries;
  std::sort(oldest.begin(), oldest.end(), [](const auto& a, const auto& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.id < b.id;
  });
  PhaseLedger ledger;
  const auto clinical = clinical_manifest(60);
  const auto first = merge_and_phase(pub, clinical, {50, 0.2}, &ledger);
  EXPECT_EQ(first.entries.size(), 80u + 60u);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(ledger.retired.count(oldest[i].id));
  const auto second = merge_and_phase(pub, clinical, {50, 0.2}, &ledger);
  EXPECT_EQ(second.entries.size(), 60u + 60u);
  for (std::size_t i = 20; i < 40; ++i) EXPECT_TRUE(ledger.retired.count(oldest[i].id));
  EXPECT_EQ(ledger.cycles, 2);
  EXPECT_EQ(PhaseLedger::from_json(ledger.to_json()).retired, ledger.retired);
  for (int c = 0; c < 5; ++c) merge_and_phase(pub, clinical, {50, 0.2}, &ledger);
  EXPECT_EQ(merge_and_phase(pub, clinical, {50, 0.2}, &ledger).entries.size(), 60u);
}

TEST(MergeAndPhase, RequiresConsentLinkage) {
  auto clinical = clinical_manifest(3);
  clinical.entries[1].consent_id.clear();
  EXPECT_EQ(error_code_of([&] { merge_and_phase(synthetic_manifest(5, 1), clinical); }), ErrorCode::kConsentMissing);
  clinical = clinical_manifest(3);
  clinical.entries[2].provenance = Provenance::kPublicCorpus;
  EXPECT_EQ(error_code_of([&] { merge_and_phase(synthetic_manifest(5, 1), clinical); }), ErrorCode::kConsentMissing);
}

}  // namespace
}  // namespace smile
