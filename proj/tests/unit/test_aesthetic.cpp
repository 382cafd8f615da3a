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

#include <gtest/gtest.h>

#include "smile/aesthetic.hpp"
#include "smile/face_card.hpp"
#include "smile/geometry.hpp"
#include "test_support.hpp"

namespace smile {
namespace {

using ::smile::testing::error_code_of;
using ::smile::testing::fixture_path;
using ::smile::testing::TempDir;

struct Rig {
  GenerationEngine engine{std::make_shared<MockBackend>()};
  LatentCode latent;
  const EditDirection& dir = MockBackend::smile_direction();

  Rig() { latent = engine.encode(read_image_file(fixture_path("fixture.jpg"))); }
};

Rig& rig() {
  static Rig r;
  return r;
}

GateConfig config(double threshold, int required = 5, int max_attempts = 50, int in_flight = 2) {
  GateConfig c;
  c.threshold = threshold;
  c.required_count = required;
  c.max_attempts = max_attempts;
  c.in_flight = in_flight;
  return c;
}

GateResult run(const GateConfig& cfg, ScoreProvider& provider, ScoreProvider* fallback = nullptr) {
  GateContext ctx{"case-t", 77, fallback, nullptr};
  return refine_loop(rig().engine, rig().latent, rig().dir, cfg, provider, ctx);
}

std::vector<double> values(const GateResult& r) {
  std::vector<double> v;
  for (const auto& a : r.accepted) v.push_back(a.score.value);
  return v;
}

// Sequential reference: walk the script in order, accept at >= threshold.
struct Simulated {
  std::vector<std::size_t> accepted;
  std::size_t attempts = 0;
  bool success = false;
};

Simulated simulate(const std::vector<double>& script, double threshold, std::size_t required, std::size_t max) {
  Simulated s;
  while (s.accepted.size() < required && s.attempts < max) {
    if (script[s.attempts % script.size()] >= threshold) s.accepted.push_back(s.attempts);
    ++s.attempts;
  }
  s.success = s.accepted.size() == required;
  return s;
}

TEST(ScriptedProvider, PassesThroughAndGuardsRange) {
  Image img(2, 2);
  EXPECT_DOUBLE_EQ(ScriptedProvider::of({83})->score({img, 0, "c"}).value, 83.0);
  EXPECT_EQ(error_code_of([&] { ScriptedProvider::of({105})->score({img, 0, "c"}); }), ErrorCode::kProviderRejected);
  ScriptedProvider outage({std::nullopt});
  EXPECT_EQ(error_code_of([&] { outage.score({img, 0, "c"}); }), ErrorCode::kProviderUnavailable);
}

TEST(RefineLoop, ScriptedSequenceKeepsPassersInOrder) {
  auto provider = ScriptedProvider::of({72, 68, 90, 65, 71, 80, 74});
  const auto r = run(config(70), *provider);
  EXPECT_EQ(values(r), (std::vector<double>{72, 90, 71, 80, 74}));
  EXPECT_EQ(r.attempts_used, 7);
  EXPECT_EQ(r.rejected_count, 2);
  EXPECT_EQ(r.provider_failures, 0);
  std::vector<std::size_t> idx;
  for (const auto& a : r.accepted) idx.push_back(a.attempt_index);
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 2, 4, 5, 6}));
  EXPECT_EQ(r.accepted[1].candidate.candidate_id, "case-t-v02");
}

TEST(RefineLoop, ThresholdIsInclusive) {
  auto provider = ScriptedProvider::of({70, 69.999, 70});
  const auto r = run(config(70, 2), *provider);
  EXPECT_EQ(values(r), (std::vector<double>{70, 70}));
  EXPECT_EQ(r.attempts_used, 3);
}

TEST(RefineLoop, ZeroThresholdAcceptsFirstAttempts) {
  auto provider = ScriptedProvider::of({3, 1, 4, 1, 5, 9, 2, 6});
  const auto r = run(config(0), *provider);
  EXPECT_EQ(values(r), (std::vector<double>{3, 1, 4, 1, 5}));
  EXPECT_EQ(r.attempts_used, 5);
}

TEST(RefineLoop, UnreachableThresholdStopsAtMaxAttempts) {
  auto provider = ScriptedProvider::of({99, 50, 98.5});
  try {
    run(config(100, 5, 10), *provider);
    FAIL() << "expected InsufficientCandidates";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientCandidates);
    EXPECT_EQ(e.details().at("found"), 0);
    EXPECT_EQ(e.details().at("attempts"), 10);
  }
  EXPECT_EQ(provider->calls(), 10u);
}

TEST(RefineLoop, AgreesWithSequentialSimulationOnRandomScripts) {
  SplitMix64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<double> script(1 + rng.below(12));
    for (auto& v : script) v = std::round(100.0 * rng.uniform());
    const double threshold = std::round(100.0 * rng.uniform());
    const int required = 1 + static_cast<int>(rng.below(4));
    const int max_attempts = required + static_cast<int>(rng.below(10));
    const int in_flight = 1 + static_cast<int>(rng.below(4));
    const auto want = simulate(script, threshold, static_cast<std::size_t>(required),
                               static_cast<std::size_t>(max_attempts));
    ScriptedProvider provider(std::vector<std::optional<double>>(script.begin(), script.end()));
    try {
      const auto r = run(config(threshold, required, max_attempts, in_flight), provider);
      ASSERT_TRUE(want.success) << trial;
      ASSERT_EQ(r.accepted.size(), static_cast<std::size_t>(required));
      for (std::size_t i = 0; i < r.accepted.size(); ++i) {
        EXPECT_EQ(r.accepted[i].attempt_index, want.accepted[i]);
        EXPECT_GE(r.accepted[i].score.value, threshold);
      }
      EXPECT_EQ(static_cast<std::size_t>(r.attempts_used), want.attempts);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kInsufficientCandidates);
      EXPECT_FALSE(want.success) << trial;
      EXPECT_EQ(e.details().at("attempts"), max_attempts);
    }
    EXPECT_LE(provider.calls(), static_cast<std::size_t>(max_attempts));
  }
}

TEST(RefineLoop, InFlightLimitDoesNotChangeResult) {
  std::vector<std::vector<double>> results;
  for (int in_flight : {1, 2, 3, 8}) {
    auto provider = ScriptedProvider::of({72, 68, 90, 65, 71, 80, 74});
    results.push_back(values(run(config(70, 5, 50, in_flight), *provider)));
  }
  for (const auto& r : results) EXPECT_EQ(r, results.front());
}

TEST(RefineLoop, OutageFallsBackWithoutLosingAcceptedCandidates) {
  ScriptedProvider provider({90, 85, std::nullopt, std::nullopt, 95, 91, 60});
  ScriptedProvider fallback({75}, "fallback");
  const auto r = run(config(70), provider, &fallback);
  EXPECT_EQ(values(r), (std::vector<double>{90, 85, 75, 75, 95}));
  EXPECT_EQ(r.provider_failures, 2);
  EXPECT_EQ(r.accepted[2].score.provider_id, "fallback");
}

TEST(RefineLoop, OutOfContractScoreAlsoFallsBack) {
  ScriptedProvider provider({101, 80});
  ScriptedProvider fallback({71}, "fallback");
  const auto r = run(config(70, 2), provider, &fallback);
  EXPECT_EQ(values(r), (std::vector<double>{71, 80}));
  EXPECT_EQ(r.provider_failures, 1);
}

TEST(RefineLoop, DisabledFallbackSurfacesProviderUnavailable) {
  ScriptedProvider provider({90, std::nullopt});
  auto cfg = config(70);
  cfg.fallback_enabled = false;
  try {
    run(cfg, provider);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kProviderUnavailable);
    EXPECT_EQ(e.details().at("attempt"), 1);
    EXPECT_EQ(e.details().at("cause").at("code"), "ProviderUnavailable");
  }
}

TEST(RefineLoop, HonoursCancellation) {
  auto provider = ScriptedProvider::of({10});
  CancelToken token;
  token.cancel();
  GateContext ctx{"c", 1, nullptr, &token};
  EXPECT_EQ(error_code_of([&] {
              refine_loop(rig().engine, rig().latent, rig().dir, config(70), *provider, ctx);
            }),
            ErrorCode::kCancelled);
}

TEST(RefineLoop, TranscriptReplayReproducesResult) {
  TempDir dir;
  const auto path = dir.str("scores.jsonl");
  const auto fixed = [] { return parse_timestamp("2026-03-01T12:00:00Z"); };
  LocalFallbackScorer fallback(default_index_map(), fixed);
  auto cfg = config(75, 5, 30, 3);
  GateResult recorded;
  {
    auto inner = std::make_shared<ScriptedProvider>(
        std::vector<std::optional<double>>{81, 40, std::nullopt, 77.5, 90, 12, 76, 75, 101, 88});
    RecordingProvider recorder(inner, path);
    recorded = run(cfg, recorder, &fallback);
  }
  ReplayProvider replay(path);
  const auto replayed = run(cfg, replay, &fallback);
  ASSERT_EQ(replayed.accepted.size(), recorded.accepted.size());
  for (std::size_t i = 0; i < recorded.accepted.size(); ++i) {
    const auto& a = recorded.accepted[i];
    const auto& b = replayed.accepted[i];
    EXPECT_EQ(a.score, b.score);
    EXPECT_EQ(a.attempt_index, b.attempt_index);
    EXPECT_EQ(a.candidate.candidate_id, b.candidate.candidate_id);
    EXPECT_EQ(a.candidate.pixels, b.candidate.pixels);
    EXPECT_EQ(a.candidate.latent, b.candidate.latent);
    EXPECT_EQ(a.candidate.magnitude, b.candidate.magnitude);
  }
  EXPECT_EQ(recorded.attempts_used, replayed.attempts_used);
  EXPECT_EQ(recorded.rejected_count, replayed.rejected_count);
  EXPECT_EQ(recorded.provider_failures, replayed.provider_failures);
}

TEST(ReplayProvider, UnknownImageIsUnavailable) {
  TempDir dir;
  const auto path = dir.str("t.jsonl");
  { RecordingProvider rec(ScriptedProvider::of({50}), path); }
  ReplayProvider replay(path);
  Image img(3, 3);
  EXPECT_EQ(error_code_of([&] { replay.score({img, 0, "c"}); }), ErrorCode::kProviderUnavailable);
  write_file_atomic(path, std::string("{\"format\":\"other\"}\n"));
  EXPECT_EQ(error_code_of([&] { ReplayProvider{path}; }), ErrorCode::kMalformedDocument);
}

TEST(FallbackFormula, HandEvaluatedPoints) {
  EXPECT_DOUBLE_EQ(fallback_formula(1.0, 0.5), 100.0);
  EXPECT_DOUBLE_EQ(fallback_formula(1.0, 2.0), 100.0);
  EXPECT_DOUBLE_EQ(fallback_formula(1.0, 0.0), 60.0);
  EXPECT_DOUBLE_EQ(fallback_formula(1.0, -0.3), 60.0);
  EXPECT_DOUBLE_EQ(fallback_formula(0.5, 0.25), 50.0);
}

TEST(LocalFallback, MatchesFormulaOnRenderedFaces) {
  const auto& idx = default_index_map();
  MockBackend backend;
  SplitMix64 rng(41);
  for (int i = 0; i < 10; ++i) {
    const auto w = backend.encode(testing::random_image(rng, 8, 8));
    const auto img = backend.generate(edit(w, MockBackend::smile_direction(), -1.5 + 0.5 * i));
    const auto lm = extract_face_card_landmarks(img, idx);
    const double s = symmetry_score(lm, idx);
    const double c = smile_curvature(lm, idx);
    const double expected = 100.0 * (0.6 * s + 0.4 * std::min(std::max(c / 0.5, 0.0), 1.0));
    const auto got = local_fallback_score(img, idx);
    EXPECT_NEAR(got.value, expected, 1e-6);
    EXPECT_TRUE(got.heuristic);
    EXPECT_EQ(got.provider_id, "local-fallback");
  }
}

TEST(LocalFallback, SymmetricFaceOutscoresDisplacedCorner) {
  FaceTemplate f;
  f.lip_curvature = 0.3;
  const double symmetric = local_fallback_score(render_face_card(f)).value;
  f.right_corner_shift = 14.0;
  f.right_corner_lift = 10.0;
  const double displaced = local_fallback_score(render_face_card(f)).value;
  EXPECT_GT(symmetric, displaced);
}

TEST(LocalFallback, NonFaceUsesPixelMirrorSimilarity) {
  Image flat(40, 40);
  for (auto& b : flat.bytes()) b = 128;
  EXPECT_NEAR(local_fallback_score(flat).value, 60.0, 1e-9);
  Image half(40, 40);
  for (int y = 0; y < 40; ++y) {
    for (int x = 20; x < 40; ++x) half.pixel(x, y)[0] = half.pixel(x, y)[1] = half.pixel(x, y)[2] = 255;
  }
  EXPECT_NEAR(local_fallback_score(half).value, 0.0, 1e-9);
}

TEST(GateConfig, DefaultsAndOverrides) {
  const GateConfig d;
  EXPECT_DOUBLE_EQ(d.threshold, 70.0);
  EXPECT_EQ(d.required_count, 5);
  EXPECT_EQ(d.max_attempts, 50);
  EXPECT_EQ(d.in_flight, 2);
  EXPECT_TRUE(d.fallback_enabled);
  EXPECT_DOUBLE_EQ(GateConfig::merged(d, {{"threshold", 80}}).threshold, 80.0);
  EXPECT_EQ(GateConfig::merged(d, d.to_json()), d);
  EXPECT_EQ(error_code_of([&] { GateConfig::merged(d, {{"required_count", 0}}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(error_code_of([&] { GateConfig::merged(d, {{"treshold", 80}}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(error_code_of([&] { GateConfig::merged(d, {{"threshold", 101}}); }), ErrorCode::kInvalidConfig);
  EXPECT_EQ(error_code_of([&] { GateConfig::merged(d, {{"threshold", "high"}}); }), ErrorCode::kInvalidConfig);
}

TEST(MagnitudeSchedule, CyclesWithBoundedSeededJitter) {
  const GateConfig cfg;
  const auto& s = cfg.magnitude_schedule;
  for (std::size_t a = 0; a < s.size(); ++a) EXPECT_EQ(magnitude_for_attempt(cfg, a, 5), s[a]);
  bool any_differs = false;
  for (std::size_t a = s.size(); a < 60; ++a) {
    const double m = magnitude_for_attempt(cfg, a, 5);
    EXPECT_LE(std::abs(m - s[a % s.size()]), 0.25);
    EXPECT_EQ(m, magnitude_for_attempt(cfg, a, 5));
    any_differs |= m != magnitude_for_attempt(cfg, a, 6);
  }
  EXPECT_TRUE(any_differs);
}

}  // namespace
}  // namespace smile
