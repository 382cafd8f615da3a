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

// Prints one PASS or FAIL line per acceptance criterion and exits non-zero
// when any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "smile/aesthetic.hpp"
#include "smile/case.hpp"
#include "smile/classifier.hpp"
#include "smile/dataset.hpp"
#include "smile/face_card.hpp"
#include "smile/generation.hpp"
#include "smile/geometry.hpp"
#include "smile/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace smile;

namespace {

/// Collects failed expectations for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    if (ok()) return std::to_string(count_) + " checks";
    std::string s = std::to_string(failed_) + "/" + std::to_string(count_) + " failed:";
    for (const auto& f : failures_) s += " [" + f + "]";
    return s;
  }
  void note(const std::string& n) { notes_ += (notes_.empty() ? "" : ", ") + n; }
  const std::string& notes() const { return notes_; }

 private:
  int count_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("smile-accept-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  std::string str(const std::string& child = {}) const { return child.empty() ? path_.string() : (path_ / child).string(); }

 private:
  fs::path path_;
};

Image random_image(SplitMix64& rng, int w, int h) {
  Image img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng.next() & 0xFF);
  return img;
}

std::string fixture(const std::string& name) { return (fs::path(SMILE_FIXTURE_DIR) / name).string(); }

template <typename Fn>
std::optional<ErrorCode> code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void augmentation_arithmetic(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(5);
  DatasetManifest m;
  for (std::size_t i = 0; i < 5500; ++i) {
    ManifestEntry e;
    e.id = "src-" + std::to_string(100000 + i);
    e.path = e.id + ".png";
    e.label = kAllFaceShapes[rng.below(kFaceShapeCount)];
    e.frontal = rng.uniform() < 0.5;
    e.expression_clear = rng.uniform() < 0.5;
    m.entries.push_back(e);
  }
  const auto curated = curate(m, 500);
  c.expect(curated.entries.size() == 500, "curated size 500");
  std::map<std::string, std::set<std::string>> tags;
  std::size_t samples = 0;
  for (const auto& e : curated.entries) {
    for (const auto& s : augment6({Image(8, 8), e.id, e.label})) {
      ++samples;
      tags[s.source_id].insert(std::string(to_string(s.op)));
    }
  }
  c.expect(samples == 3000, "3000 samples");
  bool six = tags.size() == 500;
  for (const auto& [id, t] : tags) six = six && t.size() == 6;
  c.expect(six, "six distinct op tags per source");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(secs < 60.0, "runtime under one minute");
  c.note(std::to_string(samples) + " samples");
}

std::uint8_t oracle_pixel(std::uint8_t v, double brightness, double contrast) {
  double out = std::round((static_cast<double>(v) - 128.0) * contrast + 128.0 + brightness * 255.0);
  return static_cast<std::uint8_t>(std::min(255.0, std::max(0.0, out)));
}

void augmentation_correctness(Check& c) {
  SplitMix64 rng(7);
  bool involution = true;
  for (int i = 0; i < 100; ++i) {
    const auto img = random_image(rng, 1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
    involution = involution && hflip(hflip(img)) == img;
  }
  c.expect(involution, "hflip involution on 100 images");
  const SourceImage src{random_image(rng, 33, 21), "s", FaceShapeLabel::kOval};
  const auto out = augment6(src);
  c.expect(out[4].pixels == hflip(out[1].pixels), "FLIP_BUCD == hflip(BUCD)");
  const AugmentParams p;
  bool exact = true;
  for (int i = 0; i < 5; ++i) {
    const auto img = random_image(rng, 64, 48);
    for (auto [b, k] : {std::pair{p.bucd_brightness, p.bucd_contrast}, std::pair{p.bdcu_brightness, p.bdcu_contrast}}) {
      const auto adjusted = adjust_brightness_contrast(img, b, k);
      const auto in = img.bytes();
      const auto got = adjusted.bytes();
      for (std::size_t j = 0; j < in.size(); ++j) exact = exact && got[j] == oracle_pixel(in[j], b, k);
    }
  }
  c.expect(exact, "brightness/contrast matches scalar oracle");
}

std::vector<std::string> source_ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

void cross_validation(Check& c) {
  const auto folds = kfold_split(source_ids(500), 5, 42);
  c.expect(folds.fold_sizes() == std::vector<std::size_t>(5, 100), "five folds of 100");
  std::vector<std::pair<std::string, AugmentOp>> samples;
  for (const auto& id : source_ids(500)) {
    for (auto op : kAugmentOrder) samples.emplace_back(id, op);
  }
  c.expect(samples.size() == 3000, "3000 samples scanned");
  bool leak_free = true;
  for (int held = 0; held < 5; ++held) {
    std::set<std::string> train_src, val_src;
    for (const auto& [id, op] : samples) (folds.fold_of(id) == held ? val_src : train_src).insert(id);
    for (const auto& v : val_src) leak_free = leak_free && train_src.count(v) == 0;
  }
  c.expect(leak_free, "no source in both train and validation");
  c.expect(kfold_split(source_ids(500), 5, 42).assignment == folds.assignment, "deterministic under seed");
}

std::vector<LabeledSample> clustered(std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> centres(kFaceShapeCount, std::vector<double>(kFeatureDim));
  for (auto& centre : centres) {
    for (auto& v : centre) v = 4.0 * rng.normal();
  }
  std::vector<LabeledSample> out;
  for (std::size_t k = 0; k < kFaceShapeCount; ++k) {
    for (std::size_t i = 0; i < 100; ++i) {
      LabeledSample s;
      s.label = kAllFaceShapes[k];
      s.source_id = "c" + std::to_string(k) + "-" + std::to_string(i);
      for (int d = 0; d < kFeatureDim; ++d) s.features.push_back(centres[k][static_cast<std::size_t>(d)] + rng.normal());
      out.push_back(std::move(s));
    }
  }
  return out;
}

FoldAssignment folds_for(const std::vector<LabeledSample>& samples, std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(s.source_id);
  return kfold_split(ids, 5, seed);
}

void classifier_sanity(Check& c) {
  const auto samples = clustered(1);
  const double separable = train(samples, folds_for(samples, 1), {}, 1).second.mean_accuracy;
  c.expect(separable >= 0.95, "5-cluster CV accuracy >= 0.95");

  auto shuffled = clustered(2);
  SplitMix64 rng(2);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i].label, shuffled[rng.below(i + 1)].label);
  const double chance = train(shuffled, folds_for(shuffled, 2), {}, 2).second.mean_accuracy;
  c.expect(chance >= 0.10 && chance <= 0.30, "shuffled-label accuracy in [0.10, 0.30]");

  double worst = 0.0;
  for (int problem = 0; problem < 20; ++problem) {
    const int dim = 2 + static_cast<int>(rng.below(6));
    const int n = 5 + static_cast<int>(rng.below(20));
    std::vector<std::vector<double>> x(static_cast<std::size_t>(n));
    std::vector<FaceShapeLabel> y;
    for (auto& row : x) {
      for (int d = 0; d < dim; ++d) row.push_back(rng.normal());
      y.push_back(kAllFaceShapes[rng.below(kFaceShapeCount)]);
    }
    std::vector<double> w(static_cast<std::size_t>(kFaceShapeCount * (dim + 1)));
    for (auto& v : w) v = 0.5 * rng.normal();
    std::vector<double> grad;
    softmax_loss(w, x, y, 0.01, &grad);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto wp = w, wm = w;
      wp[i] += 1e-5;
      wm[i] -= 1e-5;
      const double fd = (softmax_loss(wp, x, y, 0.01) - softmax_loss(wm, x, y, 0.01)) / 2e-5;
      num += (fd - grad[i]) * (fd - grad[i]);
      den += fd * fd + grad[i] * grad[i];
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  c.expect(worst <= 1e-4, "gradient relative error <= 1e-4");
  std::ostringstream note;
  note << "cv=" << separable << " shuffled=" << chance << " grad_err=" << worst;
  c.note(note.str());
}

LandmarkSet template_face(std::uint64_t seed, FaceShapeLabel label, int w, int h) {
  SplitMix64 rng(seed);
  return synthetic_face(label, rng, w, h).landmarks(default_index_map());
}

LandmarkSet with_lip_curve(const LandmarkSet& base, double a, double sigma, SplitMix64& rng) {
  const auto& idx = default_index_map();
  const double w = base.image_width(), h = base.image_height();
  double mid = 0.0;
  for (int i : idx.midline()) mid += base[static_cast<std::size_t>(i)].x * w;
  mid /= static_cast<double>(idx.midline().size());
  const double mw = 0.2 * w;
  auto pts = base.points();
  const auto& lip = idx.lower_lip_outer();
  const std::size_t n = lip.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = -0.5 + static_cast<double>(i) / static_cast<double>(n - 1);
    const double noise = (i == 0 || i + 1 == n) ? 0.0 : sigma * rng.normal();
    pts[static_cast<std::size_t>(lip[i])].x = (mid + t * mw) / w;
    pts[static_cast<std::size_t>(lip[i])].y = (0.7 * h - (a * t * t + noise) * mw) / h;
  }
  return LandmarkSet(pts, base.image_width(), base.image_height());
}

void geometry_oracles(Check& c) {
  const auto& idx = default_index_map();
  SplitMix64 rng(99);
  const auto base = template_face(5, FaceShapeLabel::kOval, 1000, 1000);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const double a = -0.8 + 1.6 * rng.uniform();
    worst = std::max(worst, std::abs(smile_curvature(with_lip_curve(base, a, 0.001, rng), idx) - a));
  }
  c.expect(worst <= 0.02, "curvature recovered within 0.02");

  double drift = 0.0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto lm = template_face(seed, kAllFaceShapes[seed % kFaceShapeCount], 800, 600);
    const auto f = derive_features(lm, idx).as_array();
    for (double k : {0.25, 3.0, 7.5}) {
      const auto g = derive_features(lm.with_image_size(static_cast<int>(800 * k), static_cast<int>(600 * k)), idx).as_array();
      for (std::size_t i = 0; i < f.size(); ++i) drift = std::max(drift, std::abs(f[i] - g[i]));
    }
  }
  c.expect(drift <= 1e-9, "scale invariance to 1e-9");

  bool symmetric = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double s = symmetry_score(template_face(seed, kAllFaceShapes[seed % kFaceShapeCount], 1000, 1000), idx);
    symmetric = symmetric && std::abs(s - 1.0) <= 1e-12;
  }
  c.expect(symmetric, "symmetry 1.0 on mirror-symmetric fixtures");
  std::ostringstream note;
  note << "curv_err=" << worst << " scale_drift=" << drift;
  c.note(note.str());
}

void latent_editing(Check& c) {
  SplitMix64 rng(11);
  const int dim = 512;
  double worst = 0.0;
  bool identity = true;
  for (int trial = 0; trial < 1000; ++trial) {
    LatentCode w{std::vector<double>(dim), "mock-v1"};
    std::vector<double> raw(dim);
    for (auto& v : w.vector) v = rng.normal();
    for (auto& v : raw) v = rng.normal();
    const auto d = EditDirection::make("smile", raw, "mock-v1");
    const double a = 4.0 * rng.uniform() - 2.0, b = 4.0 * rng.uniform() - 2.0;
    identity = identity && edit(w, d, 0.0) == w;
    const auto twice = edit(edit(w, d, a), d, b);
    const auto once = edit(w, d, a + b);
    for (std::size_t i = 0; i < twice.vector.size(); ++i) worst = std::max(worst, std::abs(twice.vector[i] - once.vector[i]));
  }
  c.expect(identity, "edit at magnitude 0 is identity");
  c.expect(worst <= 1e-12, "additivity within 1e-12");

  auto run_once = [] {
    GenerationEngine engine(std::make_shared<MockBackend>());
    const auto w = engine.encode(read_image_file(fixture("fixture.jpg")));
    const std::vector<double> magnitudes = {-1.0, 0.0, 0.75, 1.5};
    std::vector<Image> out;
    for (const auto& cand : engine.variant_sweep(w, MockBackend::smile_direction(), magnitudes, "case-x")) {
      out.push_back(cand.pixels);
    }
    return out;
  };
  c.expect(run_once() == run_once(), "mock pipeline bit-deterministic");
}

GateConfig gate(double threshold, int required, int max_attempts) {
  GateConfig g;
  g.threshold = threshold;
  g.required_count = required;
  g.max_attempts = max_attempts;
  return g;
}

void gate_loop(Check& c) {
  GenerationEngine engine(std::make_shared<MockBackend>());
  const auto w = engine.encode(read_image_file(fixture("fixture.jpg")));
  const auto& dir = MockBackend::smile_direction();
  GateContext ctx{"case-accept", 9, nullptr, nullptr};

  const std::vector<double> script = {72, 68, 90, 65, 71, 80, 74};
  std::vector<double> expected;
  std::size_t attempts = 0;
  while (expected.size() < 5) {
    if (script[attempts] >= 70) expected.push_back(script[attempts]);
    ++attempts;
  }
  auto scripted = ScriptedProvider::of(script);
  const auto r = refine_loop(engine, w, dir, gate(70, 5, 50), *scripted, ctx);
  std::vector<double> got;
  for (const auto& a : r.accepted) got.push_back(a.score.value);
  c.expect(got == expected && got == std::vector<double>{72, 90, 71, 80, 74}, "accepted [72,90,71,80,74]");
  c.expect(r.attempts_used == static_cast<int>(attempts) && attempts == 7, "attempts_used 7");

  auto low = ScriptedProvider::of({99.9});
  const auto code = code_of([&] { refine_loop(engine, w, dir, gate(100, 5, 50), *low, ctx); });
  c.expect(code == ErrorCode::kInsufficientCandidates, "threshold 100 gives InsufficientCandidates");
  c.expect(low->calls() == 50, "exactly max_attempts scoring calls");

  TempDir tmp;
  LocalFallbackScorer fallback(default_index_map(), [] { return parse_timestamp("2026-01-01T00:00:00Z"); });
  GateContext with_fallback{"case-accept", 9, &fallback, nullptr};
  GateResult recorded;
  {
    RecordingProvider rec(std::make_shared<ScriptedProvider>(std::vector<std::optional<double>>{81, 40, std::nullopt, 77, 90, 12, 76, 75}),
                          tmp.str("t.jsonl"));
    recorded = refine_loop(engine, w, dir, gate(75, 5, 30), rec, with_fallback);
  }
  ReplayProvider replay(tmp.str("t.jsonl"));
  const auto replayed = refine_loop(engine, w, dir, gate(75, 5, 30), replay, with_fallback);
  bool identical = recorded.accepted.size() == replayed.accepted.size() &&
                   recorded.attempts_used == replayed.attempts_used &&
                   recorded.rejected_count == replayed.rejected_count &&
                   recorded.provider_failures == replayed.provider_failures;
  for (std::size_t i = 0; identical && i < recorded.accepted.size(); ++i) {
    const auto& x = recorded.accepted[i];
    const auto& y = replayed.accepted[i];
    identical = x.score == y.score && x.attempt_index == y.attempt_index && x.candidate.pixels == y.candidate.pixels &&
                x.candidate.latent == y.candidate.latent && x.candidate.candidate_id == y.candidate.candidate_id;
  }
  c.expect(identical, "transcript replay is bit-identical");
}

class FakeDetect {
 public:
  explicit FakeDetect(std::function<void(int, httplib::Response&)> reply) : reply_(std::move(reply)) {
    server_.Post("/detect", [this](const httplib::Request&, httplib::Response& res) { reply_(calls++, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeDetect() {
    server_.stop();
    thread_.join();
  }
  RemoteScoreConfig config(int retries) const {
    RemoteScoreConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port_) + "/detect";
    cfg.max_retries = retries;
    cfg.rate_per_second = 1000;
    cfg.burst = 1000;
    return cfg;
  }
  std::atomic<int> calls{0};

 private:
  std::function<void(int, httplib::Response&)> reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

void set_beauty(httplib::Response& res, double male, double female) {
  res.set_content(json({{"faces", {{{"attributes", {{"beauty", {{"male_score", male}, {"female_score", female}}}}}}}}}).dump(),
                  "application/json");
}

void remote_contract(Check& c) {
  const Image img(16, 16);
  const Sleeper no_sleep = [](auto) {};
  {
    FakeDetect fake([](int, httplib::Response& res) { set_beauty(res, 75.0, 79.4); });
    RemoteScoreClient client(fake.config(3), no_sleep);
    c.expect(std::abs(client.score_image(img).value - 77.2) < 1e-12, "valid payload parsed exactly");
  }
  {
    FakeDetect fake([](int n, httplib::Response& res) {
      if (n < 2) res.status = 503;
      else set_beauty(res, 60, 60);
    });
    RemoteScoreClient client(fake.config(3), no_sleep);
    client.score_image(img);
    c.expect(client.stats().retries == 2 && fake.calls == 3, "two 5xx then success uses exactly 2 retries");
  }
  {
    FakeDetect fake([](int, httplib::Response& res) { res.status = 403; });
    RemoteScoreClient client(fake.config(3), no_sleep);
    const auto code = code_of([&] { client.score_image(img); });
    c.expect(code == ErrorCode::kProviderRejected && fake.calls == 1, "4xx never retried");
  }
  bool within_budget = true;
  for (int retries = 0; retries <= 4; ++retries) {
    for (int failures = 0; failures <= 6; ++failures) {
      FakeDetect fake([failures](int n, httplib::Response& res) {
        if (n < failures) res.status = 500;
        else set_beauty(res, 50, 50);
      });
      RemoteScoreClient client(fake.config(retries), no_sleep);
      code_of([&] { client.score_image(img); });
      within_budget = within_budget && fake.calls <= retries + 1;
    }
  }
  c.expect(within_budget, "calls never exceed retry budget");
}

/// Store wrapper that records the state of every persisted write.
class AuditStore : public CaseStore {
 public:
  explicit AuditStore(std::shared_ptr<CaseStore> inner) : inner_(std::move(inner)) {}
  void put_case(const Case& c) override {
    {
      std::lock_guard lock(mu_);
      history_[c.case_id].push_back(c.state);
    }
    inner_->put_case(c);
  }
  std::optional<Case> get_case(const std::string& id) override { return inner_->get_case(id); }
  std::vector<std::string> list_case_ids() override { return inner_->list_case_ids(); }
  void put_blob(const std::string& n, std::span<const std::uint8_t> b) override { inner_->put_blob(n, b); }
  std::vector<std::uint8_t> get_blob(const std::string& n) override { return inner_->get_blob(n); }
  std::string anonymization_salt() override { return inner_->anonymization_salt(); }

  /// True when every recorded change of state is a legal transition.
  bool legal(const std::string& id) {
    std::lock_guard lock(mu_);
    const auto& h = history_[id];
    for (std::size_t i = 1; i < h.size(); ++i) {
      if (h[i] != h[i - 1] && !is_legal_transition(h[i - 1], h[i])) return false;
    }
    return !h.empty();
  }

 private:
  std::shared_ptr<CaseStore> inner_;
  std::mutex mu_;
  std::map<std::string, std::vector<CaseState>> history_;
};

class SlowProvider : public ScoreProvider {
 public:
  std::string id() const override { return "slow"; }
  AestheticScore score(const ScoreRequest&) override {
    ++calls;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    return {10.0, "slow", {}, false};
  }
  std::atomic<int> calls{0};
};

ServiceDeps offline_deps(std::shared_ptr<CaseStore> store, std::shared_ptr<ScoreProvider> provider) {
  ServiceDeps d;
  d.store = std::move(store);
  d.backend = std::make_shared<MockBackend>();
  auto local = std::make_shared<LocalFallbackScorer>();
  d.provider = provider ? std::move(provider) : local;
  d.fallback = local;
  static const auto model = reference_model(default_index_map());
  d.model = model;
  d.direction = MockBackend::smile_direction();
  return d;
}

std::string run_command(const std::string& cmd, int& status) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    status = -1;
    return out;
  }
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  status = pclose(pipe);
  return out;
}

void end_to_end(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  TempDir tmp;
  const std::string store_dir = tmp.str("store");
  int status = 0;
  const std::string out = run_command(std::string("\"") + SMILE_CLI_PATH + "\" case run --photo \"" + fixture("fixture.jpg") +
                                          "\" --offline --store \"" + store_dir + "\"",
                                      status);
  c.expect(status == 0, "CLI exit status 0");
  json view = json::parse(out, nullptr, false);
  c.expect(view.is_object() && view.value("state", "") == "AWAITING_SELECTION", "CLI run reaches AWAITING_SELECTION");
  const std::size_t n = view.is_object() && view.contains("candidates") ? view["candidates"].size() : 0;
  c.expect(n == 5, "exactly 5 candidates");
  bool above = n > 0;
  if (n > 0) {
    for (const auto& cand : view["candidates"]) above = above && cand["score"]["value"].get<double>() >= 70.0;
  }
  c.expect(above, "every stored score >= 70");

  // State-machine audit over a second case in the same store, driven in process.
  auto audit = std::make_shared<AuditStore>(std::make_shared<FileCaseStore>(store_dir));
  std::string finished;
  {
    ServiceOptions o;
    o.workers = 0;
    CaseService svc(offline_deps(audit, nullptr), o);
    finished = svc.create_case().case_id;
    svc.upload_photo(finished, read_file_bytes(fixture("fixture.jpg")));
    const Case done = svc.run_pipeline(finished);
    c.expect(done.state == CaseState::kAwaitingSelection, "in-process run reaches AWAITING_SELECTION");
    c.expect(code_of([&] { svc.run_pipeline(finished); }) == ErrorCode::kWrongState, "re-run rejected");
    if (!done.candidates.empty()) svc.record_selection(finished, done.candidates.front().candidate_id);
    c.expect(code_of([&] { svc.record_selection(finished, done.candidates.front().candidate_id); }) ==
                 ErrorCode::kWrongState,
             "second selection rejected");
    c.expect(audit->legal(finished), "every persisted transition legal");
  }

  // Restart in the middle of generation.
  const auto before = FileCaseStore(store_dir).get_case(finished);
  std::string interrupted;
  {
    auto slow = std::make_shared<SlowProvider>();
    ServiceOptions o;
    o.workers = 1;
    CaseService svc(offline_deps(audit, slow), o);
    interrupted = svc.create_case().case_id;
    svc.upload_photo(interrupted, read_file_bytes(fixture("fixture.jpg")));
    svc.run_pipeline(interrupted);
    while (slow->calls < 3) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    svc.shutdown();
  }
  {
    ServiceOptions o;
    o.workers = 1;
    CaseService svc(offline_deps(audit, nullptr), o);
    svc.wait_idle();
    const Case resumed = svc.get_case(interrupted);
    c.expect(resumed.state == CaseState::kAwaitingSelection && resumed.candidates.size() == 5,
             "interrupted case completes after restart");
    c.expect(svc.get_case(finished) == *before, "completed case unchanged by restart");
    c.expect(svc.list_cases().size() == 3, "all cases survive restart");
    c.expect(audit->legal(interrupted), "interrupted case transitions legal");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(secs < 120.0, "runtime under two minutes");
  std::ostringstream note;
  note << n << " candidates, " << secs << " s";
  c.note(note.str());
}

void consent_audit(Check& c) {
  TempDir tmp;
  auto store = std::make_shared<FileCaseStore>(tmp.str("store"));
  ServiceOptions o;
  o.workers = 0;
  CaseService svc(offline_deps(store, ScriptedProvider::of({90})), o);
  std::vector<std::string> ids;
  const auto photo = read_file_bytes(fixture("fixture.jpg"));
  for (int i = 0; i < 10; ++i) {
    const auto id = svc.create_case().case_id;
    svc.upload_photo(id, photo);
    svc.run_pipeline(id);
    ids.push_back(id);
  }
  for (int i : {0, 3, 8}) svc.record_consent(ids[static_cast<std::size_t>(i)], true, ConsentScope::kAnonymizedTraining);
  const auto manifest = export_consented(*store, tmp.str("export"));
  c.expect(manifest.entries.size() == 3, "exactly 3 entries");
  bool clean = true;
  for (const auto& e : manifest.entries) {
    const json fields = json::parse(serialize_manifest(DatasetManifest{{e}}));
    for (const auto& [key, value] : fields.items()) {
      const std::string text = value.is_string() ? value.get<std::string>() : value.dump();
      for (const auto& id : ids) clean = clean && text.find(id) == std::string::npos;
    }
  }
  c.expect(clean, "no field matches any case_id");
  const auto on_disk = read_file_text(tmp.str("export/manifest.jsonl"));
  for (const auto& id : ids) clean = clean && on_disk.find(id) == std::string::npos;
  c.expect(clean, "manifest file carries no case_id");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"Augmentation arithmetic", augmentation_arithmetic},
      {"Augmentation correctness", augmentation_correctness},
      {"Cross-validation", cross_validation},
      {"Classifier sanity", classifier_sanity},
      {"Geometry oracles", geometry_oracles},
      {"Latent editing", latent_editing},
      {"Gate loop", gate_loop},
      {"Remote client contract", remote_contract},
      {"End-to-end offline run", end_to_end},
      {"Consent audit", consent_audit},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "PASS " : "FAIL ") << name << " (" << c.summary()
              << (c.notes().empty() ? "" : "; " + c.notes()) << ")" << std::endl;
    if (!c.ok()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
