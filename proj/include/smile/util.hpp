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
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smile {

class Image;

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> data);
Sha256 sha256(std::string_view data);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Digest over dimensions and raw pixels; stable across codecs.
Sha256 image_digest(const Image& image);

/// SplitMix64: portable deterministic generator used wherever results must be
/// reproducible bit-for-bit across standard library implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::uint64_t state_;
};

std::uint64_t seed_from_digest(const Sha256& digest);
std::uint64_t seed_from_string(std::string_view text);

using Timestamp = std::chrono::sys_seconds;

/// RFC 3339 UTC with second precision, e.g. 2026-03-01T08:30:00Z.
std::string format_timestamp(Timestamp t);
/// Inverse of format_timestamp; throws InvalidArgument on any other layout.
Timestamp parse_timestamp(std::string_view text);
Timestamp now_utc();

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
std::string read_file_text(const std::string& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::string& path, std::string_view text);

/// Shortest decimal form that round-trips to the same double; integral
/// values keep a trailing ".0" so the text always reads as a real number.
std::string format_real(double value);

}  // namespace smile
