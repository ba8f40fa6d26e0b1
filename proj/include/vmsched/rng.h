// Copyright 2026 The vmsched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace vmsched {

/// splitmix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t MixSeed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named sub-stream, e.g. DeriveSeed(seed, {epoch, episode}).
inline std::uint64_t DeriveSeed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = MixSeed(base);
  for (std::uint64_t t : tags) s = MixSeed(s ^ MixSeed(t + 0x632be59bd9b4e019ULL));
  return s;
}

/// mt19937_64 with distribution helpers that do not depend on the standard
/// library's (implementation-defined) distribution classes, so sequences are
/// reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  /// Uniform in [0, 1).
  double Uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
  std::uint64_t UniformIndex(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform01(); }

  double Exponential(double mean) { return -mean * std::log1p(-Uniform01()); }

  bool Bernoulli(double p) { return Uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vmsched
