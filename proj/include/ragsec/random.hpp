//
// Copyright 2026 The ragsec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef RAGSEC_RANDOM_HPP_
#define RAGSEC_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace ragsec {

// 64-bit FNV-1a. Used wherever a stable, platform-independent string hash is
// needed (query substreams, embedding buckets, poison ids).
constexpr uint64_t Fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seeded random stream. Engine output is fully specified by the standard;
// the distributions below are written out by hand because the std::
// distribution objects are implementation-defined and would break
// cross-platform reproducibility.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : engine_(SplitMix64(seed)) {}

  // Independent stream for one (master seed, salt, trial index) triple. The
  // salt is usually the hash of the query text.
  static RandomStream Substream(uint64_t seed, uint64_t salt, uint64_t trial) {
    uint64_t s = SplitMix64(seed);
    s = SplitMix64(s ^ salt);
    s = SplitMix64(s ^ trial);
    return RandomStream(s);
  }

  uint64_t NextBits() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double UniformOpen() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformIndex(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  bool Coin() { return (engine_() >> 63) != 0; }

  // Laplace(0, scale) by inverse CDF.
  double Laplace(double scale) {
    const double u = UniformOpen() - 0.5;
    const double mag = -scale * std::log(1.0 - 2.0 * std::fabs(u));
    return u < 0 ? -mag : mag;
  }

  // N(0, sigma^2) by Box-Muller; the sine branch is discarded.
  double Gaussian(double sigma) {
    const double u1 = UniformOpen();
    const double u2 = UniformOpen();
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ragsec

#endif  // RAGSEC_RANDOM_HPP_
