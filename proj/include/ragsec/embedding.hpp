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

#ifndef RAGSEC_EMBEDDING_HPP_
#define RAGSEC_EMBEDDING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ragsec/error.hpp"
#include "ragsec/random.hpp"

namespace ragsec {

struct EmbedderConfig {
  std::size_t dim = 64;
  uint64_t hash_seed = 0;

  friend bool operator==(const EmbedderConfig&, const EmbedderConfig&) = default;
};

inline void ValidateEmbedderConfig(const EmbedderConfig& cfg) {
  if (cfg.dim < 2) throw Error(ErrorCode::kInvalidArgument, "dim must be >= 2");
}

struct TokenSequence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct EmbeddingVector {
  std::vector<double> components;
  // Signed bucket sums before normalisation; empty for vectors that were not
  // produced by Embed.
  std::vector<int64_t> counts;

  std::size_t dim() const { return components.size(); }
  bool is_zero() const {
    return std::all_of(components.begin(), components.end(),
                       [](double c) { return c == 0.0; });
  }
  double norm() const {
    double s = 0.0;
    for (double c : components) s += c * c;
    return std::sqrt(s);
  }
  friend bool operator==(const EmbeddingVector&,
                         const EmbeddingVector&) = default;
};

// Lowercases ASCII and splits on every maximal run of ASCII characters that
// are not letters or digits. Bytes >= 0x80 are kept as token characters so
// UTF-8 words survive intact.
inline TokenSequence Tokenize(std::string_view text) {
  TokenSequence out;
  std::string current;
  for (unsigned char c : text) {
    const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c >= 0x80;
    if (word) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
    } else if (!current.empty()) {
      out.tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.tokens.push_back(std::move(current));
  return out;
}

struct TokenHash {
  std::size_t bucket;
  double sign;
};

inline TokenHash HashToken(std::string_view token, const EmbedderConfig& cfg) {
  const uint64_t h = SplitMix64(Fnv1a64(token) ^ cfg.hash_seed);
  return {static_cast<std::size_t>(h % cfg.dim), (h >> 63) ? -1.0 : 1.0};
}

// Signed feature hashing over the bag of tokens, then L2 normalisation.
inline EmbeddingVector Embed(const TokenSequence& tokens,
                             const EmbedderConfig& cfg) {
  ValidateEmbedderConfig(cfg);
  EmbeddingVector v;
  v.counts.assign(cfg.dim, 0);
  for (const std::string& t : tokens.tokens) {
    const TokenHash th = HashToken(t, cfg);
    v.counts[th.bucket] += th.sign;
  }
  v.components.assign(v.counts.begin(), v.counts.end());
  const double n = v.norm();
  if (n > 0.0) {
    for (double& c : v.components) c /= n;
  }
  return v;
}

inline EmbeddingVector EmbedText(std::string_view text,
                                 const EmbedderConfig& cfg) {
  return Embed(Tokenize(text), cfg);
}

// Zero vectors compare as 0.0 rather than NaN. When both vectors carry
// bucket counts the result is computed as sign(dot) * sqrt(dot^2 / (|u|^2 |v|^2))
// from exact integers, so pairs with mathematically equal cosine get the
// same double and rank ties stay ties.
inline double CosineSimilarity(const EmbeddingVector& u,
                               const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(u.dim()) + " vs " + std::to_string(v.dim()));
  }
  if (u.counts.size() == u.dim() && v.counts.size() == v.dim()) {
    int64_t dot = 0, uu = 0, vv = 0;
    for (std::size_t i = 0; i < u.dim(); ++i) {
      dot += u.counts[i] * v.counts[i];
      uu += u.counts[i] * u.counts[i];
      vv += v.counts[i] * v.counts[i];
    }
    if (uu == 0 || vv == 0) return 0.0;
    const double sq = static_cast<double>(dot * dot) /
                      (static_cast<double>(uu) * static_cast<double>(vv));
    return std::copysign(std::sqrt(std::min(sq, 1.0)), static_cast<double>(dot));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.dim(); ++i) {
    dot += u.components[i] * v.components[i];
    uu += u.components[i] * u.components[i];
    vv += v.components[i] * v.components[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

// Length of the longest common contiguous run of tokens.
inline std::size_t LongestCommonRun(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = (a[i - 1] == b[j - 1]) ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

// Verbatim-reuse detector: longest common token run divided by the length of
// the shorter text. 1.0 iff the shorter text occurs token-wise in the longer.
inline double OverlapSimilarity(std::string_view a, std::string_view b) {
  const TokenSequence ta = Tokenize(a);
  const TokenSequence tb = Tokenize(b);
  if (ta.empty() || tb.empty()) return 0.0;
  const std::size_t run = LongestCommonRun(ta.tokens, tb.tokens);
  return static_cast<double>(run) /
         static_cast<double>(std::min(ta.size(), tb.size()));
}

}  // namespace ragsec

#endif  // RAGSEC_EMBEDDING_HPP_
