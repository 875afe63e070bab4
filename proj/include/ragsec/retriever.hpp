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

#ifndef RAGSEC_RETRIEVER_HPP_
#define RAGSEC_RETRIEVER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragsec/corpus.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/random.hpp"

namespace ragsec {

struct ScoredDocument {
  std::string doc_id;
  double score = 0.0;                 // clipped relevance
  std::optional<double> noisy_score;  // set only by the DP path

  friend bool operator==(const ScoredDocument&, const ScoredDocument&) = default;
};

enum class NoiseFamily { kLaplace, kGaussian };
enum class Mechanism { kExact, kDp };

struct DpParams {
  double epsilon = 1.0;  // per score
  double delta = 0.0;
  double clip_bound = 1.0;  // doubles as the score sensitivity
  NoiseFamily noise_family = NoiseFamily::kLaplace;

  friend bool operator==(const DpParams&, const DpParams&) = default;
};

struct PrivacyAccount {
  double epsilon_total = 0.0;
  double delta_total = 0.0;

  friend bool operator==(const PrivacyAccount&, const PrivacyAccount&) = default;
};

struct RetrievalResult {
  std::string query_text;
  std::vector<ScoredDocument> retrieved;
  Mechanism mechanism = Mechanism::kExact;
  std::optional<PrivacyAccount> privacy;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& s : retrieved) out.push_back(s.doc_id);
    return out;
  }
  friend bool operator==(const RetrievalResult&,
                         const RetrievalResult&) = default;
};

inline void ValidateDpParams(const DpParams& dp) {
  if (!(dp.epsilon > 0.0) || !std::isfinite(dp.epsilon)) {
    throw Error(ErrorCode::kInvalidDpParams, "epsilon must be > 0");
  }
  if (!(dp.delta >= 0.0 && dp.delta < 1.0)) {
    throw Error(ErrorCode::kInvalidDpParams, "delta must be in [0, 1)");
  }
  if (!(dp.clip_bound > 0.0) || !std::isfinite(dp.clip_bound)) {
    throw Error(ErrorCode::kInvalidDpParams, "clip_bound must be > 0");
  }
  if (dp.noise_family == NoiseFamily::kGaussian && dp.delta <= 0.0) {
    throw Error(ErrorCode::kInvalidDpParams, "gaussian noise requires delta > 0");
  }
}

// Laplace: b = clip/eps. Gaussian: sigma = clip * sqrt(2 ln(1.25/delta)) / eps.
inline double NoiseScale(const DpParams& dp) {
  ValidateDpParams(dp);
  if (dp.noise_family == NoiseFamily::kLaplace) {
    return dp.clip_bound / dp.epsilon;
  }
  return dp.clip_bound * std::sqrt(2.0 * std::log(1.25 / dp.delta)) /
         dp.epsilon;
}

inline double SampleNoise(const DpParams& dp, double scale, RandomStream& rng) {
  return dp.noise_family == NoiseFamily::kLaplace ? rng.Laplace(scale)
                                                  : rng.Gaussian(scale);
}

// Basic composition over the k selections.
inline PrivacyAccount PrivacyCost(const DpParams& dp, std::size_t k) {
  ValidateDpParams(dp);
  return {static_cast<double>(k) * dp.epsilon,
          static_cast<double>(k) * dp.delta};
}

struct IndexedDocument {
  std::string id;
  EmbeddingVector vec;
};

// Precomputed document embeddings in ascending id order. Scoring against an
// index is identical to scoring against the knowledge base it came from.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  EmbeddingIndex(const KnowledgeBase& kb, const EmbedderConfig& cfg)
      : cfg_(cfg) {
    ValidateEmbedderConfig(cfg);
    entries_.reserve(kb.size());
    for (const auto& [id, doc] : kb) entries_.push_back({id, EmbedText(doc.text, cfg)});
  }

  // Entries whose id is in `ids` (which must be sorted ascending).
  EmbeddingIndex Restrict(const std::vector<std::string>& ids) const {
    EmbeddingIndex out;
    out.cfg_ = cfg_;
    auto it = ids.begin();
    for (const auto& e : entries_) {
      while (it != ids.end() && *it < e.id) ++it;
      if (it != ids.end() && *it == e.id) out.entries_.push_back(e);
    }
    return out;
  }

  const std::vector<IndexedDocument>& entries() const { return entries_; }
  const EmbedderConfig& config() const { return cfg_; }
  std::size_t size() const { return entries_.size(); }

 private:
  EmbedderConfig cfg_;
  std::vector<IndexedDocument> entries_;
};

inline std::vector<ScoredDocument> ScoreDocuments(
    const EmbeddingVector& query_vec, const EmbeddingIndex& index,
    double clip_bound) {
  if (!(clip_bound > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "clip_bound must be > 0");
  }
  std::vector<ScoredDocument> out;
  out.reserve(index.size());
  for (const auto& e : index.entries()) {
    const double s = CosineSimilarity(query_vec, e.vec);
    out.push_back({e.id, std::clamp(s, 0.0, clip_bound), std::nullopt});
  }
  return out;
}

// One entry per document, ascending doc_id, score clamped to [0, clip_bound].
inline std::vector<ScoredDocument> ScoreDocuments(
    const EmbeddingVector& query_vec, const KnowledgeBase& kb,
    const EmbedderConfig& cfg, double clip_bound) {
  return ScoreDocuments(query_vec, EmbeddingIndex(kb, cfg), clip_bound);
}

// Descending by the selection key, ties by ascending doc_id; keeps k.
inline std::vector<ScoredDocument> SelectTopK(std::vector<ScoredDocument> scored,
                                              std::size_t k, bool by_noisy) {
  auto key = [by_noisy](const ScoredDocument& s) {
    return by_noisy ? s.noisy_score.value_or(s.score) : s.score;
  };
  auto before = [&](const ScoredDocument& a, const ScoredDocument& b) {
    const double ka = key(a), kb = key(b);
    if (ka != kb) return ka > kb;
    return a.doc_id < b.doc_id;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(), before);
  scored.resize(keep);
  return scored;
}

inline RetrievalResult RetrieveExact(std::string_view q,
                                     const EmbeddingIndex& index, std::size_t k,
                                     double clip_bound = 1.0) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  RetrievalResult r;
  r.query_text = std::string(q);
  r.mechanism = Mechanism::kExact;
  r.retrieved = SelectTopK(
      ScoreDocuments(EmbedText(q, index.config()), index, clip_bound), k,
      /*by_noisy=*/false);
  return r;
}

inline RetrievalResult RetrieveExact(std::string_view q,
                                     const KnowledgeBase& kb, std::size_t k,
                                     const EmbedderConfig& cfg) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  return RetrieveExact(q, EmbeddingIndex(kb, cfg), k);
}

// Noisy top-k: every document's clipped score is perturbed (in ascending id
// order) and the k largest noisy scores win.
inline RetrievalResult RetrieveDp(std::string_view q,
                                  const EmbeddingIndex& index, std::size_t k,
                                  const DpParams& dp, RandomStream& rng) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  const double scale = NoiseScale(dp);
  auto scored = ScoreDocuments(EmbedText(q, index.config()), index,
                               dp.clip_bound);
  for (auto& s : scored) s.noisy_score = s.score + SampleNoise(dp, scale, rng);
  RetrievalResult r;
  r.query_text = std::string(q);
  r.mechanism = Mechanism::kDp;
  r.retrieved = SelectTopK(std::move(scored), k, /*by_noisy=*/true);
  r.privacy = PrivacyCost(dp, k);
  return r;
}

inline RetrievalResult RetrieveDp(std::string_view q, const KnowledgeBase& kb,
                                  std::size_t k, const EmbedderConfig& cfg,
                                  const DpParams& dp, RandomStream& rng) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  ValidateDpParams(dp);
  return RetrieveDp(q, EmbeddingIndex(kb, cfg), k, dp, rng);
}

// Retriever as configured for a pipeline run.
struct RetrieverConfig {
  Mechanism mechanism = Mechanism::kExact;
  std::size_t k = 3;
  DpParams dp;

  friend bool operator==(const RetrieverConfig&,
                         const RetrieverConfig&) = default;
};

// Dispatches on the mechanism. The DP path draws from the substream
// (seed, hash(q), trial), so repeated trials are reproducible and
// independent of execution order.
inline RetrievalResult Retrieve(std::string_view q, const EmbeddingIndex& index,
                                const RetrieverConfig& cfg, uint64_t seed,
                                uint64_t trial) {
  if (cfg.mechanism == Mechanism::kExact) {
    return RetrieveExact(q, index, cfg.k, cfg.dp.clip_bound);
  }
  RandomStream rng = RandomStream::Substream(seed, Fnv1a64(q), trial);
  return RetrieveDp(q, index, cfg.k, cfg.dp, rng);
}

}  // namespace ragsec

#endif  // RAGSEC_RETRIEVER_HPP_
