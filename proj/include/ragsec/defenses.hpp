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

#ifndef RAGSEC_DEFENSES_HPP_
#define RAGSEC_DEFENSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ragsec/corpus.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/generator.hpp"
#include "ragsec/random.hpp"
#include "ragsec/retriever.hpp"

namespace ragsec {

inline constexpr std::string_view kRedactedText = "REDACTED";

struct DefenseConfig {
  double entropy_threshold = 1.0;  // nats
  double sharpness_kappa = 2.0;
  double output_tau = 0.7;
  std::size_t query_sample_size = 50;

  friend bool operator==(const DefenseConfig&, const DefenseConfig&) = default;
};

inline void ValidateDefenseConfig(const DefenseConfig& cfg) {
  if (!(cfg.entropy_threshold >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "entropy_threshold must be >= 0");
  }
  if (!(cfg.sharpness_kappa > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sharpness_kappa must be > 0");
  }
  if (!(cfg.output_tau > 0.0 && cfg.output_tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidTau, std::to_string(cfg.output_tau));
  }
  if (cfg.query_sample_size < 1) {
    throw Error(ErrorCode::kInvalidArgument, "query_sample_size must be >= 1");
  }
}

struct FilterReport {
  std::set<std::string> flagged_doc_ids;
  // Only documents retrieved at least once have an entry.
  std::map<std::string, double> per_doc_entropy;
  std::size_t retained_count = 0;
};

// Shannon entropy (nats) of a count histogram.
inline double EntropyNats(const std::map<std::string, std::size_t>& counts) {
  double total = 0.0;
  for (const auto& [key, c] : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (const auto& [key, c] : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

// Activation-distribution filter. Each sampled query runs exact top-k; a
// document's activation distribution is how its retrievals spread over the
// distinct query texts. Documents retrieved at least once whose activation
// entropy is below the threshold are flagged. The sample is drawn without
// replacement (the whole pool when sizes match) from `seed`.
inline FilterReport ActivationFilter(const KnowledgeBase& kb,
                                     const std::vector<std::string>& query_pool,
                                     std::size_t k, const DefenseConfig& cfg,
                                     const EmbedderConfig& embed_cfg,
                                     uint64_t seed = 0) {
  ValidateDefenseConfig(cfg);
  if (cfg.query_sample_size < 2 || query_pool.size() < cfg.query_sample_size) {
    throw Error(ErrorCode::kPoolTooSmall,
                "pool " + std::to_string(query_pool.size()) + ", sample " +
                    std::to_string(cfg.query_sample_size));
  }
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");

  std::vector<std::size_t> order(query_pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (cfg.query_sample_size < query_pool.size()) {
    RandomStream rng(seed);
    for (std::size_t i = 0; i < cfg.query_sample_size; ++i) {
      std::swap(order[i], order[i + rng.UniformIndex(order.size() - i)]);
    }
    order.resize(cfg.query_sample_size);
    std::sort(order.begin(), order.end());
  }

  const EmbeddingIndex index(kb, embed_cfg);
  std::map<std::string, std::map<std::string, std::size_t>> activations;
  for (std::size_t qi : order) {
    const RetrievalResult r = RetrieveExact(query_pool[qi], index, k);
    for (const auto& s : r.retrieved) ++activations[s.doc_id][query_pool[qi]];
  }

  FilterReport report;
  for (const auto& [id, counts] : activations) {
    const double h = EntropyNats(counts);
    report.per_doc_entropy[id] = h;
    if (h < cfg.entropy_threshold) report.flagged_doc_ids.insert(id);
  }
  report.retained_count = kb.size() - report.flagged_doc_ids.size();
  return report;
}

// Caps every score at mean + kappa * stddev (population) of the list. Order
// is preserved; re-ranking is left to the caller.
inline std::vector<ScoredDocument> SmoothScores(std::vector<ScoredDocument> scores,
                                                const DefenseConfig& cfg) {
  if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, "no scores");
  if (!(cfg.sharpness_kappa > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sharpness_kappa must be > 0");
  }
  const double n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (const auto& s : scores) mean += s.score;
  mean /= n;
  double var = 0.0;
  for (const auto& s : scores) var += (s.score - mean) * (s.score - mean);
  const double cap = mean + cfg.sharpness_kappa * std::sqrt(var / n);
  for (auto& s : scores) s.score = std::min(s.score, cap);
  return scores;
}

// Exact retrieval over smoothed scores.
inline RetrievalResult RetrieveSmoothed(std::string_view q,
                                        const EmbeddingIndex& index,
                                        std::size_t k, const DefenseConfig& cfg,
                                        double clip_bound = 1.0) {
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  RetrievalResult r;
  r.query_text = std::string(q);
  r.mechanism = Mechanism::kExact;
  auto scored = ScoreDocuments(EmbedText(q, index.config()), index, clip_bound);
  if (!scored.empty()) scored = SmoothScores(std::move(scored), cfg);
  r.retrieved = SelectTopK(std::move(scored), k, /*by_noisy=*/false);
  return r;
}

// Post-hoc verbatim filter. A response overlapping any retrieved document at
// or above output_tau is replaced by "REDACTED". If the marker itself would
// still overlap a retrieved document at that level, the response is emptied.
inline Response OutputFilter(const Response& y,
                             const std::vector<Document>& retrieved_docs,
                             const DefenseConfig& cfg) {
  auto leaks = [&](std::string_view text) {
    for (const Document& d : retrieved_docs) {
      if (OverlapSimilarity(text, d.text) >= cfg.output_tau) return true;
    }
    return false;
  };
  if (!leaks(y.text)) return y;
  Response out;
  out.text = leaks(kRedactedText) ? std::string() : std::string(kRedactedText);
  return out;
}

}  // namespace ragsec

#endif  // RAGSEC_DEFENSES_HPP_
