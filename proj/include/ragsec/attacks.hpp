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

#ifndef RAGSEC_ATTACKS_HPP_
#define RAGSEC_ATTACKS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragsec/corpus.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/generator.hpp"
#include "ragsec/random.hpp"
#include "ragsec/retriever.hpp"

namespace ragsec {

// ---------------------------------------------------------------------------
// Adversary taxonomy
// ---------------------------------------------------------------------------

enum class Access { kBlackBox, kWhiteBox };
enum class Knowledge { kNormal, kInformed };

struct AdversaryProfile {
  Access access = Access::kBlackBox;
  Knowledge knowledge = Knowledge::kNormal;

  friend bool operator==(const AdversaryProfile&,
                         const AdversaryProfile&) = default;
};

// A_I unaware observer, A_II aware observer, A_III aware insider,
// A_IV unaware insider.
inline std::string_view TaxonomyLabel(const AdversaryProfile& p) {
  if (p.access == Access::kBlackBox) {
    return p.knowledge == Knowledge::kNormal ? "A_I" : "A_II";
  }
  return p.knowledge == Knowledge::kInformed ? "A_III" : "A_IV";
}

// Everything the challenger needs to run one query through the system.
struct PipelineConfig {
  EmbedderConfig embed;
  RetrieverConfig retriever;
  GeneratorConfig generator;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

// ---------------------------------------------------------------------------
// Document-level membership inference game
// ---------------------------------------------------------------------------

enum class MiaStrategy {
  kSelfQuery,    // q = text of d*
  kBlind,        // q drawn uniformly from the query pool, chosen before d*
  kConstantOne,  // always guesses 1
  kCoinFlip,     // uniform random guess
};

struct MiaConfig {
  AdversaryProfile profile;
  MiaStrategy strategy = MiaStrategy::kSelfQuery;
  double threshold = 0.5;
  std::vector<std::string> query_pool;  // used by kBlind
};

struct GameTranscript {
  std::size_t trial = 0;
  bool b = false;
  std::string target_doc_id;
  std::string query_text;
  std::string response_text;
  // Retrieved ids and clipped scores; present iff the adversary is white-box.
  std::optional<std::vector<ScoredDocument>> observation;
  bool guess = false;

  friend bool operator==(const GameTranscript&, const GameTranscript&) = default;
};

// Membership signal in [0, 1] the profile can compute from what it observes.
// Black-box: verbatim overlap of the response with d*. White-box: 1.0 if d*
// was retrieved, else the largest observed retrieval score.
inline double MiaSignal(const AdversaryProfile& adversary,
                        const GameTranscript& t, std::string_view target_text) {
  if (adversary.access == Access::kBlackBox || !t.observation) {
    return OverlapSimilarity(t.response_text, target_text);
  }
  double best = 0.0;
  for (const auto& s : *t.observation) {
    if (s.doc_id == t.target_doc_id) return 1.0;
    best = std::max(best, s.score);
  }
  return best;
}

inline bool MiaGuess(const AdversaryProfile& adversary, const GameTranscript& t,
                     std::string_view target_text, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in [0, 1]");
  }
  return MiaSignal(adversary, t, target_text) >= threshold;
}

namespace internal {
inline constexpr uint64_t kGameSalt = 0x6d69612d67616d65ULL;  // "mia-game"
}  // namespace internal

inline std::vector<GameTranscript> RunMiaGame(const KnowledgeBase& universe,
                                              std::size_t kb_size,
                                              const MiaConfig& attack,
                                              const PipelineConfig& pipeline,
                                              std::size_t trials, uint64_t seed) {
  if (universe.size() < kb_size + 1 || kb_size < 1) {
    throw Error(ErrorCode::kUniverseTooSmall,
                "universe " + std::to_string(universe.size()) + ", kb_size " +
                    std::to_string(kb_size));
  }
  if (trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be >= 1");
  if (attack.strategy == MiaStrategy::kBlind && attack.query_pool.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "blind strategy needs a query pool");
  }
  const std::vector<std::string> all_ids = universe.ids();
  const EmbeddingIndex full_index(universe, pipeline.embed);

  std::vector<GameTranscript> out;
  out.reserve(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    RandomStream game =
        RandomStream::Substream(seed, internal::kGameSalt, trial);
    // Challenger: D is a uniform kb_size-subset (partial Fisher-Yates).
    std::vector<std::string> pool = all_ids;
    for (std::size_t i = 0; i < kb_size; ++i) {
      const std::size_t j = i + game.UniformIndex(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::string> members(pool.begin(), pool.begin() + kb_size);
    std::vector<std::string> outsiders(pool.begin() + kb_size, pool.end());
    std::sort(members.begin(), members.end());
    std::sort(outsiders.begin(), outsiders.end());

    GameTranscript t;
    t.trial = trial;
    t.b = game.Coin();
    const auto& side = t.b ? members : outsiders;
    t.target_doc_id = side[game.UniformIndex(side.size())];
    const std::string& target_text = universe.at(t.target_doc_id).text;

    // Adversary picks q. The blind draw happens regardless of strategy so
    // that every profile sees the same challenger randomness.
    const std::size_t blind_pick =
        attack.query_pool.empty() ? 0 : game.UniformIndex(attack.query_pool.size());
    t.query_text = attack.strategy == MiaStrategy::kBlind
                       ? attack.query_pool[blind_pick]
                       : target_text;

    const EmbeddingIndex kb_index = full_index.Restrict(members);
    const RetrievalResult retrieval =
        Retrieve(t.query_text, kb_index, pipeline.retriever, seed, trial);
    const Response y = Generate(Augment(t.query_text, retrieval, universe),
                                pipeline.generator, pipeline.embed);
    t.response_text = y.text;
    if (attack.profile.access == Access::kWhiteBox) {
      t.observation = retrieval.retrieved;
    }
    const bool coin = game.Coin();
    switch (attack.strategy) {
      case MiaStrategy::kConstantOne:
        t.guess = true;
        break;
      case MiaStrategy::kCoinFlip:
        t.guess = coin;
        break;
      default:
        t.guess = MiaGuess(attack.profile, t, target_text, attack.threshold);
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Threshold maximising shadow accuracy of the rule "guess 1 iff score >= t".
// Candidates are the observed scores; ties go to the larger threshold.
inline double CalibrateThreshold(const AdversaryProfile& adversary,
                                 const std::vector<std::pair<double, bool>>& shadow) {
  if (adversary.knowledge != Knowledge::kInformed) {
    throw Error(ErrorCode::kNotInformed, std::string(TaxonomyLabel(adversary)));
  }
  if (shadow.empty()) return 0.5;
  std::vector<double> candidates;
  for (const auto& [score, member] : shadow) candidates.push_back(score);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best_threshold = candidates.front();
  std::size_t best_correct = 0;
  for (double c : candidates) {
    std::size_t correct = 0;
    for (const auto& [score, member] : shadow) {
      correct += ((score >= c) == member) ? 1 : 0;
    }
    if (correct >= best_correct) {  // ascending scan: >= keeps the larger one
      best_correct = correct;
      best_threshold = c;
    }
  }
  return best_threshold;
}

// Informed adversaries learn their threshold from a shadow game played on
// the same universe under an unrelated seed.
inline double CalibrateFromShadowGame(const KnowledgeBase& universe,
                                      std::size_t kb_size,
                                      const MiaConfig& attack,
                                      const PipelineConfig& pipeline,
                                      std::size_t shadow_trials, uint64_t seed) {
  const uint64_t shadow_seed = SplitMix64(seed ^ 0x736861646f77ULL);
  const auto transcripts =
      RunMiaGame(universe, kb_size, attack, pipeline, shadow_trials, shadow_seed);
  std::vector<std::pair<double, bool>> shadow;
  shadow.reserve(transcripts.size());
  for (const auto& t : transcripts) {
    shadow.emplace_back(
        MiaSignal(attack.profile, t, universe.at(t.target_doc_id).text), t.b);
  }
  return CalibrateThreshold(attack.profile, shadow);
}

// ---------------------------------------------------------------------------
// Retrieved-content leakage
// ---------------------------------------------------------------------------

struct CompoundQuery {
  std::string anchor;
  std::string command;
  std::string combined;
};

inline CompoundQuery CraftLeakageQuery(const std::vector<std::string>& anchor_terms,
                                       const GeneratorConfig& cfg) {
  if (anchor_terms.empty()) throw Error(ErrorCode::kEmptyAnchor, "no anchor terms");
  CompoundQuery q;
  for (std::size_t i = 0; i < anchor_terms.size(); ++i) {
    if (i > 0) q.anchor += ' ';
    q.anchor += anchor_terms[i];
  }
  q.command = cfg.command_token;
  q.combined = q.anchor + " " + q.command;
  return q;
}

struct LeakageOutcome {
  bool success = false;
  std::vector<std::string> leaked_doc_ids;
  double max_similarity = 0.0;
};

inline LeakageOutcome EvaluateLeakage(const Response& y,
                                      const std::vector<Document>& retrieved_docs,
                                      double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw Error(ErrorCode::kInvalidTau, std::to_string(tau));
  }
  LeakageOutcome out;
  for (const Document& d : retrieved_docs) {
    const double sim = OverlapSimilarity(y.text, d.text);
    out.max_similarity = std::max(out.max_similarity, sim);
    if (sim >= tau) out.leaked_doc_ids.push_back(d.id);
  }
  out.success = !out.leaked_doc_ids.empty();
  return out;
}

// ---------------------------------------------------------------------------
// Trigger-based poisoning
// ---------------------------------------------------------------------------

struct TriggerSet {
  std::set<std::string> tokens;
};

inline void ValidateTriggerSet(const TriggerSet& triggers) {
  if (triggers.tokens.empty()) {
    throw Error(ErrorCode::kEmptyTriggerSet, "no trigger tokens");
  }
  for (const auto& t : triggers.tokens) {
    const TokenSequence seq = Tokenize(t);
    if (seq.size() != 1 || seq.tokens[0] != t) {
      throw Error(ErrorCode::kInvalidArgument, "not a single token: " + t);
    }
  }
}

// Membership in the activated query subset: some trigger occurs as a token.
inline bool IsTriggerQuery(std::string_view q, const TriggerSet& triggers) {
  for (const auto& tok : Tokenize(q).tokens) {
    if (triggers.tokens.count(tok)) return true;
  }
  return false;
}

struct PoisonDocument {
  Document doc;
  double target_similarity = 0.0;
};

// Greedy coordinate ascent in token space towards the embedding of the
// trigger multiset: `length` appends, each picking the vocabulary token that
// maximises cosine to the target (ties to the lexicographically first).
inline PoisonDocument CraftPoison(const TriggerSet& triggers,
                                  std::vector<std::string> vocab,
                                  std::size_t length, const EmbedderConfig& cfg,
                                  std::string id = {}) {
  ValidateTriggerSet(triggers);
  if (vocab.empty()) throw Error(ErrorCode::kEmptyVocab, "no vocabulary");
  if (length < 1) throw Error(ErrorCode::kInvalidArgument, "length must be >= 1");
  ValidateEmbedderConfig(cfg);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  for (const auto& v : vocab) {
    const TokenSequence seq = Tokenize(v);
    if (seq.size() != 1 || seq.tokens[0] != v) {
      throw Error(ErrorCode::kInvalidArgument, "vocab entry is not a token: " + v);
    }
  }

  TokenSequence trigger_tokens;
  trigger_tokens.tokens.assign(triggers.tokens.begin(), triggers.tokens.end());
  const EmbeddingVector target = Embed(trigger_tokens, cfg);

  std::vector<TokenHash> hashes;
  hashes.reserve(vocab.size());
  for (const auto& v : vocab) hashes.push_back(HashToken(v, cfg));

  // Unnormalised bucket sums of the text built so far.
  std::vector<double> current(cfg.dim, 0.0);
  double dot = 0.0, sq = 0.0;
  std::vector<std::string> chosen;
  for (std::size_t step = 0; step < length; ++step) {
    std::size_t best = 0;
    double best_cos = -2.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const auto [bucket, sign] = hashes[i];
      const double new_dot = dot + sign * target.components[bucket];
      const double new_sq = sq + 2.0 * sign * current[bucket] + 1.0;
      const double cos = new_sq > 0.0 ? new_dot / std::sqrt(new_sq) : 0.0;
      if (cos > best_cos) {
        best_cos = cos;
        best = i;
      }
    }
    const auto [bucket, sign] = hashes[best];
    dot += sign * target.components[bucket];
    sq += 2.0 * sign * current[bucket] + 1.0;
    current[bucket] += sign;
    chosen.push_back(vocab[best]);
  }

  PoisonDocument out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (i > 0) out.doc.text += ' ';
    out.doc.text += chosen[i];
  }
  if (id.empty()) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(Fnv1a64(out.doc.text)));
    id = buf;
  }
  out.doc.id = id.rfind("poison-", 0) == 0 ? id : "poison-" + id;
  out.doc.source_tag = "poison";
  out.target_similarity = CosineSimilarity(EmbedText(out.doc.text, cfg), target);
  return out;
}

// Poisoning succeeds iff some injected document is among the retrieved.
inline bool EvaluatePoison(std::string_view trigger_query,
                           const KnowledgeBase& kb_poisoned,
                           const std::set<std::string>& poison_ids,
                           const PipelineConfig& pipeline, uint64_t seed = 0,
                           uint64_t trial = 0) {
  for (const auto& id : poison_ids) {
    if (!kb_poisoned.contains(id)) throw Error(ErrorCode::kUnknownId, id);
  }
  if (pipeline.retriever.k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  const EmbeddingIndex index(kb_poisoned, pipeline.embed);
  const RetrievalResult r =
      Retrieve(trigger_query, index, pipeline.retriever, seed, trial);
  for (const auto& s : r.retrieved) {
    if (poison_ids.count(s.doc_id)) return true;
  }
  return false;
}

}  // namespace ragsec

#endif  // RAGSEC_ATTACKS_HPP_
