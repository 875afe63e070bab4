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

#ifndef RAGSEC_TESTS_FIXTURES_HPP_
#define RAGSEC_TESTS_FIXTURES_HPP_

#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "ragsec/corpus.hpp"
#include "ragsec/attacks.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/random.hpp"

namespace ragsec::testing {

// Builds `n` documents whose pairwise cosine is below `max_cos` under `cfg`
// by rejection sampling over made-up words. Documents that embed to the zero
// vector are rejected, so each document is its own strict nearest neighbour.
inline KnowledgeBase DissimilarUniverse(std::size_t n, const EmbedderConfig& cfg,
                                        std::size_t words_per_doc, uint64_t seed,
                                        double max_cos = 0.2) {
  RandomStream rng(seed);
  std::vector<Document> docs;
  std::vector<EmbeddingVector> vecs;
  for (int attempt = 0; docs.size() < n; ++attempt) {
    if (attempt > 200000) throw std::runtime_error("could not build universe");
    std::string text;
    for (std::size_t w = 0; w < words_per_doc; ++w) {
      text += (w ? " " : "") + std::string("word") + std::to_string(rng.UniformIndex(100000));
    }
    text += ".";
    const EmbeddingVector v = EmbedText(text, cfg);
    bool ok = !v.is_zero();  // words can cancel out under hashing
    for (const auto& other : vecs) ok = ok && CosineSimilarity(v, other) < max_cos;
    if (!ok) continue;
    char id[16];
    std::snprintf(id, sizeof(id), "u%03zu", docs.size());
    Document d;
    d.id = id;
    d.text = text;
    docs.push_back(d);
    vecs.push_back(v);
  }
  return KnowledgeBase(docs);
}


// One crafted poison against nine benign documents, with a 50-query pool of
// 48 benign queries (each built from words of one benign document) and two
// queries that contain the trigger. The trigger is chosen so that its hash
// bucket is not used by any benign word.
struct PoisonScenario {
  KnowledgeBase benign;
  KnowledgeBase poisoned;
  std::string poison_id;
  std::string trigger;
  std::vector<std::string> pool;
  std::vector<std::string> trigger_queries;
};

inline PoisonScenario MakePoisonScenario(const EmbedderConfig& cfg,
                                         std::size_t benign_docs = 9,
                                         std::size_t benign_queries = 48,
                                         std::size_t words_per_doc = 6) {
  PoisonScenario s;
  std::vector<std::vector<std::string>> words(benign_docs);
  std::vector<Document> docs;
  std::vector<bool> used_bucket(cfg.dim, false);
  for (std::size_t d = 0; d < benign_docs; ++d) {
    Document doc;
    doc.id = "b" + std::to_string(d);
    for (std::size_t w = 0; w < words_per_doc; ++w) {
      words[d].push_back("topic" + std::to_string(d) + "w" + std::to_string(w));
      doc.text += (w ? " " : "") + words[d].back();
      used_bucket[HashToken(words[d].back(), cfg).bucket] = true;
    }
    doc.text += ".";
    docs.push_back(doc);
  }
  s.benign = KnowledgeBase(docs);
  for (std::size_t q = 0; q < benign_queries; ++q) {
    const auto& w = words[q % benign_docs];
    const std::size_t i = (q / benign_docs) % w.size();
    s.pool.push_back(w[i] + " " + w[(i + 1) % w.size()]);
  }
  for (int c = 0;; ++c) {
    const std::string t = "trig" + std::to_string(c);
    if (!used_bucket[HashToken(t, cfg).bucket]) {
      s.trigger = t;
      break;
    }
  }
  std::vector<std::string> vocab{s.trigger};
  for (const auto& ws : words) vocab.insert(vocab.end(), ws.begin(), ws.end());
  const PoisonDocument poison = CraftPoison({{s.trigger}}, vocab, 8, cfg);
  s.poison_id = poison.doc.id;
  s.poisoned = InsertDocuments(s.benign, {poison.doc});
  s.trigger_queries = {s.trigger + " " + words[0][0],
                       words[benign_docs / 2][1] + " " + s.trigger};
  s.pool.insert(s.pool.end(), s.trigger_queries.begin(), s.trigger_queries.end());
  return s;
}

}  // namespace ragsec::testing

#endif  // RAGSEC_TESTS_FIXTURES_HPP_
