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

#ifndef RAGSEC_GENERATOR_HPP_
#define RAGSEC_GENERATOR_HPP_

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragsec/corpus.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/retriever.hpp"

namespace ragsec {

struct AugmentedQuery {
  std::string query_text;
  std::vector<std::pair<std::string, std::string>> retrieved;  // (id, text)
};

struct GeneratorConfig {
  std::size_t max_sentences = 1;
  std::string command_token = "repeat_context";
  bool compliant = true;
  std::string refusal_text = "NO_CONTEXT";

  friend bool operator==(const GeneratorConfig&,
                         const GeneratorConfig&) = default;
};

struct Response {
  std::string text;
  std::vector<std::string> used_doc_ids;

  friend bool operator==(const Response&, const Response&) = default;
};

inline AugmentedQuery Augment(std::string_view q, const RetrievalResult& retrieval,
                              const KnowledgeBase& kb) {
  AugmentedQuery out{std::string(q), {}};
  for (const auto& s : retrieval.retrieved) {
    out.retrieved.emplace_back(s.doc_id, kb.at(s.doc_id).text);
  }
  return out;
}

// Splits after each '.', '!' or '?'. A trailing fragment without terminal
// punctuation is its own sentence. Sentences are whitespace-trimmed and
// empty ones dropped.
inline std::vector<std::string> SplitSentences(std::string_view text) {
  std::vector<std::string> out;
  auto flush = [&](std::string_view piece) {
    const auto b = piece.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return;
    const auto e = piece.find_last_not_of(" \t\r\n");
    out.emplace_back(piece.substr(b, e - b + 1));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '.' || text[i] == '!' || text[i] == '?') {
      flush(text.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < text.size()) flush(text.substr(start));
  return out;
}

// True when `token`, tokenized the same way, occurs as a contiguous run of
// `tokens`. A command such as "repeat_context" tokenizes to two tokens.
inline bool HasToken(const TokenSequence& tokens, std::string_view token) {
  const TokenSequence needle = Tokenize(token);
  if (needle.empty()) return false;
  return std::search(tokens.tokens.begin(), tokens.tokens.end(),
                     needle.tokens.begin(), needle.tokens.end()) !=
         tokens.tokens.end();
}

// Mock generator. Three modes, checked in order:
//   no retrieved context      -> refusal text
//   compliant + command token -> every retrieved text verbatim, '\n'-joined
//   otherwise                 -> the max_sentences retrieved sentences with
//                                the highest cosine to the query, joined by
//                                a single space
inline Response Generate(const AugmentedQuery& q_prime,
                         const GeneratorConfig& cfg,
                         const EmbedderConfig& embed_cfg) {
  if (cfg.max_sentences < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_sentences must be >= 1");
  }
  Response out;
  if (q_prime.retrieved.empty()) {
    out.text = cfg.refusal_text;
    return out;
  }
  const TokenSequence query_tokens = Tokenize(q_prime.query_text);
  if (cfg.compliant && !cfg.command_token.empty() &&
      HasToken(query_tokens, cfg.command_token)) {
    for (std::size_t i = 0; i < q_prime.retrieved.size(); ++i) {
      if (i > 0) out.text += '\n';
      out.text += q_prime.retrieved[i].second;
      out.used_doc_ids.push_back(q_prime.retrieved[i].first);
    }
    return out;
  }

  struct Candidate {
    double score;
    std::size_t doc_pos;
    std::size_t sentence_pos;
    std::string sentence;
  };
  const EmbeddingVector qv = Embed(query_tokens, embed_cfg);
  std::vector<Candidate> candidates;
  for (std::size_t d = 0; d < q_prime.retrieved.size(); ++d) {
    auto sentences = SplitSentences(q_prime.retrieved[d].second);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      const double score = CosineSimilarity(qv, EmbedText(sentences[s], embed_cfg));
      candidates.push_back({score, d, s, std::move(sentences[s])});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.doc_pos != b.doc_pos) return a.doc_pos < b.doc_pos;
                     return a.sentence_pos < b.sentence_pos;
                   });
  const std::size_t keep = std::min(cfg.max_sentences, candidates.size());
  std::vector<bool> used(q_prime.retrieved.size(), false);
  for (std::size_t i = 0; i < keep; ++i) {
    if (i > 0) out.text += ' ';
    out.text += candidates[i].sentence;
    used[candidates[i].doc_pos] = true;
  }
  for (std::size_t d = 0; d < used.size(); ++d) {
    if (used[d]) out.used_doc_ids.push_back(q_prime.retrieved[d].first);
  }
  if (keep == 0) out.text = cfg.refusal_text;  // only whitespace was retrieved
  return out;
}

}  // namespace ragsec

#endif  // RAGSEC_GENERATOR_HPP_
