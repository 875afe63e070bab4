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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../fixtures.hpp"
#include "../test_util.hpp"
#include "ragsec/ragsec.hpp"

namespace ragsec {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

PipelineConfig Pipeline(Mechanism m, std::size_t k, double epsilon = 1.0) {
  PipelineConfig p;
  p.retriever.mechanism = m;
  p.retriever.k = k;
  p.retriever.dp.epsilon = epsilon;
  return p;
}

// Reference ranking built from scratch: signed bucket counts per token, the
// clamped cosine compared exactly as a rational (dot^2 / norms) in 128-bit
// integers, and a full sort with ties broken by id.
struct OracleEntry {
  std::string id;
  __int128 dot = 0;
  __int128 norm_product = 0;
  double score = 0.0;
};

std::vector<int64_t> Counts(const std::string& text, const EmbedderConfig& cfg) {
  std::vector<int64_t> c(cfg.dim, 0);
  for (const auto& t : Tokenize(text).tokens) {
    const TokenHash h = HashToken(t, cfg);
    c[h.bucket] += h.sign;
  }
  return c;
}

std::vector<OracleEntry> OracleRanking(const std::string& q, const KnowledgeBase& kb,
                                       const EmbedderConfig& cfg) {
  const auto qc = Counts(q, cfg);
  __int128 qq = 0;
  for (auto x : qc) qq += x * x;
  std::vector<OracleEntry> all;
  for (const auto& [id, doc] : kb) {
    const auto dc = Counts(doc.text, cfg);
    __int128 dot = 0, dd = 0;
    for (std::size_t i = 0; i < cfg.dim; ++i) {
      dot += qc[i] * dc[i];
      dd += dc[i] * dc[i];
    }
    OracleEntry e{id, dot, qq * dd, 0.0};
    if (dot <= 0 || e.norm_product == 0) {
      e.dot = 0;  // clamped to zero
      e.norm_product = 1;
    } else {
      e.score = static_cast<double>(dot) / std::sqrt(static_cast<double>(e.norm_product));
    }
    all.push_back(e);
  }
  // a > b  iff  a.dot^2 * b.norm > b.dot^2 * a.norm (both dots are >= 0).
  std::sort(all.begin(), all.end(), [](const OracleEntry& a, const OracleEntry& b) {
    const __int128 lhs = a.dot * a.dot * b.norm_product;
    const __int128 rhs = b.dot * b.dot * a.norm_product;
    if (lhs != rhs) return lhs > rhs;
    return a.id < b.id;
  });
  return all;
}

Outcome RetrievalOracle() {
  const EmbedderConfig cfg;
  std::mt19937_64 gen(1);
  std::size_t mismatches = 0, comparisons = 0;
  auto word = [&] { return "t" + std::to_string(gen() % 80); };
  for (int c = 0; c < 500; ++c) {
    std::vector<Document> docs;
    const std::size_t n = 1 + gen() % 50;
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      for (std::size_t w = 0, len = 3 + gen() % 8; w < len; ++w) text += word() + " ";
      docs.push_back(testing::Doc(Fmt("d%02zu", i), text));
    }
    const KnowledgeBase kb(docs);
    const EmbeddingIndex index(kb, cfg);
    std::string q;
    for (std::size_t w = 0, len = 1 + gen() % 6; w < len; ++w) q += word() + " ";
    const auto oracle = OracleRanking(q, kb, cfg);
    for (std::size_t k : {1, 3, 10}) {
      ++comparisons;
      const RetrievalResult r = RetrieveExact(q, index, k);
      const std::size_t expect = std::min(k, oracle.size());
      bool same = r.retrieved.size() == expect;
      for (std::size_t i = 0; same && i < expect; ++i) {
        same = r.retrieved[i].doc_id == oracle[i].id &&
               std::fabs(r.retrieved[i].score - oracle[i].score) < 1e-9;
      }
      mismatches += same ? 0 : 1;
    }
  }
  return {mismatches == 0, Fmt("mismatches=%zu/%zu", mismatches, comparisons)};
}

Outcome DpDegeneracy() {
  const EmbedderConfig cfg;
  const KnowledgeBase kb = testing::Kb({{"a", "red green blue cyan"},
                                        {"b", "red green blue pink"},
                                        {"c", "red green gold pink"},
                                        {"d", "red teal gold pink"},
                                        {"e", "navy teal gold pink"}});
  const std::string q = "red green blue cyan";
  const EmbeddingIndex index(kb, cfg);
  const auto scores = ScoreDocuments(EmbedText(q, cfg), index, 1.0);
  std::set<double> distinct;
  for (const auto& s : scores) distinct.insert(s.score);
  if (distinct.size() != scores.size()) return {false, "scores not distinct"};

  const auto exact = RetrieveExact(q, index, 2).ids();
  DpParams sharp;
  sharp.epsilon = 1e6;
  std::size_t matches = 0;
  for (uint64_t t = 0; t < 10000; ++t) {
    RandomStream rng = RandomStream::Substream(7, 1, t);
    matches += RetrieveDp(q, index, 2, sharp, rng).ids() == exact ? 1 : 0;
  }
  DpParams flat;
  flat.epsilon = 1e-3;
  std::map<std::string, std::size_t> picks;
  const std::size_t n = 100000;
  for (uint64_t t = 0; t < n; ++t) {
    RandomStream rng = RandomStream::Substream(7, 2, t);
    ++picks[RetrieveDp(q, index, 1, flat, rng).ids().front()];
  }
  double lo = 1.0, hi = 0.0;
  for (const auto& [id, doc] : kb) {
    const double f = static_cast<double>(picks[id]) / n;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  const bool pass = matches >= 9900 && lo >= 0.18 && hi <= 0.22;
  return {pass, Fmt("eps=1e6 match=%zu/10000; eps=1e-3 freq in [%.4f, %.4f]", matches,
                    lo, hi)};
}

Outcome DpAudit() {
  const KnowledgeBase kb = testing::DissimilarUniverse(5, {}, 4, 31);
  const std::string target = "u002";
  const std::string q = kb.at(target).text;  // target is the clear top-1
  const AuditReport dp =
      EmpiricalDpAudit(kb, target, Pipeline(Mechanism::kDp, 1, 1.0), q, 1, 100000, 5);
  const AuditReport exact =
      EmpiricalDpAudit(kb, target, Pipeline(Mechanism::kExact, 1), q, 1, 100000, 5);
  const bool pass = dp.epsilon_hat <= 1.2 && exact.delta_residual == 1.0;
  return {pass, Fmt("dp epsilon_hat=%.4f over %zu events (delta_residual=%.4f); "
                    "exact delta_residual=%.4f",
                    dp.epsilon_hat, dp.events_compared, dp.delta_residual,
                    exact.delta_residual)};
}

Outcome MiaSeparation() {
  const EmbedderConfig cfg;
  const KnowledgeBase universe = testing::DissimilarUniverse(40, cfg, 4, 2024);
  // Premise check: mutually dissimilar and self-nearest.
  const EmbeddingIndex index(universe, cfg);
  double max_cos = 0.0;
  bool self_nn = true;
  for (const auto& a : index.entries()) {
    for (const auto& b : index.entries()) {
      if (a.id != b.id) max_cos = std::max(max_cos, CosineSimilarity(a.vec, b.vec));
    }
    self_nn = self_nn && RetrieveExact(universe.at(a.id).text, index, 1).ids().front() == a.id;
  }
  if (max_cos >= 0.2 || !self_nn) return {false, "universe premise violated"};

  MiaConfig attack;
  attack.profile.access = Access::kWhiteBox;
  attack.strategy = MiaStrategy::kSelfQuery;
  const auto exact = EstimateAdvantage(
      RunMiaGame(universe, 20, attack, Pipeline(Mechanism::kExact, 2), 2000, 11));
  const auto dp = EstimateAdvantage(
      RunMiaGame(universe, 20, attack, Pipeline(Mechanism::kDp, 2, 0.05), 2000, 11));
  const bool pass = exact.advantage >= 0.45 && dp.advantage <= 0.15;
  return {pass, Fmt("exact advantage=%.4f; dp(eps=0.05) advantage=%.4f (max pairwise cos %.3f)",
                    exact.advantage, dp.advantage, max_cos)};
}

Outcome PostProcessing() {
  const KnowledgeBase universe = testing::DissimilarUniverse(40, {}, 4, 2024);
  MiaConfig white;
  white.profile.access = Access::kWhiteBox;
  MiaConfig black;
  black.profile.access = Access::kBlackBox;
  std::string detail;
  bool pass = true;
  for (const auto& [name, pipeline] :
       {std::pair<const char*, PipelineConfig>{"exact", Pipeline(Mechanism::kExact, 2)},
        {"dp", Pipeline(Mechanism::kDp, 2, 0.5)}}) {
    const auto r = RunMiaGame(universe, 20, white, pipeline, 2000, 99);
    const auto o = RunMiaGame(universe, 20, black, pipeline, 2000, 99);
    const PostProcessingComparison c = PostProcessingCheck(r, o);
    pass = pass && c.consistent;
    detail += Fmt("%s%s: adv_retrieval=%.4f adv_output=%.4f slack=%.4f", detail.empty() ? "" : "; ",
                  name, c.adv_retrieval, c.adv_output, c.ci_slack);
  }
  return {pass, detail};
}

Outcome LeakageDuality(const std::string& data_dir) {
  const KnowledgeBase kb = IngestCorpus(data_dir + "/corpus.jsonl");
  // 100 anchors: three consecutive tokens taken from successive documents.
  std::vector<std::string> anchors;
  std::vector<TokenSequence> tokens;
  for (const auto& [id, doc] : kb) tokens.push_back(Tokenize(doc.text));
  for (std::size_t i = 0; anchors.size() < 100; ++i) {
    const TokenSequence& t = tokens[i % tokens.size()];
    const std::size_t start = (i / tokens.size()) * 3 % (t.size() - 2);
    anchors.push_back(t.tokens[start] + " " + t.tokens[start + 1] + " " + t.tokens[start + 2]);
  }
  PipelineConfig pipeline = Pipeline(Mechanism::kExact, 2);
  pipeline.generator.compliant = true;
  LeakSettings leak;
  leak.tau = 0.7;
  leak.max_queries = 100;
  DefenseSettings defenses;
  defenses.output_filter = true;
  defenses.config.output_tau = 0.7;
  const LeakageResult r = RunLeakExperiment(kb, anchors, pipeline, leak, defenses, 1);
  const double filtered = r.filtered_success_rate.value_or(1.0);
  const bool pass = r.queries == 100 && r.success_rate == 1.0 && filtered == 0.0;
  return {pass, Fmt("queries=%zu success=%.3f filtered=%.3f", r.queries, r.success_rate,
                    filtered)};
}

std::string JoinTokens(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& t : v) out += (out.empty() ? "" : " ") + t;
  return out;
}

Outcome Poisoning() {
  const EmbedderConfig cfg;
  const testing::PoisonScenario s = testing::MakePoisonScenario(cfg, 20, 48, 6);
  // A fresh trigger; unlike the fixture's, its hash bucket is not screened.
  const std::string trigger = "zephyrquartz";
  std::vector<std::string> vocab{trigger};
  std::vector<std::vector<std::string>> doc_tokens;
  for (const auto& [id, doc] : s.benign) {
    doc_tokens.push_back(Tokenize(doc.text).tokens);
    if (HasToken(Tokenize(doc.text), trigger)) return {false, "trigger in benign doc"};
    vocab.insert(vocab.end(), doc_tokens.back().begin(), doc_tokens.back().end());
  }
  const PoisonDocument poison = CraftPoison({{trigger}}, vocab, 8, cfg);
  const KnowledgeBase poisoned = InsertDocuments(s.benign, {poison.doc});
  // Trigger-bearing queries: the trigger alone, with one benign word on
  // either side, and with two words taken from different benign documents.
  std::vector<std::string> queries;
  for (std::size_t d = 0; d < doc_tokens.size(); ++d) {
    const auto& t = doc_tokens[d];
    const auto& next = doc_tokens[(d + 1) % doc_tokens.size()];
    queries.push_back(trigger);
    queries.push_back(trigger + " " + t[1]);
    queries.push_back(t[2] + " " + trigger);
    queries.push_back(t[0] + " " + next[3] + " " + trigger);
  }
  const EmbeddingIndex index(poisoned, cfg);
  std::size_t top1 = 0;
  for (const auto& q : queries) {
    top1 += RetrieveExact(q, index, 1).ids().front() == poison.doc.id ? 1 : 0;
  }

  // Greedy against the exhaustive optimum, sequence length fixed.
  std::mt19937_64 gen(8);
  double worst = 1.0;
  std::size_t instances = 0;
  for (int round = 0; round < 300; ++round) {
    std::set<std::string> pool_set;
    while (pool_set.size() < 6) pool_set.insert("p" + std::to_string(gen() % 40));
    std::vector<std::string> vocab(pool_set.begin(), pool_set.end());
    TriggerSet triggers;
    for (std::size_t i = 0, m = 1 + gen() % 3; i < m; ++i) {
      triggers.tokens.insert(gen() % 2 ? vocab[gen() % 6] : "p" + std::to_string(gen() % 40));
    }
    TokenSequence trig;
    trig.tokens.assign(triggers.tokens.begin(), triggers.tokens.end());
    const EmbeddingVector target = Embed(trig, cfg);
    for (std::size_t length = 1; length <= 3; ++length) {
      const double greedy = CraftPoison(triggers, vocab, length, cfg).target_similarity;
      double best = -1.0;
      std::vector<std::size_t> idx(length, 0);
      while (true) {
        std::vector<std::string> seq;
        for (std::size_t i : idx) seq.push_back(vocab[i]);
        best = std::max(best, CosineSimilarity(EmbedText(JoinTokens(seq), cfg), target));
        std::size_t pos = 0;
        while (pos < length && ++idx[pos] == vocab.size()) idx[pos++] = 0;
        if (pos == length) break;
      }
      if (best > 0.0) {
        worst = std::min(worst, greedy / best);
        ++instances;
      }
    }
  }
  const bool pass = top1 == queries.size() && worst >= 0.95;
  return {pass, Fmt("top1=%zu/%zu; min greedy/optimum=%.4f over %zu instances", top1,
                    queries.size(), worst, instances)};
}

Outcome DefenseEfficacy() {
  const EmbedderConfig cfg;
  const testing::PoisonScenario s = testing::MakePoisonScenario(cfg);
  DefenseConfig defense;
  defense.entropy_threshold = 1.0;
  defense.query_sample_size = s.pool.size();
  const FilterReport report = ActivationFilter(s.poisoned, s.pool, 2, defense, cfg);
  std::size_t benign_retained = 0;
  for (const auto& [id, doc] : s.benign) benign_retained += report.flagged_doc_ids.count(id) ? 0 : 1;

  PipelineConfig pipeline = Pipeline(Mechanism::kExact, 2);
  KnowledgeBase filtered = s.poisoned;
  for (const auto& id : report.flagged_doc_ids) filtered = RemoveDocument(filtered, id);
  std::set<std::string> surviving;
  if (filtered.contains(s.poison_id)) surviving.insert(s.poison_id);
  std::size_t before = 0, after = 0;
  for (const auto& q : s.trigger_queries) {
    before += EvaluatePoison(q, s.poisoned, {s.poison_id}, pipeline) ? 1 : 0;
    after += EvaluatePoison(q, filtered, surviving, pipeline) ? 1 : 0;
  }
  const bool flagged = report.flagged_doc_ids.count(s.poison_id) > 0;
  const bool pass = s.pool.size() == 50 && s.trigger_queries.size() == 2 && flagged &&
                    benign_retained >= 8 && after == 0;
  return {pass, Fmt("poison flagged=%s benign retained=%zu/%zu success before=%zu/2 after=%zu/2",
                    flagged ? "yes" : "no", benign_retained, s.benign.size(), before, after)};
}

Outcome StatisticalSanity() {
  const KnowledgeBase universe = testing::DissimilarUniverse(10, {}, 4, 3);
  MiaConfig attack;
  attack.strategy = MiaStrategy::kCoinFlip;
  const auto transcripts = RunMiaGame(universe, 5, attack, {}, 10000, 2718);
  std::size_t ones = 0;
  for (const auto& t : transcripts) ones += t.b ? 1 : 0;
  const double coin = ones / 10000.0;
  const double adv = EstimateAdvantage(transcripts).advantage;

  RandomStream rng(4242);
  const double scale = 1.5;
  const std::size_t n = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.Laplace(scale);
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  const double expected_var = 2.0 * scale * scale;
  const double stderr_mean = std::sqrt(expected_var / n);
  const bool moments =
      std::fabs(mean) <= 3.0 * stderr_mean && std::fabs(var - expected_var) <= 0.05 * expected_var;
  const bool pass = coin >= 0.48 && coin <= 0.52 && adv <= 0.02 && moments;
  return {pass, Fmt("coin=%.4f random-guess advantage=%.4f laplace mean=%.5f (3se=%.5f) "
                    "var=%.4f (target %.4f)",
                    coin, adv, mean, 3.0 * stderr_mean, var, expected_var)};
}

Outcome Reproducibility(const std::string& data_dir) {
  testing::TempDir dir;
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"ingest-check", "report.json"}, {"mia", "mia.json"},
      {"leak", "leak.json"},           {"poison", "poison.json"},
      {"audit-dp", "audit.json"},      {"report", "report.json"}};
  std::size_t identical = 0;
  std::string failures;
  for (const auto& [verb, config] : runs) {
    std::string bodies[2];
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      const std::string out = dir.File(verb + std::to_string(i) + ".json");
      std::ostringstream sink_out, sink_err;
      ok = ok && Dispatch({verb, "--config", data_dir + "/" + config, "--seed", "1234",
                           "--out", out},
                          sink_out, sink_err) == 0;
      if (ok) bodies[i] = ReportBody(testing::ReadFile(out));
    }
    if (ok && bodies[0] == bodies[1]) {
      ++identical;
    } else {
      failures += " " + verb;
    }
  }
  return {identical == runs.size(),
          Fmt("identical=%zu/%zu%s%s", identical, runs.size(),
              failures.empty() ? "" : " failing:", failures.c_str())};
}

struct Criterion {
  int number;
  const char* name;
  double time_limit_s;  // 0: none
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace ragsec

int main() {
  using namespace ragsec;
  const std::string data_dir = RAGSEC_DATA_DIR;
  const std::vector<Criterion> criteria = {
      {1, "retrieval oracle equivalence", 10, RetrievalOracle},
      {2, "dp degeneracy", 60, DpDegeneracy},
      {3, "empirical dp audit", 120, DpAudit},
      {4, "membership inference separation", 120, MiaSeparation},
      {5, "post-processing consistency", 0, PostProcessing},
      {6, "leakage duality", 0, [&] { return LeakageDuality(data_dir); }},
      {7, "poisoning", 30, Poisoning},
      {8, "defense efficacy", 0, DefenseEfficacy},
      {9, "statistical sanity", 0, StatisticalSanity},
      {10, "reproducibility", 0, [&] { return Reproducibility(data_dir); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs >= c.time_limit_s) {
      o.pass = false;
      o.detail += Fmt("; over time limit %.0fs", c.time_limit_s);
    }
    std::printf("[%s] %2d %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", c.number, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
