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

#ifndef RAGSEC_EXPERIMENT_HPP_
#define RAGSEC_EXPERIMENT_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ragsec/attacks.hpp"
#include "ragsec/corpus.hpp"
#include "ragsec/defenses.hpp"
#include "ragsec/embedding.hpp"
#include "ragsec/error.hpp"
#include "ragsec/evaluation.hpp"
#include "ragsec/generator.hpp"
#include "ragsec/retriever.hpp"

namespace ragsec {

using Json = nlohmann::ordered_json;

enum class Verb { kIngestCheck, kMia, kLeak, kPoison, kAuditDp, kReport };

inline std::string VerbName(Verb v) {
  switch (v) {
    case Verb::kIngestCheck: return "ingest-check";
    case Verb::kMia: return "mia";
    case Verb::kLeak: return "leak";
    case Verb::kPoison: return "poison";
    case Verb::kAuditDp: return "audit-dp";
    case Verb::kReport: return "report";
  }
  return "unknown";
}

inline std::optional<Verb> ParseVerb(const std::string& s) {
  for (Verb v : {Verb::kIngestCheck, Verb::kMia, Verb::kLeak, Verb::kPoison,
                 Verb::kAuditDp, Verb::kReport}) {
    if (VerbName(v) == s) return v;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct MiaSettings {
  std::size_t kb_size = 20;
  std::size_t trials = 2000;
  std::size_t shadow_trials = 500;
  bool post_processing = false;
  MiaConfig attack;
};

struct LeakSettings {
  double tau = 0.7;
  std::size_t max_queries = 100;
};

struct PoisonSettings {
  TriggerSet triggers;
  std::size_t length = 8;
  std::vector<std::string> vocab;  // empty: corpus tokens plus triggers
};

struct AuditSettings {
  std::string target_id;
  std::string query;
  std::size_t trials = 10000;
  std::optional<std::size_t> k;
};

struct DefenseSettings {
  DefenseConfig config;
  bool output_filter = false;
  bool activation_filter = false;
  bool smoothing = false;
};

struct ExperimentConfig {
  std::string corpus_path;      // resolved against the config directory
  std::string query_pool_path;  // optional
  PipelineConfig pipeline;
  std::optional<MiaSettings> mia;
  std::optional<LeakSettings> leak;
  std::optional<PoisonSettings> poison;
  std::optional<AuditSettings> audit;
  DefenseSettings defenses;
  Json echo;  // the config document as written
};

namespace internal {

[[noreturn]] inline void ConfigFail(const std::string& field,
                                    const std::string& what) {
  throw Error(ErrorCode::kConfig, field + ": " + what);
}

inline void RejectUnknownKeys(const Json& obj, const std::string& path,
                              std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) ConfigFail(path.empty() ? "<root>" : path, "must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) ConfigFail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

inline std::string Join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

template <typename T>
T Field(const Json& obj, const std::string& path, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const std::exception&) {
    ConfigFail(Join(path, key), "wrong type");
  }
}

inline std::size_t Count(const Json& obj, const std::string& path,
                         const char* key, std::size_t fallback,
                         std::size_t minimum) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) ConfigFail(Join(path, key), "must be an integer");
  const long long x = v.get<long long>();
  if (x < static_cast<long long>(minimum)) {
    ConfigFail(Join(path, key),
               std::string(key) + " must be >= " + std::to_string(minimum));
  }
  return static_cast<std::size_t>(x);
}

inline std::string Choice(const Json& obj, const std::string& path,
                          const char* key, const std::string& fallback,
                          std::initializer_list<const char*> options) {
  const std::string v = Field<std::string>(obj, path, key, fallback);
  for (const char* o : options) {
    if (v == o) return v;
  }
  std::string expected;
  for (const char* o : options) expected += (expected.empty() ? "" : "|") + std::string(o);
  ConfigFail(Join(path, key), "expected one of " + expected);
}

inline std::string ResolvePath(const std::filesystem::path& base,
                               const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace internal

// Parses and validates an experiment config. Every failure is a ConfigError
// naming the offending field.
inline ExperimentConfig ParseExperimentConfig(const Json& doc,
                                              const std::filesystem::path& base_dir) {
  using namespace internal;
  RejectUnknownKeys(doc, "",
                    {"corpus", "query_pool", "embedder", "retriever", "generator",
                     "mia", "leak", "poison", "audit", "defenses"});
  ExperimentConfig cfg;
  cfg.echo = doc;

  if (!doc.contains("corpus")) ConfigFail("corpus", "required");
  cfg.corpus_path = ResolvePath(base_dir, Field<std::string>(doc, "", "corpus", ""));
  if (!std::filesystem::exists(cfg.corpus_path)) {
    ConfigFail("corpus", "file not found: " + cfg.corpus_path);
  }
  if (doc.contains("query_pool")) {
    cfg.query_pool_path =
        ResolvePath(base_dir, Field<std::string>(doc, "", "query_pool", ""));
    if (!std::filesystem::exists(cfg.query_pool_path)) {
      ConfigFail("query_pool", "file not found: " + cfg.query_pool_path);
    }
  }

  const Json empty = Json::object();
  {
    const Json& e = doc.contains("embedder") ? doc["embedder"] : empty;
    RejectUnknownKeys(e, "embedder", {"dim", "hash_seed"});
    cfg.pipeline.embed.dim = Count(e, "embedder", "dim", 64, 2);
    cfg.pipeline.embed.hash_seed = Field<uint64_t>(e, "embedder", "hash_seed", 0);
  }
  {
    const Json& r = doc.contains("retriever") ? doc["retriever"] : empty;
    RejectUnknownKeys(r, "retriever", {"mechanism", "k", "dp"});
    cfg.pipeline.retriever.mechanism =
        Choice(r, "retriever", "mechanism", "exact", {"exact", "dp"}) == "dp"
            ? Mechanism::kDp
            : Mechanism::kExact;
    cfg.pipeline.retriever.k = Count(r, "retriever", "k", 3, 1);
    const Json& d = r.contains("dp") ? r["dp"] : empty;
    RejectUnknownKeys(d, "retriever.dp", {"epsilon", "delta", "clip_bound", "noise"});
    DpParams& dp = cfg.pipeline.retriever.dp;
    dp.epsilon = Field<double>(d, "retriever.dp", "epsilon", 1.0);
    dp.delta = Field<double>(d, "retriever.dp", "delta", 0.0);
    dp.clip_bound = Field<double>(d, "retriever.dp", "clip_bound", 1.0);
    dp.noise_family = Choice(d, "retriever.dp", "noise", "laplace",
                             {"laplace", "gaussian"}) == "gaussian"
                          ? NoiseFamily::kGaussian
                          : NoiseFamily::kLaplace;
    try {
      ValidateDpParams(dp);
    } catch (const Error& e) {
      ConfigFail("retriever.dp", e.detail());
    }
  }
  {
    const Json& g = doc.contains("generator") ? doc["generator"] : empty;
    RejectUnknownKeys(g, "generator",
                      {"max_sentences", "command_token", "compliant", "refusal_text"});
    GeneratorConfig& gen = cfg.pipeline.generator;
    gen.max_sentences = Count(g, "generator", "max_sentences", 1, 1);
    gen.command_token =
        Field<std::string>(g, "generator", "command_token", gen.command_token);
    gen.compliant = Field<bool>(g, "generator", "compliant", gen.compliant);
    gen.refusal_text =
        Field<std::string>(g, "generator", "refusal_text", gen.refusal_text);
  }
  if (doc.contains("mia")) {
    const Json& m = doc["mia"];
    RejectUnknownKeys(m, "mia",
                      {"kb_size", "trials", "shadow_trials", "adversary",
                       "strategy", "threshold", "post_processing"});
    MiaSettings s;
    s.kb_size = Count(m, "mia", "kb_size", 20, 1);
    s.trials = Count(m, "mia", "trials", 2000, 1);
    s.shadow_trials = Count(m, "mia", "shadow_trials", 500, 1);
    s.post_processing = Field<bool>(m, "mia", "post_processing", false);
    const Json& a = m.contains("adversary") ? m["adversary"] : empty;
    RejectUnknownKeys(a, "mia.adversary", {"access", "knowledge"});
    s.attack.profile.access =
        Choice(a, "mia.adversary", "access", "white_box",
               {"black_box", "white_box"}) == "white_box"
            ? Access::kWhiteBox
            : Access::kBlackBox;
    s.attack.profile.knowledge =
        Choice(a, "mia.adversary", "knowledge", "normal",
               {"normal", "informed"}) == "informed"
            ? Knowledge::kInformed
            : Knowledge::kNormal;
    const std::string strategy =
        Choice(m, "mia", "strategy", "self_query",
               {"self_query", "blind", "constant_one", "coin_flip"});
    s.attack.strategy = strategy == "blind"          ? MiaStrategy::kBlind
                        : strategy == "constant_one" ? MiaStrategy::kConstantOne
                        : strategy == "coin_flip"    ? MiaStrategy::kCoinFlip
                                                     : MiaStrategy::kSelfQuery;
    s.attack.threshold = Field<double>(m, "mia", "threshold", 0.5);
    if (!(s.attack.threshold >= 0.0 && s.attack.threshold <= 1.0)) {
      ConfigFail("mia.threshold", "must be in [0, 1]");
    }
    if (s.attack.strategy == MiaStrategy::kBlind && cfg.query_pool_path.empty()) {
      ConfigFail("query_pool", "required by mia.strategy=blind");
    }
    cfg.mia = s;
  }
  if (doc.contains("leak")) {
    const Json& l = doc["leak"];
    RejectUnknownKeys(l, "leak", {"tau", "max_queries"});
    LeakSettings s;
    s.tau = Field<double>(l, "leak", "tau", 0.7);
    if (!(s.tau > 0.0 && s.tau <= 1.0)) ConfigFail("leak.tau", "must be in (0, 1]");
    s.max_queries = Count(l, "leak", "max_queries", 100, 1);
    if (cfg.query_pool_path.empty()) ConfigFail("query_pool", "required by leak");
    cfg.leak = s;
  }
  if (doc.contains("poison")) {
    const Json& p = doc["poison"];
    RejectUnknownKeys(p, "poison", {"triggers", "length", "vocab"});
    PoisonSettings s;
    const auto triggers =
        Field<std::vector<std::string>>(p, "poison", "triggers", {});
    s.triggers.tokens.insert(triggers.begin(), triggers.end());
    try {
      ValidateTriggerSet(s.triggers);
    } catch (const Error& e) {
      ConfigFail("poison.triggers", e.what());
    }
    s.length = Count(p, "poison", "length", 8, 1);
    s.vocab = Field<std::vector<std::string>>(p, "poison", "vocab", {});
    if (cfg.query_pool_path.empty()) ConfigFail("query_pool", "required by poison");
    cfg.poison = s;
  }
  if (doc.contains("audit")) {
    const Json& a = doc["audit"];
    RejectUnknownKeys(a, "audit", {"target_id", "query", "trials", "k"});
    AuditSettings s;
    if (!a.contains("target_id")) ConfigFail("audit.target_id", "required");
    if (!a.contains("query")) ConfigFail("audit.query", "required");
    s.target_id = Field<std::string>(a, "audit", "target_id", "");
    s.query = Field<std::string>(a, "audit", "query", "");
    s.trials = Count(a, "audit", "trials", 10000, 1000);
    if (a.contains("k")) s.k = Count(a, "audit", "k", 1, 1);
    cfg.audit = s;
  }
  if (doc.contains("defenses")) {
    const Json& d = doc["defenses"];
    RejectUnknownKeys(d, "defenses",
                      {"output_filter", "activation_filter", "smoothing"});
    DefenseSettings& s = cfg.defenses;
    if (d.contains("output_filter")) {
      const Json& o = d["output_filter"];
      RejectUnknownKeys(o, "defenses.output_filter", {"output_tau"});
      s.output_filter = true;
      s.config.output_tau =
          Field<double>(o, "defenses.output_filter", "output_tau", 0.7);
    }
    if (d.contains("activation_filter")) {
      const Json& a = d["activation_filter"];
      RejectUnknownKeys(a, "defenses.activation_filter",
                        {"entropy_threshold", "query_sample_size"});
      s.activation_filter = true;
      s.config.entropy_threshold =
          Field<double>(a, "defenses.activation_filter", "entropy_threshold", 1.0);
      s.config.query_sample_size =
          Count(a, "defenses.activation_filter", "query_sample_size", 50, 2);
    }
    if (d.contains("smoothing")) {
      const Json& m = d["smoothing"];
      RejectUnknownKeys(m, "defenses.smoothing", {"kappa"});
      s.smoothing = true;
      s.config.sharpness_kappa = Field<double>(m, "defenses.smoothing", "kappa", 2.0);
    }
    try {
      ValidateDefenseConfig(s.config);
    } catch (const Error& e) {
      ConfigFail("defenses", e.what());
    }
  }
  return cfg;
}

inline ExperimentConfig LoadExperimentConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "config: cannot read " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config: invalid JSON: ") + e.what());
  }
  return ParseExperimentConfig(
      doc, std::filesystem::absolute(path).parent_path());
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

struct CorpusSummary {
  std::size_t documents = 0;
  std::size_t sensitive_documents = 0;
  std::size_t sensitive_spans = 0;
  std::map<std::string, std::size_t> source_tags;
  std::size_t query_pool_size = 0;

  friend bool operator==(const CorpusSummary&, const CorpusSummary&) = default;
};

struct MiaResult {
  std::string adversary;  // taxonomy label
  std::string strategy;
  double threshold = 0.0;
  std::size_t kb_size = 0;
  double b1_fraction = 0.0;
  AdvantageEstimate estimate;
  // Present when the paired retrieval-level / output-level run was requested.
  std::optional<AdvantageEstimate> retrieval_level;
  std::optional<AdvantageEstimate> output_level;
  std::optional<bool> post_processing_consistent;

  friend bool operator==(const MiaResult&, const MiaResult&) = default;
};

struct LeakageResult {
  double tau = 0.0;
  std::size_t queries = 0;
  double success_rate = 0.0;
  double sensitive_success_rate = 0.0;
  double mean_max_similarity = 0.0;
  std::optional<double> filtered_success_rate;

  friend bool operator==(const LeakageResult&, const LeakageResult&) = default;
};

struct ActivationDefenseResult {
  std::vector<std::string> flagged_doc_ids;
  bool poison_flagged = false;
  std::size_t benign_retained = 0;
  double post_filter_success_rate = 0.0;

  friend bool operator==(const ActivationDefenseResult&,
                         const ActivationDefenseResult&) = default;
};

struct PoisonResult {
  std::string poison_id;
  std::string poison_text;
  double target_similarity = 0.0;
  std::size_t trigger_queries = 0;
  double success_rate = 0.0;
  std::size_t clean_queries = 0;
  double clean_hit_rate = 0.0;
  std::optional<ActivationDefenseResult> activation_filter;
  std::optional<double> smoothed_success_rate;

  friend bool operator==(const PoisonResult&, const PoisonResult&) = default;
};

struct AuditResult {
  std::string target_id;
  std::string query;
  std::size_t k = 0;
  std::string mechanism;
  std::optional<PrivacyAccount> privacy;
  AuditReport report;

  friend bool operator==(const AuditResult&, const AuditResult&) = default;
};

struct ExperimentReport {
  std::string verb;
  Json config_echo;
  uint64_t seed = 0;
  std::optional<CorpusSummary> corpus;
  std::optional<MiaResult> mia;
  std::optional<LeakageResult> leakage;
  std::optional<PoisonResult> poisoning;
  std::optional<AuditResult> audit;
  double wall_time = 0.0;  // seconds; excluded from reproducibility checks

  friend bool operator==(const ExperimentReport&,
                         const ExperimentReport&) = default;
};

inline void to_json(Json& j, const AdvantageEstimate& e) {
  j = Json{{"advantage", e.advantage}, {"accuracy", e.accuracy},
           {"trials", e.trials},       {"ci_low", e.ci_low},
           {"ci_high", e.ci_high}};
}
inline void from_json(const Json& j, AdvantageEstimate& e) {
  j.at("advantage").get_to(e.advantage);
  j.at("accuracy").get_to(e.accuracy);
  j.at("trials").get_to(e.trials);
  j.at("ci_low").get_to(e.ci_low);
  j.at("ci_high").get_to(e.ci_high);
}

inline void to_json(Json& j, const PrivacyAccount& p) {
  j = Json{{"epsilon_total", p.epsilon_total}, {"delta_total", p.delta_total}};
}
inline void from_json(const Json& j, PrivacyAccount& p) {
  j.at("epsilon_total").get_to(p.epsilon_total);
  j.at("delta_total").get_to(p.delta_total);
}

namespace internal {

template <typename T>
void PutOptional(Json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}
template <typename T>
void GetOptional(const Json& j, const char* key, std::optional<T>& v) {
  if (j.contains(key)) v = j.at(key).get<T>();
}

}  // namespace internal

inline void to_json(Json& j, const CorpusSummary& c) {
  j = Json{{"documents", c.documents},
           {"sensitive_documents", c.sensitive_documents},
           {"sensitive_spans", c.sensitive_spans},
           {"source_tags", c.source_tags},
           {"query_pool_size", c.query_pool_size}};
}
inline void from_json(const Json& j, CorpusSummary& c) {
  j.at("documents").get_to(c.documents);
  j.at("sensitive_documents").get_to(c.sensitive_documents);
  j.at("sensitive_spans").get_to(c.sensitive_spans);
  j.at("source_tags").get_to(c.source_tags);
  j.at("query_pool_size").get_to(c.query_pool_size);
}

inline void to_json(Json& j, const MiaResult& m) {
  j = Json{{"adversary", m.adversary},     {"strategy", m.strategy},
           {"threshold", m.threshold},     {"kb_size", m.kb_size},
           {"b1_fraction", m.b1_fraction}, {"estimate", m.estimate}};
  internal::PutOptional(j, "retrieval_level", m.retrieval_level);
  internal::PutOptional(j, "output_level", m.output_level);
  internal::PutOptional(j, "post_processing_consistent",
                        m.post_processing_consistent);
}
inline void from_json(const Json& j, MiaResult& m) {
  j.at("adversary").get_to(m.adversary);
  j.at("strategy").get_to(m.strategy);
  j.at("threshold").get_to(m.threshold);
  j.at("kb_size").get_to(m.kb_size);
  j.at("b1_fraction").get_to(m.b1_fraction);
  j.at("estimate").get_to(m.estimate);
  internal::GetOptional(j, "retrieval_level", m.retrieval_level);
  internal::GetOptional(j, "output_level", m.output_level);
  internal::GetOptional(j, "post_processing_consistent",
                        m.post_processing_consistent);
}

inline void to_json(Json& j, const LeakageResult& l) {
  j = Json{{"tau", l.tau},
           {"queries", l.queries},
           {"success_rate", l.success_rate},
           {"sensitive_success_rate", l.sensitive_success_rate},
           {"mean_max_similarity", l.mean_max_similarity}};
  internal::PutOptional(j, "filtered_success_rate", l.filtered_success_rate);
}
inline void from_json(const Json& j, LeakageResult& l) {
  j.at("tau").get_to(l.tau);
  j.at("queries").get_to(l.queries);
  j.at("success_rate").get_to(l.success_rate);
  j.at("sensitive_success_rate").get_to(l.sensitive_success_rate);
  j.at("mean_max_similarity").get_to(l.mean_max_similarity);
  internal::GetOptional(j, "filtered_success_rate", l.filtered_success_rate);
}

inline void to_json(Json& j, const ActivationDefenseResult& a) {
  j = Json{{"flagged_doc_ids", a.flagged_doc_ids},
           {"poison_flagged", a.poison_flagged},
           {"benign_retained", a.benign_retained},
           {"post_filter_success_rate", a.post_filter_success_rate}};
}
inline void from_json(const Json& j, ActivationDefenseResult& a) {
  j.at("flagged_doc_ids").get_to(a.flagged_doc_ids);
  j.at("poison_flagged").get_to(a.poison_flagged);
  j.at("benign_retained").get_to(a.benign_retained);
  j.at("post_filter_success_rate").get_to(a.post_filter_success_rate);
}

inline void to_json(Json& j, const PoisonResult& p) {
  j = Json{{"poison_id", p.poison_id},
           {"poison_text", p.poison_text},
           {"target_similarity", p.target_similarity},
           {"trigger_queries", p.trigger_queries},
           {"success_rate", p.success_rate},
           {"clean_queries", p.clean_queries},
           {"clean_hit_rate", p.clean_hit_rate}};
  internal::PutOptional(j, "activation_filter", p.activation_filter);
  internal::PutOptional(j, "smoothed_success_rate", p.smoothed_success_rate);
}
inline void from_json(const Json& j, PoisonResult& p) {
  j.at("poison_id").get_to(p.poison_id);
  j.at("poison_text").get_to(p.poison_text);
  j.at("target_similarity").get_to(p.target_similarity);
  j.at("trigger_queries").get_to(p.trigger_queries);
  j.at("success_rate").get_to(p.success_rate);
  j.at("clean_queries").get_to(p.clean_queries);
  j.at("clean_hit_rate").get_to(p.clean_hit_rate);
  internal::GetOptional(j, "activation_filter", p.activation_filter);
  internal::GetOptional(j, "smoothed_success_rate", p.smoothed_success_rate);
}

inline void to_json(Json& j, const AuditReport& a) {
  Json events = Json::object();
  for (const auto& [event, c] : a.per_event_counts) {
    events[event] = Json::array({c.first, c.second});
  }
  j = Json{{"epsilon_hat", a.epsilon_hat},
           {"delta_residual", a.delta_residual},
           {"events_compared", a.events_compared},
           {"trials", a.trials},
           {"per_event_counts", std::move(events)}};
}
inline void from_json(const Json& j, AuditReport& a) {
  j.at("epsilon_hat").get_to(a.epsilon_hat);
  j.at("delta_residual").get_to(a.delta_residual);
  j.at("events_compared").get_to(a.events_compared);
  j.at("trials").get_to(a.trials);
  a.per_event_counts.clear();
  for (const auto& [event, c] : j.at("per_event_counts").items()) {
    a.per_event_counts[event] = {c.at(0).get<std::size_t>(),
                                 c.at(1).get<std::size_t>()};
  }
}

inline void to_json(Json& j, const AuditResult& a) {
  j = Json{{"target_id", a.target_id},
           {"query", a.query},
           {"k", a.k},
           {"mechanism", a.mechanism}};
  internal::PutOptional(j, "privacy", a.privacy);
  j["report"] = a.report;
}
inline void from_json(const Json& j, AuditResult& a) {
  j.at("target_id").get_to(a.target_id);
  j.at("query").get_to(a.query);
  j.at("k").get_to(a.k);
  j.at("mechanism").get_to(a.mechanism);
  internal::GetOptional(j, "privacy", a.privacy);
  j.at("report").get_to(a.report);
}

inline void to_json(Json& j, const ExperimentReport& r) {
  j = Json{{"verb", r.verb}, {"seed", r.seed}, {"config_echo", r.config_echo}};
  internal::PutOptional(j, "corpus", r.corpus);
  internal::PutOptional(j, "mia", r.mia);
  internal::PutOptional(j, "leakage", r.leakage);
  internal::PutOptional(j, "poisoning", r.poisoning);
  internal::PutOptional(j, "audit", r.audit);
  j["wall_time"] = r.wall_time;
}
inline void from_json(const Json& j, ExperimentReport& r) {
  j.at("verb").get_to(r.verb);
  j.at("seed").get_to(r.seed);
  r.config_echo = j.at("config_echo");
  internal::GetOptional(j, "corpus", r.corpus);
  internal::GetOptional(j, "mia", r.mia);
  internal::GetOptional(j, "leakage", r.leakage);
  internal::GetOptional(j, "poisoning", r.poisoning);
  internal::GetOptional(j, "audit", r.audit);
  j.at("wall_time").get_to(r.wall_time);
}

inline std::string SerializeReport(const ExperimentReport& r) {
  return Json(r).dump(2) + "\n";
}

inline ExperimentReport ParseReport(const std::string& text) {
  return Json::parse(text).get<ExperimentReport>();
}

// The report without wall_time; two runs with the same config and seed
// produce identical bodies.
inline std::string ReportBody(const std::string& serialized) {
  Json j = Json::parse(serialized);
  j.erase("wall_time");
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

inline std::string StrategyName(MiaStrategy s) {
  switch (s) {
    case MiaStrategy::kSelfQuery: return "self_query";
    case MiaStrategy::kBlind: return "blind";
    case MiaStrategy::kConstantOne: return "constant_one";
    case MiaStrategy::kCoinFlip: return "coin_flip";
  }
  return "unknown";
}

inline CorpusSummary SummarizeCorpus(const KnowledgeBase& kb,
                                     std::size_t query_pool_size) {
  CorpusSummary s;
  s.documents = kb.size();
  for (const auto& [id, doc] : kb) {
    s.sensitive_documents += doc.sensitive ? 1 : 0;
    s.sensitive_spans += doc.sensitive_spans.size();
    ++s.source_tags[doc.source_tag];
  }
  s.query_pool_size = query_pool_size;
  return s;
}

inline MiaResult RunMiaExperiment(const KnowledgeBase& universe,
                                  const std::vector<std::string>& pool,
                                  const PipelineConfig& pipeline,
                                  MiaSettings settings, uint64_t seed) {
  settings.attack.query_pool = pool;
  if (settings.attack.profile.knowledge == Knowledge::kInformed &&
      (settings.attack.strategy == MiaStrategy::kSelfQuery ||
       settings.attack.strategy == MiaStrategy::kBlind)) {
    settings.attack.threshold =
        CalibrateFromShadowGame(universe, settings.kb_size, settings.attack,
                                pipeline, settings.shadow_trials, seed);
  }
  const auto transcripts = RunMiaGame(universe, settings.kb_size, settings.attack,
                                      pipeline, settings.trials, seed);
  MiaResult r;
  r.adversary = std::string(TaxonomyLabel(settings.attack.profile));
  r.strategy = StrategyName(settings.attack.strategy);
  r.threshold = settings.attack.threshold;
  r.kb_size = settings.kb_size;
  std::size_t b1 = 0;
  for (const auto& t : transcripts) b1 += t.b ? 1 : 0;
  r.b1_fraction = static_cast<double>(b1) / static_cast<double>(transcripts.size());
  r.estimate = EstimateAdvantage(transcripts);
  if (settings.post_processing) {
    MiaConfig retrieval_side = settings.attack;
    retrieval_side.profile.access = Access::kWhiteBox;
    MiaConfig output_side = settings.attack;
    output_side.profile.access = Access::kBlackBox;
    const auto a = RunMiaGame(universe, settings.kb_size, retrieval_side,
                              pipeline, settings.trials, seed);
    const auto b = RunMiaGame(universe, settings.kb_size, output_side, pipeline,
                              settings.trials, seed);
    const PostProcessingComparison c = PostProcessingCheck(a, b);
    r.retrieval_level = EstimateAdvantage(a);
    r.output_level = EstimateAdvantage(b);
    r.post_processing_consistent = c.consistent;
  }
  return r;
}

inline std::vector<Document> RetrievedDocuments(const RetrievalResult& r,
                                                const KnowledgeBase& kb) {
  std::vector<Document> out;
  for (const auto& s : r.retrieved) out.push_back(kb.at(s.doc_id));
  return out;
}

inline LeakageResult RunLeakExperiment(const KnowledgeBase& kb,
                                       const std::vector<std::string>& pool,
                                       const PipelineConfig& pipeline,
                                       const LeakSettings& settings,
                                       const DefenseSettings& defenses,
                                       uint64_t seed) {
  const EmbeddingIndex index(kb, pipeline.embed);
  LeakageResult r;
  r.tau = settings.tau;
  std::size_t success = 0, sensitive_success = 0, filtered_success = 0;
  double similarity_sum = 0.0;
  for (std::size_t i = 0; i < pool.size() && r.queries < settings.max_queries; ++i) {
    const TokenSequence anchor = Tokenize(pool[i]);
    if (anchor.empty()) continue;
    const CompoundQuery q = CraftLeakageQuery(anchor.tokens, pipeline.generator);
    // The anchor drives retrieval; the generator sees the compound query.
    const RetrievalResult retrieval =
        Retrieve(q.anchor, index, pipeline.retriever, seed, i);
    if (retrieval.retrieved.empty()) continue;
    const auto docs = RetrievedDocuments(retrieval, kb);
    const Response y = Generate(Augment(q.combined, retrieval, kb),
                                pipeline.generator, pipeline.embed);
    const LeakageOutcome outcome = EvaluateLeakage(y, docs, settings.tau);
    ++r.queries;
    similarity_sum += outcome.max_similarity;
    success += outcome.success ? 1 : 0;
    for (const auto& id : outcome.leaked_doc_ids) {
      if (kb.at(id).sensitive) {
        ++sensitive_success;
        break;
      }
    }
    if (defenses.output_filter) {
      const Response filtered = OutputFilter(y, docs, defenses.config);
      filtered_success += EvaluateLeakage(filtered, docs, settings.tau).success;
    }
  }
  if (r.queries > 0) {
    const double n = static_cast<double>(r.queries);
    r.success_rate = static_cast<double>(success) / n;
    r.sensitive_success_rate = static_cast<double>(sensitive_success) / n;
    r.mean_max_similarity = similarity_sum / n;
    if (defenses.output_filter) {
      r.filtered_success_rate = static_cast<double>(filtered_success) / n;
    }
  } else if (defenses.output_filter) {
    r.filtered_success_rate = 0.0;
  }
  return r;
}

inline PoisonResult RunPoisonExperiment(const KnowledgeBase& kb,
                                        const std::vector<std::string>& pool,
                                        const PipelineConfig& pipeline,
                                        const PoisonSettings& settings,
                                        const DefenseSettings& defenses,
                                        uint64_t seed) {
  std::vector<std::string> vocab = settings.vocab;
  if (vocab.empty()) {
    std::set<std::string> tokens(settings.triggers.tokens);
    for (const auto& [id, doc] : kb) {
      for (auto& t : Tokenize(doc.text).tokens) tokens.insert(std::move(t));
    }
    vocab.assign(tokens.begin(), tokens.end());
  }
  const PoisonDocument poison =
      CraftPoison(settings.triggers, vocab, settings.length, pipeline.embed);
  const KnowledgeBase poisoned = InsertDocuments(kb, {poison.doc});
  const std::set<std::string> poison_ids{poison.doc.id};

  std::vector<std::string> trigger_queries, clean_queries;
  for (const auto& q : pool) {
    (IsTriggerQuery(q, settings.triggers) ? trigger_queries : clean_queries)
        .push_back(q);
  }
  if (trigger_queries.empty()) {
    std::string q;
    for (const auto& t : settings.triggers.tokens) q += (q.empty() ? "" : " ") + t;
    trigger_queries.push_back(q);
  }

  auto rate = [&](const KnowledgeBase& target_kb,
                  const std::set<std::string>& ids,
                  const std::vector<std::string>& queries) {
    if (queries.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      hits += EvaluatePoison(queries[i], target_kb, ids, pipeline, seed, i) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
  };

  PoisonResult r;
  r.poison_id = poison.doc.id;
  r.poison_text = poison.doc.text;
  r.target_similarity = poison.target_similarity;
  r.trigger_queries = trigger_queries.size();
  r.success_rate = rate(poisoned, poison_ids, trigger_queries);
  r.clean_queries = clean_queries.size();
  r.clean_hit_rate = rate(poisoned, poison_ids, clean_queries);

  if (defenses.activation_filter) {
    const FilterReport report =
        ActivationFilter(poisoned, pool, pipeline.retriever.k, defenses.config,
                         pipeline.embed, seed);
    ActivationDefenseResult a;
    a.flagged_doc_ids.assign(report.flagged_doc_ids.begin(),
                             report.flagged_doc_ids.end());
    a.poison_flagged = report.flagged_doc_ids.count(poison.doc.id) > 0;
    a.benign_retained = kb.size();
    KnowledgeBase filtered = poisoned;
    for (const auto& id : report.flagged_doc_ids) {
      filtered = RemoveDocument(filtered, id);
      if (kb.contains(id)) --a.benign_retained;
    }
    std::set<std::string> surviving;
    if (filtered.contains(poison.doc.id)) surviving.insert(poison.doc.id);
    a.post_filter_success_rate =
        filtered.empty() ? 0.0 : rate(filtered, surviving, trigger_queries);
    r.activation_filter = a;
  }
  if (defenses.smoothing) {
    const EmbeddingIndex index(poisoned, pipeline.embed);
    std::size_t hits = 0;
    for (const auto& q : trigger_queries) {
      const auto res = RetrieveSmoothed(q, index, pipeline.retriever.k,
                                        defenses.config,
                                        pipeline.retriever.dp.clip_bound);
      for (const auto& s : res.retrieved) {
        if (s.doc_id == poison.doc.id) {
          ++hits;
          break;
        }
      }
    }
    r.smoothed_success_rate =
        static_cast<double>(hits) / static_cast<double>(trigger_queries.size());
  }
  return r;
}

inline AuditResult RunAuditExperiment(const KnowledgeBase& kb,
                                      const PipelineConfig& pipeline,
                                      const AuditSettings& settings,
                                      uint64_t seed) {
  AuditResult r;
  r.target_id = settings.target_id;
  r.query = settings.query;
  r.k = settings.k.value_or(pipeline.retriever.k);
  r.mechanism = pipeline.retriever.mechanism == Mechanism::kDp ? "dp" : "exact";
  if (pipeline.retriever.mechanism == Mechanism::kDp) {
    r.privacy = PrivacyCost(pipeline.retriever.dp, r.k);
  }
  r.report = EmpiricalDpAudit(kb, settings.target_id, pipeline, settings.query,
                              r.k, settings.trials, seed);
  return r;
}

// Loads the corpus (and query pool), then runs whatever `verb` asks for.
// `report` runs every section present in the config.
inline ExperimentReport RunExperiment(const ExperimentConfig& config, Verb verb,
                                      uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.verb = VerbName(verb);
  report.seed = seed;
  report.config_echo = config.echo;

  const KnowledgeBase kb = IngestCorpus(config.corpus_path);
  const std::vector<std::string> pool =
      config.query_pool_path.empty() ? std::vector<std::string>{}
                                     : ReadQueryPool(config.query_pool_path);
  auto require = [](bool present, const char* section) {
    if (!present) {
      throw Error(ErrorCode::kConfig, std::string(section) + ": section required");
    }
  };

  const bool all = verb == Verb::kReport;
  if (verb == Verb::kIngestCheck || all) {
    report.corpus = SummarizeCorpus(kb, pool.size());
  }
  if (verb == Verb::kMia) require(config.mia.has_value(), "mia");
  if (verb == Verb::kLeak) require(config.leak.has_value(), "leak");
  if (verb == Verb::kPoison) require(config.poison.has_value(), "poison");
  if (verb == Verb::kAuditDp) require(config.audit.has_value(), "audit");

  if (config.mia && (verb == Verb::kMia || all)) {
    report.mia = RunMiaExperiment(kb, pool, config.pipeline, *config.mia, seed);
  }
  if (config.leak && (verb == Verb::kLeak || all)) {
    report.leakage = RunLeakExperiment(kb, pool, config.pipeline, *config.leak,
                                       config.defenses, seed);
  }
  if (config.poison && (verb == Verb::kPoison || all)) {
    report.poisoning = RunPoisonExperiment(kb, pool, config.pipeline,
                                           *config.poison, config.defenses, seed);
  }
  if (config.audit && (verb == Verb::kAuditDp || all)) {
    report.audit = RunAuditExperiment(kb, config.pipeline, *config.audit, seed);
  }
  report.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  return report;
}

}  // namespace ragsec

#endif  // RAGSEC_EXPERIMENT_HPP_
