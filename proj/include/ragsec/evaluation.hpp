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

#ifndef RAGSEC_EVALUATION_HPP_
#define RAGSEC_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ragsec/attacks.hpp"
#include "ragsec/corpus.hpp"
#include "ragsec/error.hpp"
#include "ragsec/random.hpp"
#include "ragsec/retriever.hpp"

namespace ragsec {

// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

inline Interval WilsonInterval(std::size_t successes, std::size_t n,
                               double z = kZ95) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be > 0");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct AdvantageEstimate {
  double advantage = 0.0;  // |accuracy - 1/2|
  double accuracy = 0.0;
  std::size_t trials = 0;
  double ci_low = 0.0;  // Wilson 95% on accuracy
  double ci_high = 0.0;

  double half_width() const { return (ci_high - ci_low) / 2.0; }
  friend bool operator==(const AdvantageEstimate&,
                         const AdvantageEstimate&) = default;
};

inline AdvantageEstimate AdvantageFromCounts(std::size_t correct,
                                             std::size_t trials) {
  if (trials == 0) throw Error(ErrorCode::kEmptyTranscripts, "no transcripts");
  AdvantageEstimate est;
  est.trials = trials;
  est.accuracy = static_cast<double>(correct) / static_cast<double>(trials);
  est.advantage = std::fabs(est.accuracy - 0.5);
  const Interval ci = WilsonInterval(correct, trials);
  // Guard the invariant ci_low <= accuracy <= ci_high against rounding.
  est.ci_low = std::min(ci.low, est.accuracy);
  est.ci_high = std::max(ci.high, est.accuracy);
  return est;
}

inline AdvantageEstimate EstimateAdvantage(
    const std::vector<GameTranscript>& transcripts) {
  std::size_t correct = 0;
  for (const auto& t : transcripts) correct += (t.guess == t.b) ? 1 : 0;
  return AdvantageFromCounts(correct, transcripts.size());
}

// ---------------------------------------------------------------------------
// Empirical (epsilon, delta) audit
// ---------------------------------------------------------------------------

struct AuditReport {
  // Largest |log probability ratio| over events seen on both sides; 0 when
  // no event is shared.
  double epsilon_hat = 0.0;
  // Largest probability mass (either direction) on events never observed on
  // the other side.
  double delta_residual = 0.0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_event_counts;
  std::size_t trials = 0;
  std::size_t events_compared = 0;

  friend bool operator==(const AuditReport&, const AuditReport&) = default;
};

// Order-insensitive event key for a retrieved id set.
inline std::string EventKey(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  std::string key = "{";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) key += ',';
    key += ids[i];
  }
  key += '}';
  return key;
}

// Audit statistics from per-event counts (first = under D, second = under
// D'). `claimed_delta` is subtracted from the numerator of each ratio.
inline AuditReport AuditFromCounts(
    std::map<std::string, std::pair<std::size_t, std::size_t>> counts,
    std::size_t trials, double claimed_delta = 0.0) {
  AuditReport r;
  r.trials = trials;
  const double n = static_cast<double>(trials);
  double only_d = 0.0, only_d_prime = 0.0;
  for (const auto& [event, c] : counts) {
    const double p = static_cast<double>(c.first) / n;
    const double q = static_cast<double>(c.second) / n;
    if (c.first > 0 && c.second > 0) {
      ++r.events_compared;
      if (p - claimed_delta > 0.0) {
        r.epsilon_hat = std::max(r.epsilon_hat, std::log((p - claimed_delta) / q));
      }
      if (q - claimed_delta > 0.0) {
        r.epsilon_hat = std::max(r.epsilon_hat, std::log((q - claimed_delta) / p));
      }
    } else if (c.first > 0) {
      only_d += p;
    } else if (c.second > 0) {
      only_d_prime += q;
    }
  }
  r.delta_residual = std::clamp(std::max(only_d, only_d_prime), 0.0, 1.0);
  r.per_event_counts = std::move(counts);
  return r;
}

namespace internal {
inline constexpr uint64_t kAuditSaltD = 0x61756469742d44ULL;
inline constexpr uint64_t kAuditSaltDPrime = 0x61756469742d4450ULL;
}  // namespace internal

// Runs the configured retriever `trials` times on D = universe and on
// D' = universe minus target, and compares the distributions of retrieved
// id sets.
inline AuditReport EmpiricalDpAudit(const KnowledgeBase& universe,
                                    const std::string& target_id,
                                    const PipelineConfig& mechanism,
                                    const std::string& query, std::size_t k,
                                    std::size_t trials, uint64_t seed) {
  if (!universe.contains(target_id)) throw Error(ErrorCode::kUnknownId, target_id);
  if (trials < 1000) {
    throw Error(ErrorCode::kTooFewTrials, std::to_string(trials) + " < 1000");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidK, "k must be >= 1");
  RetrieverConfig rcfg = mechanism.retriever;
  rcfg.k = k;
  const EmbeddingIndex d_index(universe, mechanism.embed);
  const EmbeddingIndex d_prime_index(RemoveDocument(universe, target_id),
                                     mechanism.embed);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  const uint64_t seed_d = SplitMix64(seed ^ internal::kAuditSaltD);
  const uint64_t seed_d_prime = SplitMix64(seed ^ internal::kAuditSaltDPrime);
  for (std::size_t t = 0; t < trials; ++t) {
    ++counts[EventKey(Retrieve(query, d_index, rcfg, seed_d, t).ids())].first;
    ++counts[EventKey(Retrieve(query, d_prime_index, rcfg, seed_d_prime, t).ids())]
          .second;
  }
  const double claimed_delta =
      rcfg.mechanism == Mechanism::kDp ? PrivacyCost(rcfg.dp, k).delta_total : 0.0;
  return AuditFromCounts(std::move(counts), trials, claimed_delta);
}

// ---------------------------------------------------------------------------
// Post-processing check
// ---------------------------------------------------------------------------

struct PostProcessingComparison {
  double adv_retrieval = 0.0;
  double adv_output = 0.0;
  double ci_slack = 0.0;
  bool consistent = false;
};

// Compares a retrieval-level adversary with an output-level one on paired
// games. The output adversary may not beat the retrieval adversary by more
// than the sum of the two Wilson half-widths.
inline PostProcessingComparison PostProcessingCheck(
    const std::vector<GameTranscript>& retrieval_level,
    const std::vector<GameTranscript>& output_level) {
  if (retrieval_level.size() != output_level.size()) {
    throw Error(ErrorCode::kMismatchedTrials,
                std::to_string(retrieval_level.size()) + " vs " +
                    std::to_string(output_level.size()));
  }
  for (std::size_t i = 0; i < retrieval_level.size(); ++i) {
    const auto& a = retrieval_level[i];
    const auto& b = output_level[i];
    if (a.trial != b.trial || a.b != b.b || a.target_doc_id != b.target_doc_id) {
      throw Error(ErrorCode::kMismatchedTrials, "trial " + std::to_string(i));
    }
  }
  const AdvantageEstimate r = EstimateAdvantage(retrieval_level);
  const AdvantageEstimate o = EstimateAdvantage(output_level);
  PostProcessingComparison c;
  c.adv_retrieval = r.advantage;
  c.adv_output = o.advantage;
  c.ci_slack = r.half_width() + o.half_width();
  c.consistent = c.adv_output <= c.adv_retrieval + c.ci_slack;
  return c;
}

}  // namespace ragsec

#endif  // RAGSEC_EVALUATION_HPP_
