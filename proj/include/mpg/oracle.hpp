// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpg/error.hpp"
#include "mpg/math.hpp"
#include "mpg/model.hpp"
#include "mpg/scoring.hpp"
#include "mpg/scr.hpp"

namespace mpg {

inline constexpr double kEnumerationLimit = 1e7;

// Exact or empirical distribution over finite continuations. Continuations
// that reach max_len without eos are kept as truncated-tail entries.
struct SequenceDistribution {
  std::map<TokenSequence, double> entries;
  std::size_t max_len = 0;

  double operator()(const TokenSequence& seq) const {
    const auto it = entries.find(seq);
    return it == entries.end() ? 0.0 : it->second;
  }

  double total() const {
    double s = 0.0;
    for (const auto& [seq, p] : entries) s += p;
    return s;
  }
};

// All eos-terminated continuations of length <= max_len plus every
// non-terminated continuation of exactly max_len tokens.
inline std::vector<TokenSequence> enumerate_sequences(const Vocabulary& vocab, std::size_t max_len) {
  if (std::pow(static_cast<double>(vocab.size()), static_cast<double>(max_len)) > kEnumerationLimit) {
    fail(ErrorKind::combinatorial_explosion, "vocab_size^max_len exceeds 1e7");
  }
  std::vector<TokenSequence> out;
  TokenSequence current;
  auto walk = [&](auto& self) -> void {
    if (current.size() == max_len) {
      out.push_back(current);
      return;
    }
    for (TokenId t = 0; t < vocab.size(); ++t) {
      current.push_back(t);
      if (t == vocab.eos()) {
        out.push_back(current);
      } else {
        self(self);
      }
      current.pop_back();
    }
  };
  walk(walk);
  return out;
}

enum class Accumulation { log_domain, linear_domain };

namespace detail {

struct SequenceTerms {
  double ref_logprob = 0.0;
  std::vector<double> log_ratios;
  double ref_prob = 1.0;
  std::vector<double> ratios;
};

inline SequenceTerms sequence_terms(const LanguageModel& ref, PreferenceModels prefs, std::span<const TokenId> context,
                                    const TokenSequence& seq) {
  SequenceTerms terms;
  terms.log_ratios.assign(prefs.size(), 0.0);
  terms.ratios.assign(prefs.size(), 1.0);
  if (seq.empty()) return terms;
  const auto ref_lp = ref.score_continuation(context, seq);
  for (double v : ref_lp) {
    terms.ref_logprob += v;
    terms.ref_prob *= std::exp(v);
  }
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    const auto lp = prefs[i]->score_continuation(context, seq);
    if (terms.ref_logprob != kNegInf) terms.log_ratios[i] = chunk_log_ratio(lp, ref_lp);
    double pref_prob = 1.0;
    for (double v : lp) pref_prob *= std::exp(v);
    terms.ratios[i] = terms.ref_prob > 0.0 ? pref_prob / terms.ref_prob : 0.0;
  }
  return terms;
}

inline double clamped_linear_score(const PreferenceWeights& weights, std::span<const double> ratios) {
  double s = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) s += weights[i] * ratios[i];
  return std::max(s, 0.0);
}

}  // namespace detail

// p(y) proportional to pi_ref(y | prompt) * max(0, sum_i alpha_i r_i(y)),
// normalized over the enumerated support. The two accumulation modes
// compute the same quantity through independent arithmetic.
inline SequenceDistribution target_distribution(const LanguageModel& ref, PreferenceModels prefs,
                                                const PreferenceWeights& weights, std::span<const TokenId> prompt,
                                                std::size_t max_len,
                                                Accumulation mode = Accumulation::log_domain) {
  check_models(ref, prefs, weights);
  check_prompt(ref, prompt);
  SequenceDistribution dist;
  dist.max_len = max_len;
  const auto support = enumerate_sequences(ref.vocabulary(), max_len);

  if (mode == Accumulation::log_domain) {
    std::vector<double> logw;
    logw.reserve(support.size());
    for (const auto& seq : support) {
      const auto terms = detail::sequence_terms(ref, prefs, prompt, seq);
      if (terms.ref_logprob == kNegInf) {
        logw.push_back(kNegInf);
        continue;
      }
      logw.push_back(terms.ref_logprob + score_candidate(weights, terms.log_ratios).log_score);
    }
    const double z = log_sum_exp(logw);
    if (z == kNegInf) fail(ErrorKind::infeasible_target, "every sequence has zero clamped reward");
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (logw[i] != kNegInf) dist.entries[support[i]] = std::exp(logw[i] - z);
    }
    return dist;
  }

  std::vector<double> w;
  w.reserve(support.size());
  double z = 0.0;
  for (const auto& seq : support) {
    const auto terms = detail::sequence_terms(ref, prefs, prompt, seq);
    w.push_back(terms.ref_prob * detail::clamped_linear_score(weights, terms.ratios));
    z += w.back();
  }
  if (!(z > 0.0)) fail(ErrorKind::infeasible_target, "every sequence has zero clamped reward");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (w[i] > 0.0) dist.entries[support[i]] = w[i] / z;
  }
  return dist;
}

// Distribution of continuations produced by plain sampling from the
// reference with `cfg` (temperature and nucleus applied per step).
inline SequenceDistribution reference_distribution(const LanguageModel& ref, std::span<const TokenId> prompt,
                                                   std::size_t max_len, const SamplingConfig& cfg = {}) {
  check_prompt(ref, prompt);
  SequenceDistribution dist;
  dist.max_len = max_len;
  for (const auto& seq : enumerate_sequences(ref.vocabulary(), max_len)) {
    double p = 1.0;
    TokenSequence context(prompt.begin(), prompt.end());
    for (TokenId t : seq) {
      p *= proposal_probabilities(ref.logprobs(context), cfg)[t];
      if (p == 0.0) break;
      context.push_back(t);
    }
    if (p > 0.0) dist.entries[seq] = p;
  }
  return dist;
}

// Largest sequence log-score over the enumerated support: the tightest
// valid envelope for sequence-level rejection sampling.
inline double max_sequence_log_score(const LanguageModel& ref, PreferenceModels prefs,
                                     const PreferenceWeights& weights, std::span<const TokenId> prompt,
                                     std::size_t max_len) {
  check_models(ref, prefs, weights);
  double hi = kNegInf;
  for (const auto& seq : enumerate_sequences(ref.vocabulary(), max_len)) {
    const auto terms = detail::sequence_terms(ref, prefs, prompt, seq);
    if (terms.ref_logprob == kNegInf) continue;
    hi = std::max(hi, score_candidate(weights, terms.log_ratios).log_score);
  }
  if (hi == kNegInf) fail(ErrorKind::infeasible_target, "every sequence has zero clamped reward");
  return hi;
}

// P(C | full chunk accepted) proportional to pi_ref(C) * min(1, exp(S(C) - log M))
// over all chunks a k-step proposal can produce.
inline SequenceDistribution exact_chunk_conditional(const LanguageModel& ref, PreferenceModels prefs,
                                                    const PreferenceWeights& weights,
                                                    std::span<const TokenId> context, std::size_t k, double log_M) {
  check_models(ref, prefs, weights);
  check_prompt(ref, context);
  if (k == 0) fail(ErrorKind::input, "chunk size must be at least 1");
  SequenceDistribution dist;
  dist.max_len = k;
  const auto support = enumerate_sequences(ref.vocabulary(), k);
  std::vector<double> logw;
  logw.reserve(support.size());
  for (const auto& seq : support) {
    const auto terms = detail::sequence_terms(ref, prefs, context, seq);
    if (terms.ref_logprob == kNegInf) {
      logw.push_back(kNegInf);
      continue;
    }
    const double s = score_candidate(weights, terms.log_ratios).log_score;
    logw.push_back(terms.ref_logprob + std::min(0.0, s - log_M));
  }
  const double z = log_sum_exp(logw);
  if (z == kNegInf) fail(ErrorKind::infeasible_target, "no chunk can be accepted");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (logw[i] != kNegInf) dist.entries[support[i]] = std::exp(logw[i] - z);
  }
  return dist;
}

inline SequenceDistribution empirical_distribution(std::span<const TokenSequence> samples) {
  if (samples.empty()) fail(ErrorKind::input, "no samples");
  SequenceDistribution dist;
  std::map<TokenSequence, std::uint64_t> counts;
  for (const auto& s : samples) {
    ++counts[s];
    dist.max_len = std::max(dist.max_len, s.size());
  }
  const double n = static_cast<double>(samples.size());
  for (const auto& [seq, c] : counts) dist.entries[seq] = static_cast<double>(c) / n;
  return dist;
}

// Builds an empirical distribution from precomputed counts.
inline SequenceDistribution empirical_distribution(const std::map<TokenSequence, std::uint64_t>& counts) {
  std::uint64_t n = 0;
  for (const auto& [seq, c] : counts) n += c;
  if (n == 0) fail(ErrorKind::input, "no samples");
  SequenceDistribution dist;
  for (const auto& [seq, c] : counts) {
    dist.entries[seq] = static_cast<double>(c) / static_cast<double>(n);
    dist.max_len = std::max(dist.max_len, seq.size());
  }
  return dist;
}

// Half the L1 distance over the union of supports.
inline double tv_distance(const SequenceDistribution& p, const SequenceDistribution& q) {
  double sum = 0.0;
  for (const auto& [seq, pv] : p.entries) sum += std::abs(pv - q(seq));
  for (const auto& [seq, qv] : q.entries) {
    if (!p.entries.contains(seq)) sum += qv;
  }
  return std::min(1.0, 0.5 * sum);
}

struct VerificationEntry {
  std::string name;
  double tv = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

struct VerificationReport {
  std::vector<VerificationEntry> entries;

  bool all_passed() const {
    for (const auto& e : entries) {
      if (!e.pass) return false;
    }
    return true;
  }
};

inline nlohmann::json to_json(const VerificationReport& report) {
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& e : report.entries) {
    tests.push_back({{"name", e.name},
                     {"tv", e.tv},
                     {"threshold", e.threshold},
                     {"pass", e.pass},
                     {"samples", e.samples},
                     {"seed", e.seed}});
  }
  return {{"tests", tests}, {"all_passed", report.all_passed()}};
}

}  // namespace mpg
