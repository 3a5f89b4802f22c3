// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <span>
#include <vector>

#include "mpg/config.hpp"
#include "mpg/scr.hpp"

namespace mpg {

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// Plain autoregressive sampling from the reference model.
template <UniformSource U>
DecodeResult base_decode(const LanguageModel& ref, const DecodeConfig& cfg, std::span<const TokenId> prompt, U& rng) {
  cfg.validate();
  check_prompt(ref, prompt);
  const auto t0 = std::chrono::steady_clock::now();
  DecodeResult result{{}, DecodeStats(1)};
  result.stats.sequences = 1;
  TokenSequence context(prompt.begin(), prompt.end());
  while (result.tokens.size() < cfg.max_new_tokens && !ends_with_eos(ref.vocabulary(), result.tokens)) {
    const TokenId t = sample_token(ref.logprobs(context), cfg.sampling, rng);
    ++result.stats.forward_passes[0];
    result.tokens.push_back(t);
    context.push_back(t);
  }
  result.stats.tokens_emitted = result.tokens.size();
  result.stats.wall_clock_seconds = detail::seconds_since(t0);
  return result;
}

// Sequence-level rejection sampling against a fixed envelope: draw whole
// continuations (to eos or max_new_tokens) from the reference and accept
// with probability min(1, exp(S(y) - log M)). Exact for the clamped target
// whenever log M bounds every sequence score.
template <UniformSource U>
DecodeResult seq_rs_decode(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights,
                           const DecodeConfig& cfg, std::span<const TokenId> prompt, double log_M, U& rng) {
  cfg.validate();
  check_models(ref, prefs, weights);
  check_prompt(ref, prompt);
  if (!std::isfinite(log_M)) fail(ErrorKind::input, "sequence envelope must be finite");
  const auto t0 = std::chrono::steady_clock::now();
  DecodeResult result{{}, DecodeStats(prefs.size() + 1)};
  DecodeStats& stats = result.stats;
  stats.sequences = 1;

  for (std::size_t attempt = 0; attempt < cfg.seq_rs_retry_cap; ++attempt) {
    ChunkProposal seq = propose_chunk(ref, prompt, cfg.max_new_tokens, cfg.sampling, rng, cfg.proposal_logprobs);
    stats.forward_passes[0] += seq.tokens.size();
    ++stats.chunks_proposed;
    const auto pref_lps = score_preferences(prefs, prompt, seq.tokens, cfg.parallel_scoring);
    for (std::size_t i = 0; i < prefs.size(); ++i) ++stats.forward_passes[i + 1];
    const ChunkScore score = score_candidate(weights, prefix_log_ratios(seq, pref_lps, seq.tokens.size()));
    if (score.capped) ++stats.ratio_caps;
    if (score.log_score > log_M) ++stats.envelope_violations;
    const bool ok = accept_test(score.log_score, log_M, rng.uniform());
    stats.record_test(ok);
    if (ok) {
      ++stats.full_accepted;
      result.tokens = std::move(seq.tokens);
      stats.tokens_emitted = result.tokens.size();
      stats.wall_clock_seconds = detail::seconds_since(t0);
      return result;
    }
    ++stats.chunks_rejected;
  }
  fail(ErrorKind::envelope_too_tight,
       "no sequence accepted in " + std::to_string(cfg.seq_rs_retry_cap) + " proposals");
}

// Token-level rejection sampling: the chunk decoder with k = 1, where there
// is no prefix to salvage.
template <UniformSource U>
DecodeResult token_rs_decode(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights,
                             const DecodeConfig& cfg, std::span<const TokenId> prompt, U& rng,
                             DecodeTrace* trace = nullptr) {
  DecodeConfig one = cfg;
  one.k = 1;
  return scr_decode(ref, prefs, weights, one, prompt, rng, trace);
}

// Per-position fusion: normalize(log pi_ref + sum_i alpha_i (log pi_i - log
// pi_ref)). A token is excluded when any term with a nonzero weight is -inf.
// Takes raw weights, so the all-zero vector (plain reference) is allowed.
inline LogProbVector mod_distribution(const LogProbVector& ref, std::span<const LogProbVector> prefs,
                                      std::span<const double> weights) {
  if (prefs.size() != weights.size()) fail(ErrorKind::input, "one distribution per weight required");
  std::vector<double> combined(ref.size());
  for (TokenId t = 0; t < ref.size(); ++t) {
    double v = ref[t];
    if (v == kNegInf) {
      combined[t] = kNegInf;
      continue;
    }
    for (std::size_t i = 0; i < prefs.size() && v != kNegInf; ++i) {
      if (weights[i] == 0.0) continue;
      const double p = prefs[i][t];
      v = p == kNegInf ? kNegInf : v + weights[i] * (p - ref[t]);
    }
    combined[t] = v;
  }
  return LogProbVector::normalized(std::move(combined));
}

template <UniformSource U>
DecodeResult mod_decode(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights,
                        const DecodeConfig& cfg, std::span<const TokenId> prompt, U& rng) {
  cfg.validate();
  check_models(ref, prefs, weights);
  check_prompt(ref, prompt);
  const auto t0 = std::chrono::steady_clock::now();
  DecodeResult result{{}, DecodeStats(prefs.size() + 1)};
  result.stats.sequences = 1;
  TokenSequence context(prompt.begin(), prompt.end());
  while (result.tokens.size() < cfg.max_new_tokens && !ends_with_eos(ref.vocabulary(), result.tokens)) {
    const LogProbVector ref_dist = ref.logprobs(context);
    const auto pref_dists = preference_distributions(prefs, context, cfg.parallel_scoring);
    ++result.stats.forward_passes[0];
    for (std::size_t i = 0; i < prefs.size(); ++i) ++result.stats.forward_passes[i + 1];
    const TokenId t = sample_token(mod_distribution(ref_dist, pref_dists, weights.alphas()), cfg.sampling, rng);
    result.tokens.push_back(t);
    context.push_back(t);
  }
  result.stats.tokens_emitted = result.tokens.size();
  result.stats.wall_clock_seconds = detail::seconds_since(t0);
  return result;
}

}  // namespace mpg
