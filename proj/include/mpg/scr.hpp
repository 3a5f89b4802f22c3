// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <future>
#include <span>
#include <string>
#include <vector>

#include "mpg/bound.hpp"
#include "mpg/config.hpp"
#include "mpg/error.hpp"
#include "mpg/logging.hpp"
#include "mpg/model.hpp"
#include "mpg/random.hpp"
#include "mpg/sampling.hpp"
#include "mpg/scoring.hpp"
#include "mpg/stats.hpp"

namespace mpg {

using PreferenceModels = std::span<const LanguageModel* const>;

struct DecodeResult {
  TokenSequence tokens;  // generated continuation, prompt excluded
  DecodeStats stats;
};

inline void check_models(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights) {
  if (prefs.size() != weights.size()) {
    fail(ErrorKind::config, std::to_string(prefs.size()) + " preference models but " +
                                std::to_string(weights.size()) + " weights");
  }
  for (const LanguageModel* m : prefs) {
    if (m == nullptr) fail(ErrorKind::config, "null preference model");
    if (!(m->vocabulary() == ref.vocabulary())) fail(ErrorKind::config, "models do not share one vocabulary");
  }
}

inline void check_prompt(const LanguageModel& ref, std::span<const TokenId> prompt) {
  validate_sequence(ref.vocabulary(), prompt, /*allow_eos=*/false);
}

// Teacher-forced scores of `tokens` under every preference model. Each call
// is one forward pass; with `parallel` the N calls run concurrently.
inline std::vector<std::vector<double>> score_preferences(PreferenceModels prefs, std::span<const TokenId> context,
                                                          std::span<const TokenId> tokens, bool parallel) {
  std::vector<std::vector<double>> out(prefs.size());
  if (parallel && prefs.size() > 1) {
    std::vector<std::future<std::vector<double>>> jobs;
    jobs.reserve(prefs.size());
    for (const LanguageModel* m : prefs) {
      jobs.push_back(std::async(std::launch::async, [m, context, tokens] { return m->score_continuation(context, tokens); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < prefs.size(); ++i) out[i] = prefs[i]->score_continuation(context, tokens);
  }
  return out;
}

inline std::vector<LogProbVector> preference_distributions(PreferenceModels prefs, std::span<const TokenId> context,
                                                           bool parallel) {
  std::vector<LogProbVector> out(prefs.size());
  if (parallel && prefs.size() > 1) {
    std::vector<std::future<LogProbVector>> jobs;
    jobs.reserve(prefs.size());
    for (const LanguageModel* m : prefs) {
      jobs.push_back(std::async(std::launch::async, [m, context] { return m->logprobs(context); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) out[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < prefs.size(); ++i) out[i] = prefs[i]->logprobs(context);
  }
  return out;
}

// Per-dimension log ratio of the first `length` tokens of a proposal.
inline std::vector<double> prefix_log_ratios(const ChunkProposal& proposal,
                                             std::span<const std::vector<double>> pref_logprobs, std::size_t length) {
  std::vector<double> ratios;
  ratios.reserve(pref_logprobs.size());
  const auto ref = std::span<const double>(proposal.ref_logprobs).first(length);
  for (const auto& pref : pref_logprobs) {
    ratios.push_back(chunk_log_ratio(std::span<const double>(pref).first(length), ref));
  }
  return ratios;
}

enum class OutcomeKind { full_accept, prefix_accept, fallback_token, rejected };

inline std::string_view to_string(OutcomeKind kind) {
  switch (kind) {
    case OutcomeKind::full_accept: return "full-accept";
    case OutcomeKind::prefix_accept: return "prefix-accept";
    case OutcomeKind::fallback_token: return "fallback-token";
    case OutcomeKind::rejected: return "rejected";
  }
  return "unknown";
}

struct ScoreRecord {
  std::size_t length = 0;  // candidate length in tokens
  double log_score = kNegInf;
  bool accepted = false;
};

struct ChunkOutcome {
  OutcomeKind kind = OutcomeKind::rejected;
  TokenSequence committed;
  std::size_t prefix_length = 0;  // j for prefix_accept
  std::vector<ScoreRecord> score_records;  // every tested candidate, in test order
  std::size_t ratio_caps = 0;
};

// Tests the full chunk, then prefixes of length L-1 down to 1, each with a
// fresh uniform, and stops at the first acceptance. A `rejected` outcome
// means the caller must fall back to single-token sampling.
template <UniformSource U>
ChunkOutcome validate_chunk(const ChunkProposal& proposal, std::span<const std::vector<double>> pref_logprobs,
                            const PreferenceWeights& weights, double log_M, U& uniforms) {
  const std::size_t len = proposal.tokens.size();
  if (len == 0 || proposal.ref_logprobs.size() != len) fail(ErrorKind::input, "malformed chunk proposal");
  if (pref_logprobs.size() != weights.size()) fail(ErrorKind::input, "one log-probability list per weight required");
  for (const auto& lp : pref_logprobs) {
    if (lp.size() != len) fail(ErrorKind::input, "preference log-probabilities not aligned with the chunk");
  }

  ChunkOutcome out;
  for (std::size_t j = len; j >= 1; --j) {
    const ChunkScore score = score_candidate(weights, prefix_log_ratios(proposal, pref_logprobs, j));
    if (score.capped) ++out.ratio_caps;
    const bool ok = accept_test(score.log_score, log_M, uniforms.uniform());
    out.score_records.push_back({j, score.log_score, ok});
    if (ok) {
      out.kind = j == len ? OutcomeKind::full_accept : OutcomeKind::prefix_accept;
      out.prefix_length = j == len ? 0 : j;
      out.committed.assign(proposal.tokens.begin(), proposal.tokens.begin() + static_cast<std::ptrdiff_t>(j));
      return out;
    }
  }
  out.kind = OutcomeKind::rejected;
  return out;
}

struct FallbackResult {
  TokenId token = 0;
  double log_score = kNegInf;
  std::size_t attempts = 0;
  std::size_t rejected = 0;
  bool cap_hit = false;
  std::size_t ratio_caps = 0;
};

// Single-token rejection sampling at `context`. The reference and preference
// distributions are evaluated once (1 + N forward passes) and every attempt
// reads from them. After `cfg.fallback_cap` failures the attempt with the
// highest finite score is committed.
template <UniformSource U>
FallbackResult rs1_fallback(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights,
                            std::span<const TokenId> context, double log_M, const DecodeConfig& cfg, U& rng) {
  if (!std::isfinite(log_M)) fail(ErrorKind::input, "log M must be finite");
  const LogProbVector ref_dist = ref.logprobs(context);
  const std::vector<LogProbVector> pref_dists = preference_distributions(prefs, context, cfg.parallel_scoring);
  const bool tempered = cfg.proposal_logprobs == ProposalLogProbs::tempered && !cfg.sampling.is_identity();
  const std::vector<double> proposal = tempered ? proposal_probabilities(ref_dist, cfg.sampling) : std::vector<double>{};

  FallbackResult out;
  std::optional<std::pair<TokenId, double>> best;
  std::vector<double> ratios(prefs.size());
  for (std::size_t attempt = 1; attempt <= cfg.fallback_cap; ++attempt) {
    const TokenId y = tempered ? draw_from(proposal, rng) : sample_token(ref_dist, cfg.sampling, rng);
    const double ref_lp = tempered ? std::log(proposal[y]) : ref_dist[y];
    for (std::size_t i = 0; i < prefs.size(); ++i) {
      const double p = pref_dists[i][y];
      ratios[i] = chunk_log_ratio(std::span<const double>(&p, 1), std::span<const double>(&ref_lp, 1));
    }
    const ChunkScore score = score_candidate(weights, ratios);
    if (score.capped) ++out.ratio_caps;
    out.attempts = attempt;
    if (accept_test(score.log_score, log_M, rng.uniform())) {
      out.token = y;
      out.log_score = score.log_score;
      return out;
    }
    ++out.rejected;
    if (score.log_score != kNegInf && (!best || score.log_score > best->second)) best.emplace(y, score.log_score);
  }
  if (!best) fail(ErrorKind::progress_stall, "every fallback attempt had zero clamped reward");
  out.cap_hit = true;
  out.token = best->first;
  out.log_score = best->second;
  event_log().info("fallback cap of {} attempts hit; committing best-scoring token {}", cfg.fallback_cap, out.token);
  return out;
}

// Optional per-iteration trace, used by tests and the CLI's debug output.
struct DecodeTrace {
  struct Round {
    ChunkProposal proposal;
    ChunkOutcome outcome;
    double log_M = 0.0;
    BoundPhase phase_after = BoundPhase::warm_up;
  };
  std::vector<Round> rounds;
};

// Chunk-level rejection sampling decoder: propose k tokens from the
// reference, score them under every preference model, accept the chunk or
// salvage a prefix, fall back to single-token sampling, then update the
// envelope estimate.
template <UniformSource U>
DecodeResult scr_decode(const LanguageModel& ref, PreferenceModels prefs, const PreferenceWeights& weights,
                        const DecodeConfig& cfg, std::span<const TokenId> prompt, U& rng,
                        DecodeTrace* trace = nullptr) {
  cfg.validate();
  check_models(ref, prefs, weights);
  check_prompt(ref, prompt);
  const auto t0 = std::chrono::steady_clock::now();

  DecodeResult result{{}, DecodeStats(prefs.size() + 1)};
  DecodeStats& stats = result.stats;
  stats.sequences = 1;
  BoundEstimator bound(cfg.resolved_bound(weights));
  TokenSequence context(prompt.begin(), prompt.end());
  std::size_t consecutive_stalls = 0;

  while (result.tokens.size() < cfg.max_new_tokens && !ends_with_eos(ref.vocabulary(), result.tokens)) {
    const double log_M = bound.log_M();
    const std::size_t budget = std::min(cfg.k, cfg.max_new_tokens - result.tokens.size());

    ChunkProposal proposal = propose_chunk(ref, context, budget, cfg.sampling, rng, cfg.proposal_logprobs);
    stats.forward_passes[0] += proposal.tokens.size();
    ++stats.chunks_proposed;
    const auto pref_lps = score_preferences(prefs, context, proposal.tokens, cfg.parallel_scoring);
    for (std::size_t i = 0; i < prefs.size(); ++i) ++stats.forward_passes[i + 1];

    ChunkOutcome outcome = validate_chunk(proposal, pref_lps, weights, log_M, rng);
    stats.ratio_caps += outcome.ratio_caps;
    for (const auto& r : outcome.score_records) stats.record_test(r.accepted);

    if (outcome.kind == OutcomeKind::full_accept) {
      ++stats.full_accepted;
    } else if (outcome.kind == OutcomeKind::prefix_accept) {
      ++stats.prefix_salvaged;
    } else {
      ++stats.chunks_rejected;
      ++stats.fallback_invocations;
      stats.forward_passes[0] += 1;
      for (std::size_t i = 0; i < prefs.size(); ++i) ++stats.forward_passes[i + 1];
      try {
        const FallbackResult fb = rs1_fallback(ref, prefs, weights, context, log_M, cfg, rng);
        stats.fallback_attempts += fb.attempts;
        stats.ratio_caps += fb.ratio_caps;
        stats.candidates_tested += fb.attempts;
        stats.candidates_rejected += fb.rejected;
        stats.candidates_accepted += fb.attempts - fb.rejected;
        if (fb.cap_hit) ++stats.fallback_cap_hits;
        outcome.kind = OutcomeKind::fallback_token;
        outcome.committed = {fb.token};
        outcome.score_records.push_back({1, fb.log_score, true});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::progress_stall) throw;
        stats.fallback_attempts += cfg.fallback_cap;
        stats.candidates_tested += cfg.fallback_cap;
        stats.candidates_rejected += cfg.fallback_cap;
        ++stats.progress_stalls;
        if (++consecutive_stalls >= cfg.max_new_tokens) throw;
        event_log().warn("fallback stalled ({} consecutive); re-proposing", consecutive_stalls);
      }
    }

    if (!outcome.committed.empty()) {
      consecutive_stalls = 0;
      context.insert(context.end(), outcome.committed.begin(), outcome.committed.end());
      result.tokens.insert(result.tokens.end(), outcome.committed.begin(), outcome.committed.end());
    }

    std::vector<double> pushed;
    for (const auto& r : outcome.score_records) {
      if (r.accepted || cfg.buffer_policy == BufferPolicy::all_observed) pushed.push_back(r.log_score);
    }
    bound.update(pushed);

    if (trace) trace->rounds.push_back({std::move(proposal), std::move(outcome), log_M, bound.phase()});
  }

  stats.tokens_emitted = result.tokens.size();
  stats.bound_freezes = bound.freezes();
  stats.bound_unfreezes = bound.unfreezes();
  stats.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace mpg
