// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "mpg/baselines.hpp"
#include "mpg/bundle.hpp"
#include "mpg/oracle.hpp"
#include "mpg/scr.hpp"

namespace mpg {

// Monte Carlo drivers comparing the samplers against the enumeration oracle.
// All of them sample at temperature 1 / top-p 1 unless told otherwise, since
// exactness only holds when proposals come from the raw reference.

using SampleCounts = std::map<TokenSequence, std::uint64_t>;

struct SamplingRun {
  SampleCounts counts;
  DecodeStats stats;
  std::uint64_t samples = 0;
};

inline DecodeConfig exact_sampling_config(std::size_t max_new_tokens) {
  DecodeConfig cfg;
  cfg.sampling = SamplingConfig{1.0, 1.0, 0};
  cfg.max_new_tokens = max_new_tokens;
  return cfg;
}

inline SamplingRun sample_seq_rs(const ModelBundle& models, const PreferenceWeights& weights,
                                 std::span<const TokenId> prompt, const DecodeConfig& cfg, double log_M,
                                 std::uint64_t accepted, Rng& rng) {
  SamplingRun run;
  run.stats = DecodeStats(models.size() + 1);
  for (std::uint64_t i = 0; i < accepted; ++i) {
    auto r = seq_rs_decode(models.reference(), models.preferences(), weights, cfg, prompt, log_M, rng);
    ++run.counts[r.tokens];
    run.stats += r.stats;
  }
  run.samples = accepted;
  return run;
}

inline SamplingRun sample_scr(const ModelBundle& models, const PreferenceWeights& weights,
                              std::span<const TokenId> prompt, const DecodeConfig& cfg, std::uint64_t decodes,
                              Rng& rng) {
  SamplingRun run;
  run.stats = DecodeStats(models.size() + 1);
  for (std::uint64_t i = 0; i < decodes; ++i) {
    auto r = scr_decode(models.reference(), models.preferences(), weights, cfg, prompt, rng);
    ++run.counts[r.tokens];
    run.stats += r.stats;
  }
  run.samples = decodes;
  return run;
}

struct ChunkTrialRun {
  SampleCounts proposed;       // every proposed chunk
  SampleCounts full_accepted;  // chunks that passed the full-chunk test
  std::uint64_t trials = 0;
};

// Repeated single rounds at a fixed context: propose, score, validate with a
// fixed log M. Only the full-chunk branch is tallied.
inline ChunkTrialRun run_chunk_trials(const ModelBundle& models, const PreferenceWeights& weights,
                                      std::span<const TokenId> context, std::size_t k, double log_M,
                                      const SamplingConfig& sampling, std::uint64_t trials, Rng& rng) {
  ChunkTrialRun run;
  run.trials = trials;
  for (std::uint64_t i = 0; i < trials; ++i) {
    const ChunkProposal proposal = propose_chunk(models.reference(), context, k, sampling, rng);
    const auto pref_lps = score_preferences(models.preferences(), context, proposal.tokens, false);
    const ChunkOutcome outcome = validate_chunk(proposal, pref_lps, weights, log_M, rng);
    ++run.proposed[proposal.tokens];
    if (outcome.kind == OutcomeKind::full_accept) ++run.full_accepted[proposal.tokens];
  }
  return run;
}

inline constexpr double kExactnessTvThreshold = 0.02;
inline constexpr double kIdentityTvThreshold = 0.03;

// Seq-RS with the enumeration-exact envelope against the exact target.
inline VerificationEntry verify_seq_rs_exactness(const ModelBundle& models, const PreferenceWeights& weights,
                                                 std::span<const TokenId> prompt, std::size_t max_len,
                                                 std::uint64_t samples, std::uint64_t seed,
                                                 double threshold = kExactnessTvThreshold) {
  const double log_M = max_sequence_log_score(models.reference(), models.preferences(), weights, prompt, max_len);
  const auto target = target_distribution(models.reference(), models.preferences(), weights, prompt, max_len);
  Rng rng(seed);
  const auto run = sample_seq_rs(models, weights, prompt, exact_sampling_config(max_len), log_M, samples, rng);
  const double tv = tv_distance(empirical_distribution(run.counts), target);
  return {"seq-rs-exactness", tv, threshold, tv <= threshold, samples, seed};
}

// Full-accept branch of chunk validation against the exact chunk conditional
// under a valid fixed envelope.
inline VerificationEntry verify_chunk_conditional(const ModelBundle& models, const PreferenceWeights& weights,
                                                  std::span<const TokenId> context, std::size_t k,
                                                  std::uint64_t trials, std::uint64_t seed,
                                                  double threshold = kExactnessTvThreshold) {
  const double log_M = max_sequence_log_score(models.reference(), models.preferences(), weights, context, k);
  const auto exact = exact_chunk_conditional(models.reference(), models.preferences(), weights, context, k, log_M);
  Rng rng(seed);
  const auto run = run_chunk_trials(models, weights, context, k, log_M, SamplingConfig{1.0, 1.0, 0}, trials, rng);
  const double tv = tv_distance(empirical_distribution(run.full_accepted), exact);
  return {"chunk-conditional", tv, threshold, tv <= threshold, trials, seed};
}

// With every preference equal to the reference, SCR must reproduce plain
// reference sampling. The warm-up bound is the constant score ln sum(alpha),
// so every candidate passes; a looser bound lets prefix salvage favour long
// chunks over eos-truncated ones.
inline VerificationEntry verify_identity_reduction(const ModelBundle& models, std::span<const double> alphas,
                                                   std::span<const TokenId> prompt, std::size_t max_len,
                                                   std::uint64_t decodes, std::uint64_t seed,
                                                   double threshold = kIdentityTvThreshold) {
  const ModelBundle identity = models.identity(alphas.size());
  const PreferenceWeights weights(std::vector<double>(alphas.begin(), alphas.end()));
  DecodeConfig cfg = exact_sampling_config(max_len);
  cfg.log_M0_auto = false;
  cfg.bound.log_M0 = weights.log_positive_mass();
  const auto expected = reference_distribution(models.reference(), prompt, max_len, cfg.sampling);
  Rng rng(seed);
  const auto run = sample_scr(identity, weights, prompt, cfg, decodes, rng);
  const double tv = tv_distance(empirical_distribution(run.counts), expected);
  return {"identity-reduction", tv, threshold, tv <= threshold, decodes, seed};
}

struct SuiteParams {
  std::vector<double> alphas{0.6, 0.4};
  TokenSequence prompt{0};
  std::size_t max_len = 3;
  std::size_t chunk_k = 2;
  std::uint64_t seq_rs_samples = 200000;
  std::uint64_t chunk_trials = 200000;
  std::uint64_t identity_decodes = 100000;
  std::uint64_t seed = 20240607;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"seq-rs-exactness", "chunk-conditional", "identity-reduction"};
  return names;
}

inline VerificationReport run_verification(const ModelBundle& models, const std::string& suite,
                                           const SuiteParams& params) {
  const PreferenceWeights weights(params.alphas);
  VerificationReport report;
  const bool all = suite == "all";
  bool matched = all;
  if (all || suite == "seq-rs-exactness") {
    matched = true;
    report.entries.push_back(verify_seq_rs_exactness(models, weights, params.prompt, params.max_len,
                                                     params.seq_rs_samples, params.seed));
  }
  if (all || suite == "chunk-conditional") {
    matched = true;
    report.entries.push_back(verify_chunk_conditional(models, weights, params.prompt, params.chunk_k,
                                                      params.chunk_trials, params.seed + 1));
  }
  if (all || suite == "identity-reduction") {
    matched = true;
    report.entries.push_back(verify_identity_reduction(models, params.alphas, params.prompt, params.max_len,
                                                       params.identity_decodes, params.seed + 2));
  }
  if (!matched) fail(ErrorKind::config, "unknown verification suite \"" + suite + "\"");
  return report;
}

}  // namespace mpg
