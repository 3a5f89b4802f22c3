// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mpg/error.hpp"
#include "mpg/model.hpp"
#include "mpg/random.hpp"

namespace mpg {

struct SamplingConfig {
  double temperature = 1.0;
  double top_p = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) fail(ErrorKind::config, "temperature must be > 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) fail(ErrorKind::config, "top_p must lie in (0, 1]");
  }

  bool is_identity() const noexcept { return temperature == 1.0 && top_p >= 1.0; }
};

// Which log-probabilities a proposal caches for the density ratio: the raw
// model's (default) or those of the tempered, nucleus-truncated sampler.
enum class ProposalLogProbs { raw, tempered };

// Slack when comparing cumulative nucleus mass against top_p, so a prefix
// whose mass equals top_p up to rounding is accepted as the nucleus.
inline constexpr double kNucleusSlack = 1e-12;

// Tokens kept by nucleus truncation of the temperature-scaled distribution:
// the shortest prefix of the probability-sorted list (ties by ascending id)
// whose mass reaches top_p. Returned in ascending id order.
inline std::vector<TokenId> nucleus_support(std::span<const double> probs, double top_p) {
  std::vector<TokenId> order;
  for (TokenId t = 0; t < probs.size(); ++t) {
    if (probs[t] > 0.0) order.push_back(t);
  }
  if (top_p < 1.0) {
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });
    double total = 0.0;
    for (TokenId t : order) total += probs[t];
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
      cum += probs[order[keep]];
      ++keep;
      if (cum >= (top_p - kNucleusSlack) * total) break;
    }
    order.resize(keep);
    std::sort(order.begin(), order.end());
  }
  return order;
}

// Linear-domain sampling distribution after temperature and top-p. Entries
// outside the nucleus are exactly zero; the rest sum to one.
inline std::vector<double> proposal_probabilities(const LogProbVector& dist, const SamplingConfig& cfg) {
  const auto values = dist.values();
  std::vector<double> probs(values.size(), 0.0);
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) fail(ErrorKind::degenerate_distribution, "every token has probability zero");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != kNegInf) probs[i] = std::exp((values[i] - hi) / cfg.temperature);
  }
  const auto support = nucleus_support(probs, cfg.top_p);
  std::vector<double> out(values.size(), 0.0);
  double mass = 0.0;
  for (TokenId t : support) mass += probs[t];
  for (TokenId t : support) out[t] = probs[t] / mass;
  return out;
}

// Inverse-CDF draw over ids in ascending order.
template <UniformSource U>
TokenId draw_from(std::span<const double> probs, U& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  TokenId last = 0;
  bool any = false;
  for (TokenId t = 0; t < probs.size(); ++t) {
    if (probs[t] <= 0.0) continue;
    cum += probs[t];
    last = t;
    any = true;
    if (u < cum) return t;
  }
  if (!any) fail(ErrorKind::degenerate_distribution, "empty sampling support");
  return last;
}

template <UniformSource U>
TokenId sample_token(const LogProbVector& dist, const SamplingConfig& cfg, U& rng) {
  if (cfg.is_identity()) {
    const auto values = dist.values();
    std::vector<double> probs(values.size());
    bool any = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
      probs[i] = std::exp(values[i]);
      any = any || probs[i] > 0.0;
    }
    if (!any) fail(ErrorKind::degenerate_distribution, "every token has probability zero");
    return draw_from(probs, rng);
  }
  return draw_from(proposal_probabilities(dist, cfg), rng);
}

struct ChunkProposal {
  TokenSequence tokens;
  std::vector<double> ref_logprobs;  // one per token, log pi_ref(token | prefix)
  bool truncated_by_eos = false;
};

// k-step autoregressive rollout from the reference model; one forward pass
// per proposed token. Stops early after sampling eos.
template <UniformSource U>
ChunkProposal propose_chunk(const LanguageModel& ref, std::span<const TokenId> context, std::size_t k,
                            const SamplingConfig& cfg, U& rng,
                            ProposalLogProbs mode = ProposalLogProbs::raw) {
  if (k == 0) fail(ErrorKind::input, "chunk size must be at least 1");
  const TokenId eos = ref.vocabulary().eos();
  ChunkProposal out;
  out.tokens.reserve(k);
  out.ref_logprobs.reserve(k);
  TokenSequence running(context.begin(), context.end());
  for (std::size_t step = 0; step < k; ++step) {
    const LogProbVector dist = ref.logprobs(running);
    TokenId token;
    double logprob;
    if (mode == ProposalLogProbs::raw || cfg.is_identity()) {
      token = sample_token(dist, cfg, rng);
      logprob = dist[token];
    } else {
      const auto probs = proposal_probabilities(dist, cfg);
      token = draw_from(probs, rng);
      logprob = std::log(probs[token]);
    }
    out.tokens.push_back(token);
    out.ref_logprobs.push_back(logprob);
    if (token == eos) {
      out.truncated_by_eos = step + 1 < k;
      break;
    }
    running.push_back(token);
  }
  return out;
}

}  // namespace mpg
