// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mpg/error.hpp"
#include "mpg/logging.hpp"
#include "mpg/math.hpp"

namespace mpg {

// Signed preference weights, one per preference model. Weights are used as
// given (no renormalization). When every weight is positive the acceptance
// score is computed in the log domain; otherwise the clamped linear reward
// max(0, sum alpha_i r_i) is used.
class PreferenceWeights {
 public:
  explicit PreferenceWeights(std::vector<double> alphas) : alphas_(std::move(alphas)) {
    if (alphas_.empty()) fail(ErrorKind::config, "at least one preference weight is required");
    bool any_nonzero = false;
    positive_ = true;
    for (double a : alphas_) {
      if (!std::isfinite(a)) fail(ErrorKind::config, "preference weights must be finite");
      any_nonzero = any_nonzero || a != 0.0;
      positive_ = positive_ && a > 0.0;
    }
    if (!any_nonzero) fail(ErrorKind::config, "preference weights must not all be zero");
  }

  std::size_t size() const noexcept { return alphas_.size(); }
  std::span<const double> alphas() const noexcept { return alphas_; }
  double operator[](std::size_t i) const { return alphas_.at(i); }
  bool positive_mode() const noexcept { return positive_; }

  // ln(sum of positive weights): the score every candidate gets when all
  // preference models agree with the reference.
  double log_positive_mass() const {
    double s = 0.0;
    for (double a : alphas_) s += std::max(a, 0.0);
    return std::log(s);
  }

 private:
  std::vector<double> alphas_;
  bool positive_ = true;
};

// Largest exponent admitted when exponentiating a log ratio in the linear path.
inline constexpr double kLogRatioCap = 700.0;

// Sum of per-token log-probability differences between one preference model
// and the reference over a chunk.
inline double chunk_log_ratio(std::span<const double> pref_logprobs, std::span<const double> ref_logprobs) {
  if (pref_logprobs.size() != ref_logprobs.size()) fail(ErrorKind::input, "log-probability lists differ in length");
  if (pref_logprobs.empty()) fail(ErrorKind::input, "empty chunk");
  double total = 0.0;
  for (std::size_t i = 0; i < ref_logprobs.size(); ++i) {
    const double p = pref_logprobs[i];
    const double r = ref_logprobs[i];
    if (std::isnan(p) || std::isnan(r) || p == kPosInf || r == kPosInf || p > 1e-9 || r > 1e-9) {
      fail(ErrorKind::input, "log-probabilities must be <= 0");
    }
    if (r == kNegInf) fail(ErrorKind::invalid_proposal, "proposed token has zero reference probability");
    total += p - r;
  }
  return total;
}

// logsumexp_i(ln alpha_i + log_ratio_i); positive weights only.
inline double aggregate_log_score(const PreferenceWeights& weights, std::span<const double> log_ratios) {
  if (!weights.positive_mode()) fail(ErrorKind::mode, "log-domain aggregation requires positive weights");
  if (log_ratios.size() != weights.size()) fail(ErrorKind::input, "one log ratio per weight required");
  double hi = kNegInf;
  for (std::size_t i = 0; i < log_ratios.size(); ++i) hi = std::max(hi, std::log(weights[i]) + log_ratios[i]);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < log_ratios.size(); ++i) acc += std::exp(std::log(weights[i]) + log_ratios[i] - hi);
  return hi + std::log(acc);
}

struct SignedReward {
  double linear_score = 0.0;  // sum alpha_i r_i, before clamping
  double log_score = kNegInf; // ln max(0, linear_score)
  bool capped = false;        // some ratio hit exp(kLogRatioCap)
};

inline SignedReward signed_reward(const PreferenceWeights& weights, std::span<const double> log_ratios) {
  if (log_ratios.size() != weights.size()) fail(ErrorKind::input, "one log ratio per weight required");
  SignedReward out;
  for (std::size_t i = 0; i < log_ratios.size(); ++i) {
    double lr = log_ratios[i];
    if (lr > kLogRatioCap) {
      lr = kLogRatioCap;
      out.capped = true;
    }
    out.linear_score += weights[i] * std::exp(lr);
  }
  if (out.capped) event_log().info("density ratio capped at exp({})", kLogRatioCap);
  out.log_score = out.linear_score > 0.0 ? std::log(out.linear_score) : kNegInf;
  return out;
}

struct ChunkScore {
  std::vector<double> log_ratios;
  double log_score = kNegInf;
  double linear_score = 0.0;
  bool capped = false;
};

// Full score of a candidate: logsumexp in positive mode, clamped linear
// reward otherwise.
inline ChunkScore score_candidate(const PreferenceWeights& weights, std::vector<double> log_ratios) {
  ChunkScore out;
  const SignedReward reward = signed_reward(weights, log_ratios);
  out.linear_score = reward.linear_score;
  out.capped = reward.capped;
  out.log_score = weights.positive_mode() ? aggregate_log_score(weights, log_ratios) : reward.log_score;
  out.log_ratios = std::move(log_ratios);
  return out;
}

// Strict test ln u < S - log M; S = -inf never passes.
inline bool accept_test(double log_score, double log_M, double u) {
  if (log_score == kNegInf) return false;
  return std::log(u) < log_score - log_M;
}

}  // namespace mpg
