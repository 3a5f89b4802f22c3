// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpg/bound.hpp"
#include "mpg/error.hpp"
#include "mpg/sampling.hpp"
#include "mpg/scoring.hpp"

namespace mpg {

enum class BufferPolicy { accepted_only, all_observed };

enum class DecoderKind { base, seq_rs, token_rs, mod, scr };

inline std::string_view to_string(DecoderKind kind) {
  switch (kind) {
    case DecoderKind::base: return "base";
    case DecoderKind::seq_rs: return "seq-rs";
    case DecoderKind::token_rs: return "token-rs";
    case DecoderKind::mod: return "mod";
    case DecoderKind::scr: return "scr";
  }
  return "unknown";
}

inline DecoderKind parse_decoder_kind(const std::string& name) {
  if (name == "base") return DecoderKind::base;
  if (name == "seq-rs") return DecoderKind::seq_rs;
  if (name == "token-rs") return DecoderKind::token_rs;
  if (name == "mod") return DecoderKind::mod;
  if (name == "scr") return DecoderKind::scr;
  fail(ErrorKind::config, "unknown decoder \"" + name + "\"");
}

// Defaults follow the reported setup: k = 4, W = 20, gamma = 1.2,
// tau = 0.01, proposals at temperature 0.7 / top-p 0.9, 128 new tokens.
struct DecodeConfig {
  std::size_t k = 4;
  BoundParams bound{};
  bool log_M0_auto = true;  // ln(sum max(alpha_i, 0)) + 3, resolved per run
  SamplingConfig sampling{0.7, 0.9, 0};
  std::size_t max_new_tokens = 128;
  std::size_t fallback_cap = 64;
  BufferPolicy buffer_policy = BufferPolicy::accepted_only;
  ProposalLogProbs proposal_logprobs = ProposalLogProbs::raw;
  bool parallel_scoring = false;

  // Fixed envelope and proposal cap for sequence-level rejection sampling;
  // nullopt asks the caller to derive the envelope (e.g. by enumeration).
  std::optional<double> seq_rs_log_M;
  std::size_t seq_rs_retry_cap = 10000;

  static constexpr double kAutoLogM0Slack = 3.0;

  void validate() const {
    if (k == 0) fail(ErrorKind::config, "k must be at least 1");
    bound.validate();
    sampling.validate();
    if (max_new_tokens == 0) fail(ErrorKind::config, "max_new_tokens must be positive");
    if (fallback_cap == 0) fail(ErrorKind::config, "fallback_cap must be at least 1");
    if (seq_rs_retry_cap == 0) fail(ErrorKind::config, "seq_rs_retry_cap must be at least 1");
    if (seq_rs_log_M && !std::isfinite(*seq_rs_log_M)) fail(ErrorKind::config, "seq_rs_log_M must be finite");
  }

  BoundParams resolved_bound(const PreferenceWeights& weights) const {
    BoundParams p = bound;
    if (log_M0_auto) p.log_M0 = weights.log_positive_mass() + kAutoLogM0Slack;
    return p;
  }
};

// Run configuration document: decoder parameters plus the weights, seed and
// decoder selection.
struct RunConfig {
  DecoderKind decoder = DecoderKind::scr;
  DecodeConfig decode{};
  std::vector<double> alphas;
  std::uint64_t seed = 0;
};

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  RunConfig rc;
  auto& d = rc.decode;
  try {
    if (!doc.is_object()) fail(ErrorKind::config, "run configuration must be a JSON object");
    if (doc.contains("decoder")) rc.decoder = parse_decoder_kind(doc.at("decoder").get<std::string>());
    if (doc.contains("k")) d.k = doc.at("k").get<std::size_t>();
    if (doc.contains("W")) d.bound.window = doc.at("W").get<std::size_t>();
    if (doc.contains("log_M0")) {
      const auto& v = doc.at("log_M0");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") fail(ErrorKind::config, "log_M0 must be a number or \"auto\"");
        d.log_M0_auto = true;
      } else {
        d.bound.log_M0 = v.get<double>();
        d.log_M0_auto = false;
      }
    }
    if (doc.contains("gamma")) d.bound.gamma = doc.at("gamma").get<double>();
    if (doc.contains("tau")) d.bound.tau = doc.at("tau").get<double>();
    if (doc.contains("temperature")) d.sampling.temperature = doc.at("temperature").get<double>();
    if (doc.contains("top_p")) d.sampling.top_p = doc.at("top_p").get<double>();
    if (doc.contains("max_new_tokens")) d.max_new_tokens = doc.at("max_new_tokens").get<std::size_t>();
    if (doc.contains("fallback_cap")) d.fallback_cap = doc.at("fallback_cap").get<std::size_t>();
    if (doc.contains("buffer_policy")) {
      const auto policy = doc.at("buffer_policy").get<std::string>();
      if (policy == "accepted") {
        d.buffer_policy = BufferPolicy::accepted_only;
      } else if (policy == "observed") {
        d.buffer_policy = BufferPolicy::all_observed;
      } else {
        fail(ErrorKind::config, "buffer_policy must be \"accepted\" or \"observed\"");
      }
    }
    if (doc.contains("proposal_logprobs")) {
      const auto mode = doc.at("proposal_logprobs").get<std::string>();
      if (mode == "raw") {
        d.proposal_logprobs = ProposalLogProbs::raw;
      } else if (mode == "tempered") {
        d.proposal_logprobs = ProposalLogProbs::tempered;
      } else {
        fail(ErrorKind::config, "proposal_logprobs must be \"raw\" or \"tempered\"");
      }
    }
    if (doc.contains("parallel_scoring")) d.parallel_scoring = doc.at("parallel_scoring").get<bool>();
    if (doc.contains("seq_rs_log_M")) {
      const auto& v = doc.at("seq_rs_log_M");
      if (v.is_string()) {
        if (v.get<std::string>() != "auto") fail(ErrorKind::config, "seq_rs_log_M must be a number or \"auto\"");
      } else {
        d.seq_rs_log_M = v.get<double>();
      }
    }
    if (doc.contains("seq_rs_retry_cap")) d.seq_rs_retry_cap = doc.at("seq_rs_retry_cap").get<std::size_t>();
    if (doc.contains("alphas")) rc.alphas = doc.at("alphas").get<std::vector<double>>();
    if (doc.contains("seed")) rc.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::config, e.what());
  }
  d.sampling.seed = rc.seed;
  d.validate();
  return rc;
}

inline nlohmann::json to_json(const RunConfig& rc) {
  const auto& d = rc.decode;
  nlohmann::json doc = {
      {"decoder", std::string(to_string(rc.decoder))},
      {"k", d.k},
      {"W", d.bound.window},
      {"gamma", d.bound.gamma},
      {"tau", d.bound.tau},
      {"temperature", d.sampling.temperature},
      {"top_p", d.sampling.top_p},
      {"max_new_tokens", d.max_new_tokens},
      {"fallback_cap", d.fallback_cap},
      {"buffer_policy", d.buffer_policy == BufferPolicy::accepted_only ? "accepted" : "observed"},
      {"proposal_logprobs", d.proposal_logprobs == ProposalLogProbs::raw ? "raw" : "tempered"},
      {"parallel_scoring", d.parallel_scoring},
      {"seq_rs_retry_cap", d.seq_rs_retry_cap},
      {"alphas", rc.alphas},
      {"seed", rc.seed},
  };
  if (d.log_M0_auto) {
    doc["log_M0"] = "auto";
  } else {
    doc["log_M0"] = d.bound.log_M0;
  }
  if (d.seq_rs_log_M) {
    doc["seq_rs_log_M"] = *d.seq_rs_log_M;
  } else {
    doc["seq_rs_log_M"] = "auto";
  }
  return doc;
}

}  // namespace mpg
