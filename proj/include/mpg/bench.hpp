// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpg/baselines.hpp"
#include "mpg/bundle.hpp"
#include "mpg/config.hpp"
#include "mpg/oracle.hpp"
#include "mpg/scr.hpp"

namespace mpg {

struct BenchRow {
  DecoderKind decoder = DecoderKind::base;
  double throughput_tok_s = 0.0;
  double latency_s = 0.0;
  double passes_per_token = 0.0;
  std::optional<double> rejection_rate_pct;  // absent for decoders without an accept test
  DecodeStats stats;                         // summed over all repetitions
  std::optional<std::string> error;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::size_t preference_models = 0;
  std::size_t k = 0;
  std::size_t prompts = 0;
  std::size_t max_new_tokens = 0;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;

  const BenchRow* row(DecoderKind kind) const {
    for (const auto& r : rows) {
      if (r.decoder == kind) return &r;
    }
    return nullptr;
  }
};

// Returns the fixed sequence envelope for a prompt (sequence-level RS only).
using EnvelopeProvider = std::function<double(std::span<const TokenId>)>;

struct BenchOptions {
  std::vector<DecoderKind> decoders{DecoderKind::base, DecoderKind::mod, DecoderKind::seq_rs, DecoderKind::token_rs,
                                    DecoderKind::scr};
  std::vector<TokenSequence> prompts;
  std::size_t repetitions = 3;
  std::uint64_t seed = 0;
  EnvelopeProvider seq_rs_envelope;  // defaults to cfg.seq_rs_log_M, else exact enumeration
};

// Random prompts of 1-3 non-eos tokens.
inline std::vector<TokenSequence> synthetic_prompts(const Vocabulary& vocab, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenSequence> prompts;
  prompts.reserve(count);
  const std::size_t content = vocab.size() - 1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = 1 + rng.next_u64() % 3;
    TokenSequence p;
    for (std::size_t j = 0; j < len; ++j) {
      TokenId t = static_cast<TokenId>(rng.next_u64() % content);
      if (t >= vocab.eos()) ++t;
      p.push_back(t);
    }
    prompts.push_back(std::move(p));
  }
  return prompts;
}

template <UniformSource U>
DecodeResult run_decoder(DecoderKind kind, const ModelBundle& models, const PreferenceWeights& weights,
                         const DecodeConfig& cfg, std::span<const TokenId> prompt, U& rng,
                         const EnvelopeProvider& envelope = {}) {
  switch (kind) {
    case DecoderKind::base: {
      auto r = base_decode(models.reference(), cfg, prompt, rng);
      r.stats.forward_passes.resize(models.size() + 1, 0);
      return r;
    }
    case DecoderKind::mod: return mod_decode(models.reference(), models.preferences(), weights, cfg, prompt, rng);
    case DecoderKind::token_rs:
      return token_rs_decode(models.reference(), models.preferences(), weights, cfg, prompt, rng);
    case DecoderKind::scr: return scr_decode(models.reference(), models.preferences(), weights, cfg, prompt, rng);
    case DecoderKind::seq_rs: {
      double log_M;
      if (envelope) {
        log_M = envelope(prompt);
      } else if (cfg.seq_rs_log_M) {
        log_M = *cfg.seq_rs_log_M;
      } else {
        log_M = max_sequence_log_score(models.reference(), models.preferences(), weights, prompt, cfg.max_new_tokens);
      }
      return seq_rs_decode(models.reference(), models.preferences(), weights, cfg, prompt, log_M, rng);
    }
  }
  fail(ErrorKind::config, "unknown decoder");
}

// Runs every decoder over every prompt `repetitions` times with identical
// seeds per repetition. Metrics are computed per repetition and averaged;
// a decoder that throws gets an error row and the run moves on.
inline BenchReport run_benchmark(const ModelBundle& models, const PreferenceWeights& weights, const DecodeConfig& cfg,
                                 const BenchOptions& opts) {
  if (opts.prompts.empty()) fail(ErrorKind::config, "benchmark needs at least one prompt");
  if (opts.repetitions == 0) fail(ErrorKind::config, "benchmark needs at least one repetition");
  cfg.validate();
  BenchReport report;
  report.preference_models = models.size();
  report.k = cfg.k;
  report.prompts = opts.prompts.size();
  report.max_new_tokens = cfg.max_new_tokens;
  report.repetitions = opts.repetitions;
  report.seed = opts.seed;

  for (DecoderKind kind : opts.decoders) {
    BenchRow row;
    row.decoder = kind;
    row.stats = DecodeStats(models.size() + 1);
    double rejection_sum = 0.0;
    try {
      for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
        Rng rng(opts.seed + 1000003ULL * rep);
        DecodeStats rep_stats(models.size() + 1);
        for (const auto& prompt : opts.prompts) {
          rep_stats += run_decoder(kind, models, weights, cfg, prompt, rng, opts.seq_rs_envelope).stats;
        }
        const double wall = std::max(rep_stats.wall_clock_seconds, 1e-12);
        row.throughput_tok_s += static_cast<double>(rep_stats.tokens_emitted) / wall;
        row.latency_s += rep_stats.wall_clock_seconds / static_cast<double>(opts.prompts.size());
        row.passes_per_token += rep_stats.passes_per_token();
        rejection_sum += rep_stats.rejection_rate();
        row.stats += rep_stats;
      }
      const auto reps = static_cast<double>(opts.repetitions);
      row.throughput_tok_s /= reps;
      row.latency_s /= reps;
      row.passes_per_token /= reps;
      if (kind == DecoderKind::seq_rs || kind == DecoderKind::token_rs || kind == DecoderKind::scr) {
        row.rejection_rate_pct = 100.0 * rejection_sum / reps;
      }
    } catch (const Error& e) {
      row.error = e.what();
      event_log().warn("{} failed: {}", to_string(kind), e.what());
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row = {{"decoder", std::string(to_string(r.decoder))}};
    if (r.error) {
      row["error"] = *r.error;
    } else {
      row["throughput_tok_s"] = r.throughput_tok_s;
      row["latency_s"] = r.latency_s;
      row["passes_per_token"] = r.passes_per_token;
      row["rejection_rate_pct"] = r.rejection_rate_pct ? nlohmann::json(*r.rejection_rate_pct) : nlohmann::json();
      row["stats"] = to_json(r.stats);
    }
    rows.push_back(std::move(row));
  }
  return {{"rows", rows},
          {"meta",
           {{"N", report.preference_models},
            {"k", report.k},
            {"prompts", report.prompts},
            {"max_new_tokens", report.max_new_tokens},
            {"repetitions", report.repetitions},
            {"seed", report.seed}}}};
}

}  // namespace mpg
