// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpg {

// Per-run counters. forward_passes[0] is the reference model, entry i the
// i-th preference model. Merging is element-wise addition, so it is
// associative and order-independent.
struct DecodeStats {
  std::vector<std::uint64_t> forward_passes;
  std::uint64_t sequences = 0;
  std::uint64_t tokens_emitted = 0;

  std::uint64_t chunks_proposed = 0;
  std::uint64_t full_accepted = 0;
  std::uint64_t prefix_salvaged = 0;
  std::uint64_t chunks_rejected = 0;  // neither the chunk nor any prefix passed

  std::uint64_t candidates_tested = 0;
  std::uint64_t candidates_accepted = 0;
  std::uint64_t candidates_rejected = 0;

  std::uint64_t fallback_invocations = 0;
  std::uint64_t fallback_attempts = 0;
  std::uint64_t fallback_cap_hits = 0;
  std::uint64_t progress_stalls = 0;

  std::uint64_t envelope_violations = 0;  // fixed-envelope samplers: S > log M seen
  std::uint64_t ratio_caps = 0;
  std::uint64_t bound_freezes = 0;
  std::uint64_t bound_unfreezes = 0;

  double wall_clock_seconds = 0.0;

  explicit DecodeStats(std::size_t models = 1) : forward_passes(models, 0) {}

  std::uint64_t total_forward_passes() const {
    return std::accumulate(forward_passes.begin(), forward_passes.end(), std::uint64_t{0});
  }

  double rejection_rate() const {
    return candidates_tested == 0 ? 0.0
                                  : static_cast<double>(candidates_rejected) / static_cast<double>(candidates_tested);
  }

  double passes_per_token() const {
    return tokens_emitted == 0 ? 0.0
                               : static_cast<double>(total_forward_passes()) / static_cast<double>(tokens_emitted);
  }

  void record_test(bool accepted) {
    ++candidates_tested;
    if (accepted) {
      ++candidates_accepted;
    } else {
      ++candidates_rejected;
    }
  }

  DecodeStats& operator+=(const DecodeStats& o) {
    if (forward_passes.size() < o.forward_passes.size()) forward_passes.resize(o.forward_passes.size(), 0);
    for (std::size_t i = 0; i < o.forward_passes.size(); ++i) forward_passes[i] += o.forward_passes[i];
    sequences += o.sequences;
    tokens_emitted += o.tokens_emitted;
    chunks_proposed += o.chunks_proposed;
    full_accepted += o.full_accepted;
    prefix_salvaged += o.prefix_salvaged;
    chunks_rejected += o.chunks_rejected;
    candidates_tested += o.candidates_tested;
    candidates_accepted += o.candidates_accepted;
    candidates_rejected += o.candidates_rejected;
    fallback_invocations += o.fallback_invocations;
    fallback_attempts += o.fallback_attempts;
    fallback_cap_hits += o.fallback_cap_hits;
    progress_stalls += o.progress_stalls;
    envelope_violations += o.envelope_violations;
    ratio_caps += o.ratio_caps;
    bound_freezes += o.bound_freezes;
    bound_unfreezes += o.bound_unfreezes;
    wall_clock_seconds += o.wall_clock_seconds;
    return *this;
  }

  friend bool operator==(const DecodeStats& a, const DecodeStats& b) {
    // Wall clock is excluded: two identical runs never agree on it.
    return a.forward_passes == b.forward_passes && a.sequences == b.sequences &&
           a.tokens_emitted == b.tokens_emitted && a.chunks_proposed == b.chunks_proposed &&
           a.full_accepted == b.full_accepted && a.prefix_salvaged == b.prefix_salvaged &&
           a.chunks_rejected == b.chunks_rejected && a.candidates_tested == b.candidates_tested &&
           a.candidates_accepted == b.candidates_accepted && a.candidates_rejected == b.candidates_rejected &&
           a.fallback_invocations == b.fallback_invocations && a.fallback_attempts == b.fallback_attempts &&
           a.fallback_cap_hits == b.fallback_cap_hits && a.progress_stalls == b.progress_stalls &&
           a.envelope_violations == b.envelope_violations && a.ratio_caps == b.ratio_caps &&
           a.bound_freezes == b.bound_freezes && a.bound_unfreezes == b.bound_unfreezes;
  }
};

inline nlohmann::json to_json(const DecodeStats& s) {
  return {
      {"forward_passes", s.forward_passes},
      {"total_forward_passes", s.total_forward_passes()},
      {"passes_per_token", s.passes_per_token()},
      {"sequences", s.sequences},
      {"tokens_emitted", s.tokens_emitted},
      {"chunks_proposed", s.chunks_proposed},
      {"full_accepted", s.full_accepted},
      {"prefix_salvaged", s.prefix_salvaged},
      {"chunks_rejected", s.chunks_rejected},
      {"candidates_tested", s.candidates_tested},
      {"candidates_accepted", s.candidates_accepted},
      {"candidates_rejected", s.candidates_rejected},
      {"rejection_rate", s.rejection_rate()},
      {"fallback_invocations", s.fallback_invocations},
      {"fallback_attempts", s.fallback_attempts},
      {"fallback_cap_hits", s.fallback_cap_hits},
      {"progress_stalls", s.progress_stalls},
      {"envelope_violations", s.envelope_violations},
      {"ratio_caps", s.ratio_caps},
      {"bound_freezes", s.bound_freezes},
      {"bound_unfreezes", s.bound_unfreezes},
      {"wall_clock_seconds", s.wall_clock_seconds},
  };
}

}  // namespace mpg
