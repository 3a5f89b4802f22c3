// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpg/error.hpp"

namespace mpg {

// Maps a weight vector to one accuracy per preference dimension. Must be
// deterministic for a fixed seed.
using AccuracyFn = std::function<std::vector<double>(std::span<const double>)>;

struct TunerEntry {
  std::size_t step = 0;
  std::vector<double> alphas;
  std::vector<double> accuracies;
  double score = 0.0;  // mean accuracy
};

struct TunerState {
  std::vector<double> alphas;     // current point
  std::vector<TunerEntry> history;  // every evaluation, in order
  std::size_t best_index = 0;
  double step_size = 0.0;
  std::size_t steps_run = 0;
  std::optional<std::string> error;  // set when the callback threw

  const TunerEntry& best() const { return history.at(best_index); }
};

namespace detail {

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace detail

// Coordinate search over signed weights. Each step visits the dimensions in
// order, probes +step_size and -step_size on that coordinate and moves to the
// probe with the higher mean accuracy if it beats the current point (ties
// stay put). Stops early once a full step moves nothing.
inline TunerState tune_alpha(const AccuracyFn& evaluate, std::vector<double> initial, std::size_t steps,
                             double step_size) {
  if (steps == 0) fail(ErrorKind::config, "tuner needs at least one step");
  if (!(step_size > 0.0)) fail(ErrorKind::config, "step size must be positive");
  if (initial.empty()) fail(ErrorKind::config, "tuner needs a non-empty initial weight vector");

  TunerState state;
  state.alphas = std::move(initial);
  state.step_size = step_size;

  auto record = [&](std::size_t step, const std::vector<double>& alphas) -> double {
    TunerEntry e;
    e.step = step;
    e.alphas = alphas;
    e.accuracies = evaluate(alphas);
    if (e.accuracies.size() != alphas.size()) fail(ErrorKind::input, "callback must return one accuracy per weight");
    e.score = detail::mean(e.accuracies);
    state.history.push_back(std::move(e));
    if (state.history.back().score > state.history[state.best_index].score) state.best_index = state.history.size() - 1;
    return state.history.back().score;
  };

  try {
    double current = record(0, state.alphas);
    state.best_index = 0;
    for (std::size_t step = 1; step <= steps; ++step) {
      state.steps_run = step;
      bool moved = false;
      for (std::size_t d = 0; d < state.alphas.size(); ++d) {
        std::vector<double> up = state.alphas;
        up[d] += step_size;
        std::vector<double> down = state.alphas;
        down[d] -= step_size;
        const double up_score = record(step, up);
        const double down_score = record(step, down);
        if (up_score > current && up_score >= down_score) {
          state.alphas = std::move(up);
          current = up_score;
          moved = true;
        } else if (down_score > current) {
          state.alphas = std::move(down);
          current = down_score;
          moved = true;
        }
      }
      if (!moved) break;
    }
  } catch (const std::exception& e) {
    state.error = e.what();
  }
  return state;
}

// Accuracy callback for tests and the CLI: each dimension scores
// -(alpha_d - target_d)^2, peaking at the hidden target.
inline AccuracyFn synthetic_accuracy(std::vector<double> target) {
  return [target = std::move(target)](std::span<const double> alphas) {
    std::vector<double> acc(alphas.size());
    for (std::size_t d = 0; d < alphas.size(); ++d) {
      const double diff = alphas[d] - (d < target.size() ? target[d] : 0.0);
      acc[d] = -diff * diff;
    }
    return acc;
  };
}

inline nlohmann::json to_json(const TunerState& state) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : state.history) {
    history.push_back({{"step", e.step}, {"alphas", e.alphas}, {"accuracies", e.accuracies}, {"score", e.score}});
  }
  nlohmann::json doc = {{"alphas", state.alphas},
                        {"step_size", state.step_size},
                        {"steps_run", state.steps_run},
                        {"history", history}};
  if (!state.history.empty()) {
    doc["best"] = {{"alphas", state.best().alphas}, {"score", state.best().score}};
  }
  if (state.error) doc["error"] = *state.error;
  return doc;
}

}  // namespace mpg
