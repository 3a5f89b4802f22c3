// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mpg/mpg.hpp"

namespace mpg::testing {

// Replays a fixed list of uniforms; running out is a test bug.
class ScriptedUniforms {
 public:
  ScriptedUniforms(std::initializer_list<double> values) : values_(values) {}
  explicit ScriptedUniforms(std::vector<double> values) : values_(values.begin(), values.end()) {}

  double uniform() {
    if (values_.empty()) throw std::logic_error("scripted uniforms exhausted");
    const double u = values_.front();
    values_.pop_front();
    ++consumed_;
    return u;
  }

  std::size_t consumed() const noexcept { return consumed_; }
  std::size_t remaining() const noexcept { return values_.size(); }

 private:
  std::deque<double> values_;
  std::size_t consumed_ = 0;
};

// Vocabulary a, b, c, d + eos, the shape of every toy instance here.
inline Vocabulary vocab5() { return Vocabulary(5, 4, {"a", "b", "c", "d", "</s>"}); }

inline std::shared_ptr<const LanguageModel> unigram5(std::vector<double> probs) {
  return ToyModel::unigram(vocab5(), std::move(probs));
}

// Bigram with random rows drawn from `rng`; no zero entries.
inline std::shared_ptr<ToyModel> random_bigram(const Vocabulary& vocab, Rng& rng) {
  auto row = [&] {
    std::vector<double> r(vocab.size());
    double s = 0.0;
    for (double& v : r) {
      v = 0.05 + rng.uniform();
      s += v;
    }
    for (double& v : r) v /= s;
    return r;
  };
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < vocab.size(); ++i) rows.push_back(row());
  return ToyModel::bigram(vocab, row(), std::move(rows));
}

}  // namespace mpg::testing
