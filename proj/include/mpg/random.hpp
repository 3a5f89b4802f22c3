// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <cstdint>
#include <random>

namespace mpg {

// Anything that hands out uniform draws strictly inside (0, 1). The decoders
// are templated on this so tests can inject scripted sequences.
template <class U>
concept UniformSource = requires(U& u) {
  { u.uniform() } -> std::convertible_to<double>;
};

// Seeded 64-bit Mersenne Twister. uniform() maps the top 53 bits to the
// open interval, so log(u) is always finite.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform() {
    const std::uint64_t bits = engine_() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return engine_(); }

  // Independent child stream, used to shard Monte Carlo runs.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

static_assert(UniformSource<Rng>);

}  // namespace mpg
