// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "support/helpers.hpp"

namespace mpg {
namespace {

using testing::vocab5;

TEST(Rng, UniformStaysInOpenInterval) {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(SampleToken, OneHotIsDeterministic) {
  const auto dist = LogProbVector::from_probabilities(std::vector<double>{0, 0, 1, 0});
  Rng rng(5);
  for (const SamplingConfig cfg : {SamplingConfig{1.0, 1.0, 0}, SamplingConfig{0.7, 0.9, 0}, SamplingConfig{2.5, 0.1, 0}}) {
    for (int i = 0; i < 200; ++i) EXPECT_EQ(sample_token(dist, cfg, rng), 2u);
  }
}

TEST(SampleToken, MonteCarloMatchesDistribution) {
  const std::vector<double> p{0.1, 0.35, 0.05, 0.3, 0.2};
  const auto dist = LogProbVector::from_probabilities(p);
  Rng rng(17);
  std::vector<double> counts(p.size(), 0.0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[sample_token(dist, SamplingConfig{}, rng)] += 1.0;
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(counts[i] / n - p[i]);
  EXPECT_LE(0.5 * tv, 0.01);
}

TEST(SampleToken, TopPHalfKeepsTwoTokens) {
  const auto dist = LogProbVector::from_probabilities(std::vector<double>{0.4, 0.3, 0.2, 0.1});
  Rng rng(9);
  std::map<TokenId, int> seen;
  for (int i = 0; i < 20000; ++i) ++seen[sample_token(dist, SamplingConfig{1.0, 0.5, 0}, rng)];
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_TRUE(seen.count(0) && seen.count(1));
}

TEST(SampleToken, AllNegInfIsDegenerate) {
  // LogProbVector refuses such input, so go through the probability path.
  std::vector<double> probs{0.0, 0.0};
  Rng rng(1);
  try {
    draw_from(probs, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_distribution);
  }
}

TEST(Nucleus, TiesBrokenByAscendingId) {
  // 0.3 = 0.3 tie between ids 1 and 3; top_p 0.5 needs the first two sorted
  // entries: id 0 (0.35) and the lower-id tie, 1.
  const std::vector<double> probs{0.35, 0.3, 0.05, 0.3};
  EXPECT_EQ(nucleus_support(probs, 0.5), (std::vector<TokenId>{0, 1}));
}

TEST(Nucleus, ExactBoundaryStopsAtThatPrefix) {
  EXPECT_EQ(nucleus_support(std::vector<double>{0.4, 0.3, 0.2, 0.1}, 0.7), (std::vector<TokenId>{0, 1}));
}

TEST(Nucleus, PropertyMinimalPrefixAgainstBruteForce) {
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 7;
    std::vector<double> probs(n);
    double s = 0.0;
    for (double& p : probs) {
      // Coarse grid so ties are common.
      p = static_cast<double>(1 + rng.next_u64() % 5);
      s += p;
    }
    for (double& p : probs) p /= s;
    const double top_p = 0.05 + 0.95 * rng.uniform();
    // Brute force: order by (prob desc, id asc), take the shortest prefix
    // whose mass reaches top_p.
    std::vector<TokenId> order(n);
    for (TokenId t = 0; t < n; ++t) order[t] = t;
    std::sort(order.begin(), order.end(), [&](TokenId a, TokenId b) {
      return probs[a] != probs[b] ? probs[a] > probs[b] : a < b;
    });
    std::vector<TokenId> expected;
    double cum = 0.0;
    for (TokenId t : order) {
      expected.push_back(t);
      cum += probs[t];
      if (cum >= top_p - 1e-12) break;
    }
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(nucleus_support(probs, top_p), expected) << "trial " << trial;
  }
}

TEST(ProposalProbabilities, TemperatureAppliedBeforeTruncation) {
  // At T = 0.5 the probabilities square before renormalization:
  // [0.5, 0.3, 0.2] -> [0.25, 0.09, 0.04] / 0.38 = [0.658, 0.237, 0.105].
  // top_p 0.85 then keeps {0, 1} (0.895 >= 0.85); untempered it would need all three.
  const auto dist = LogProbVector::from_probabilities(std::vector<double>{0.5, 0.3, 0.2});
  const auto q = proposal_probabilities(dist, SamplingConfig{0.5, 0.85, 0});
  EXPECT_NEAR(q[0], 0.25 / 0.34, 1e-12);
  EXPECT_NEAR(q[1], 0.09 / 0.34, 1e-12);
  EXPECT_EQ(q[2], 0.0);
  EXPECT_EQ(nucleus_support(std::vector<double>{0.5, 0.3, 0.2}, 0.85).size(), 3u);
}

TEST(SamplingConfig, InvalidValuesRejected) {
  EXPECT_THROW((SamplingConfig{0.0, 0.9, 0}.validate()), Error);
  EXPECT_THROW((SamplingConfig{1.0, 0.0, 0}.validate()), Error);
  EXPECT_THROW((SamplingConfig{1.0, 1.5, 0}.validate()), Error);
  EXPECT_NO_THROW((SamplingConfig{0.7, 0.9, 0}.validate()));
}

TEST(ProposeChunk, FullLengthWithoutEos) {
  auto m = ToyModel::unigram(vocab5(), {0.25, 0.25, 0.25, 0.25, 0.0});
  Rng rng(2);
  const auto p = propose_chunk(*m, TokenSequence{0}, 4, SamplingConfig{0.7, 0.9, 0}, rng);
  EXPECT_EQ(p.tokens.size(), 4u);
  EXPECT_FALSE(p.truncated_by_eos);
  EXPECT_EQ(m->forward_passes(), 4u);
}

TEST(ProposeChunk, EosAtPositionTwoTruncates) {
  // Deterministic rows: start -> a, a -> eos.
  auto m = ToyModel::bigram(vocab5(), {1, 0, 0, 0, 0},
                            {{0, 0, 0, 0, 1}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}});
  Rng rng(2);
  const auto p = propose_chunk(*m, TokenSequence{}, 4, SamplingConfig{}, rng);
  EXPECT_EQ(p.tokens, (TokenSequence{0, 4}));
  EXPECT_TRUE(p.truncated_by_eos);
  EXPECT_EQ(m->forward_passes(), 2u);
}

TEST(ProposeChunk, EosAsLastAllowedTokenIsNotTruncation) {
  auto m = ToyModel::bigram(vocab5(), {1, 0, 0, 0, 0},
                            {{0, 0, 0, 0, 1}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}});
  Rng rng(2);
  const auto p = propose_chunk(*m, TokenSequence{}, 2, SamplingConfig{}, rng);
  EXPECT_EQ(p.tokens, (TokenSequence{0, 4}));
  EXPECT_FALSE(p.truncated_by_eos);
}

TEST(ProposeChunk, OneHotGivesGreedyPathWithZeroLogprobs) {
  auto m = ToyModel::bigram(vocab5(), {0, 1, 0, 0, 0},
                            {{0, 0, 1, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 1, 0}, {1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}});
  Rng rng(8);
  const auto p = propose_chunk(*m, TokenSequence{}, 4, SamplingConfig{0.7, 0.9, 0}, rng);
  EXPECT_EQ(p.tokens, (TokenSequence{1, 2, 3, 0}));
  for (double lp : p.ref_logprobs) EXPECT_EQ(lp, 0.0);
}

TEST(ProposeChunk, RawLogprobsRegardlessOfSampling) {
  auto ref = instances::toy_reference();
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const TokenSequence ctx{static_cast<TokenId>(i % 4)};
    const auto p = propose_chunk(*ref, ctx, 4, SamplingConfig{0.7, 0.9, 0}, rng);
    TokenSequence running = ctx;
    for (std::size_t j = 0; j < p.tokens.size(); ++j) {
      ASSERT_DOUBLE_EQ(p.ref_logprobs[j], ref->logprobs(running)[p.tokens[j]]);
      running.push_back(p.tokens[j]);
    }
  }
}

TEST(ProposeChunk, TemperedModeRecordsProposalLogprobs) {
  auto ref = instances::toy_reference();
  const SamplingConfig cfg{0.7, 0.9, 0};
  Rng rng(4);
  const auto p = propose_chunk(*ref, TokenSequence{0}, 1, cfg, rng, ProposalLogProbs::tempered);
  const auto q = proposal_probabilities(ref->logprobs(TokenSequence{0}), cfg);
  EXPECT_NEAR(p.ref_logprobs[0], std::log(q[p.tokens[0]]), 1e-12);
}

TEST(ProposeChunk, DeterministicUnderSeed) {
  auto ref = instances::toy_reference();
  Rng a(99), b(99);
  for (int i = 0; i < 50; ++i) {
    const auto pa = propose_chunk(*ref, TokenSequence{1}, 4, SamplingConfig{0.7, 0.9, 0}, a);
    const auto pb = propose_chunk(*ref, TokenSequence{1}, 4, SamplingConfig{0.7, 0.9, 0}, b);
    ASSERT_EQ(pa.tokens, pb.tokens);
    ASSERT_EQ(pa.ref_logprobs, pb.ref_logprobs);
  }
}

TEST(ProposeChunk, ZeroKIsInputError) {
  auto ref = instances::toy_reference();
  Rng rng(1);
  EXPECT_THROW(propose_chunk(*ref, TokenSequence{0}, 0, SamplingConfig{}, rng), Error);
}

}  // namespace
}  // namespace mpg
