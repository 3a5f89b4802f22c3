// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mpg/cli.hpp"
#include "support/helpers.hpp"

namespace mpg {
namespace {

using testing::unigram5;

// ---- benchmark ---------------------------------------------------------

TEST(Bench, AlwaysAcceptConstruction) {
  auto ref = unigram5({0.25, 0.25, 0.25, 0.25, 0.0});
  const ModelBundle models(ref, {ref, ref});
  const PreferenceWeights w({0.5, 0.5});
  DecodeConfig cfg;
  cfg.k = 4;
  cfg.max_new_tokens = 128;
  cfg.log_M0_auto = false;
  cfg.bound.log_M0 = w.log_positive_mass();
  cfg.bound.window = 1000;  // never leaves warm-up, so log M stays at ln sum(alpha)
  BenchOptions opts;
  opts.decoders = {DecoderKind::base, DecoderKind::scr, DecoderKind::mod, DecoderKind::token_rs};
  opts.prompts = synthetic_prompts(models.vocabulary(), 10, 1);
  const auto report = run_benchmark(models, w, cfg, opts);
  EXPECT_DOUBLE_EQ(report.row(DecoderKind::base)->passes_per_token, 1.0);
  EXPECT_DOUBLE_EQ(report.row(DecoderKind::scr)->passes_per_token, 1.0 + 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(report.row(DecoderKind::mod)->passes_per_token, 3.0);
  EXPECT_DOUBLE_EQ(report.row(DecoderKind::token_rs)->passes_per_token, 3.0);
  EXPECT_DOUBLE_EQ(*report.row(DecoderKind::scr)->rejection_rate_pct, 0.0);
  EXPECT_FALSE(report.row(DecoderKind::base)->rejection_rate_pct.has_value());
}

TEST(Bench, BaseIsOnePassForAnyPromptSet) {
  const auto models = instances::toy_bundle();
  BenchOptions opts;
  opts.decoders = {DecoderKind::base};
  opts.prompts = synthetic_prompts(models.vocabulary(), 25, 99);
  opts.repetitions = 3;
  const auto report = run_benchmark(models, PreferenceWeights({0.6, 0.4}), DecodeConfig{}, opts);
  EXPECT_DOUBLE_EQ(report.rows.at(0).passes_per_token, 1.0);
  EXPECT_EQ(report.repetitions, 3u);
  EXPECT_EQ(report.prompts, 25u);
}

TEST(Bench, MatchedInstanceOrdering) {
  const auto models = instances::toy_bundle();
  const PreferenceWeights w({0.6, 0.4});
  DecodeConfig cfg;
  cfg.max_new_tokens = 4;
  cfg.log_M0_auto = false;
  cfg.bound.log_M0 = w.log_positive_mass() + 0.3;
  BenchOptions opts;
  opts.prompts = synthetic_prompts(models.vocabulary(), 40, 5);
  opts.seed = 5;
  const auto report = run_benchmark(models, w, cfg, opts);
  for (const auto& row : report.rows) ASSERT_FALSE(row.error.has_value()) << *row.error;
  const double base = report.row(DecoderKind::base)->passes_per_token;
  const double scr = report.row(DecoderKind::scr)->passes_per_token;
  const double mod = report.row(DecoderKind::mod)->passes_per_token;
  const double tok = report.row(DecoderKind::token_rs)->passes_per_token;
  const double seq = report.row(DecoderKind::seq_rs)->passes_per_token;
  EXPECT_LT(base, scr);
  EXPECT_LT(scr, mod);
  EXPECT_LE(mod, tok);
  EXPECT_LT(tok, seq);
  EXPECT_GT(*report.row(DecoderKind::seq_rs)->rejection_rate_pct, *report.row(DecoderKind::scr)->rejection_rate_pct);
}

TEST(Bench, FailingDecoderGetsErrorRowAndRunContinues) {
  const auto models = instances::toy_bundle();
  DecodeConfig cfg;
  cfg.max_new_tokens = 16;  // 5^16 sequences: exact Seq-RS envelope is refused
  BenchOptions opts;
  opts.decoders = {DecoderKind::seq_rs, DecoderKind::base};
  opts.prompts = synthetic_prompts(models.vocabulary(), 3, 1);
  opts.repetitions = 1;
  const auto report = run_benchmark(models, PreferenceWeights({0.6, 0.4}), cfg, opts);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].error.has_value());
  EXPECT_FALSE(report.rows[1].error.has_value());
  const auto doc = to_json(report);
  EXPECT_TRUE(doc["rows"][0].contains("error"));
}

TEST(Bench, StatsMergeIsOrderIndependent) {
  const auto models = instances::toy_bundle();
  DecodeConfig cfg;
  cfg.max_new_tokens = 20;
  const PreferenceWeights w({0.6, 0.4});
  std::vector<DecodeStats> parts;
  Rng rng(3);
  for (int i = 0; i < 6; ++i) {
    parts.push_back(scr_decode(models.reference(), models.preferences(), w, cfg, TokenSequence{0}, rng).stats);
  }
  DecodeStats forward(3), backward(3);
  for (const auto& p : parts) forward += p;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) backward += *it;
  EXPECT_EQ(forward, backward);
  EXPECT_EQ(forward.sequences, 6u);
}

TEST(Bench, SyntheticPromptsAvoidEos) {
  const auto prompts = synthetic_prompts(instances::toy_vocabulary(), 200, 3);
  ASSERT_EQ(prompts.size(), 200u);
  for (const auto& p : prompts) {
    ASSERT_GE(p.size(), 1u);
    ASSERT_LE(p.size(), 3u);
    for (TokenId t : p) ASSERT_LT(t, 4u);
  }
}

// ---- tuner --------------------------------------------------------------

TEST(Tuner, ReachesHiddenOptimum) {
  const std::vector<double> target{1, 0, -9, -3};
  const auto state = tune_alpha(synthetic_accuracy(target), {1, 1, 1, 1}, 200, 1.0);
  ASSERT_FALSE(state.error.has_value());
  for (std::size_t d = 0; d < 4; ++d) EXPECT_LE(std::abs(state.best().alphas[d] - target[d]), 1.0);
}

TEST(Tuner, ConstantEvaluateKeepsAlphas) {
  const auto state = tune_alpha([](std::span<const double> a) { return std::vector<double>(a.size(), 0.5); },
                                {0.2, -0.3}, 10, 0.5);
  EXPECT_EQ(state.alphas, (std::vector<double>{0.2, -0.3}));
  EXPECT_EQ(state.steps_run, 1u);
}

TEST(Tuner, OneStepOneImprovingCoordinate) {
  const std::vector<double> initial{0.5, 0.5, 0.5};
  const auto state = tune_alpha(synthetic_accuracy({0.5, 0.5, 3.0}), initial, 1, 1.0);
  EXPECT_EQ(state.alphas, (std::vector<double>{0.5, 0.5, 1.5}));
}

TEST(Tuner, BestSoFarIsMonotone) {
  double previous = -INFINITY;
  for (std::size_t steps = 1; steps <= 20; ++steps) {
    const auto state = tune_alpha(synthetic_accuracy({2, -1, 4}), {0, 0, 0}, steps, 0.5);
    double best = -INFINITY;
    for (const auto& e : state.history) best = std::max(best, e.score);
    ASSERT_DOUBLE_EQ(state.best().score, best);
    ASSERT_GE(best, previous);
    previous = best;
  }
}

TEST(Tuner, CallbackFailureKeepsPartialHistory) {
  int calls = 0;
  const auto state = tune_alpha(
      [&](std::span<const double> a) {
        if (++calls > 5) throw std::runtime_error("judge unavailable");
        return std::vector<double>(a.size(), static_cast<double>(calls));
      },
      {0, 0}, 10, 1.0);
  ASSERT_TRUE(state.error.has_value());
  EXPECT_EQ(state.history.size(), 5u);
}

TEST(Tuner, InvalidArguments) {
  EXPECT_THROW(tune_alpha(synthetic_accuracy({0}), {0}, 0, 1.0), Error);
  EXPECT_THROW(tune_alpha(synthetic_accuracy({0}), {0}, 5, 0.0), Error);
  EXPECT_THROW(tune_alpha(synthetic_accuracy({0}), {}, 5, 1.0), Error);
}

// ---- configuration ------------------------------------------------------

TEST(RunConfig, ParsesEveryField) {
  const auto rc = parse_run_config(nlohmann::json::parse(R"({
    "decoder": "token-rs", "k": 3, "W": 7, "log_M0": 1.5, "gamma": 1.5, "tau": 0.2,
    "temperature": 0.9, "top_p": 0.8, "max_new_tokens": 12, "fallback_cap": 9,
    "buffer_policy": "observed", "alphas": [1, -2], "seed": 44})"));
  EXPECT_EQ(rc.decoder, DecoderKind::token_rs);
  EXPECT_EQ(rc.decode.k, 3u);
  EXPECT_EQ(rc.decode.bound.window, 7u);
  EXPECT_FALSE(rc.decode.log_M0_auto);
  EXPECT_DOUBLE_EQ(rc.decode.bound.log_M0, 1.5);
  EXPECT_DOUBLE_EQ(rc.decode.bound.gamma, 1.5);
  EXPECT_DOUBLE_EQ(rc.decode.bound.tau, 0.2);
  EXPECT_DOUBLE_EQ(rc.decode.sampling.temperature, 0.9);
  EXPECT_DOUBLE_EQ(rc.decode.sampling.top_p, 0.8);
  EXPECT_EQ(rc.decode.max_new_tokens, 12u);
  EXPECT_EQ(rc.decode.fallback_cap, 9u);
  EXPECT_EQ(rc.decode.buffer_policy, BufferPolicy::all_observed);
  EXPECT_EQ(rc.alphas, (std::vector<double>{1, -2}));
  EXPECT_EQ(rc.seed, 44u);
}

TEST(RunConfig, AutoLogM0) {
  const auto rc = parse_run_config(nlohmann::json{{"log_M0", "auto"}});
  EXPECT_TRUE(rc.decode.log_M0_auto);
  const auto bound = rc.decode.resolved_bound(PreferenceWeights({0.5, 1.5, -2.0}));
  EXPECT_NEAR(bound.log_M0, std::log(2.0) + 3.0, 1e-12);
}

TEST(RunConfig, InvalidDocumentsAreConfigErrors) {
  for (const char* text : {R"({"k": 0})", R"({"gamma": 1.0})", R"({"tau": -1})", R"({"buffer_policy": "some"})",
                           R"({"decoder": "beam"})", R"({"log_M0": "loose"})", R"({"k": "four"})", R"([1, 2])",
                           R"({"fallback_cap": 0})", R"({"top_p": 0})"}) {
    try {
      const auto rc = parse_run_config(nlohmann::json::parse(text));
      rc.decode.validate();
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config) << text;
    }
  }
}

TEST(RunConfig, SampleFileParses) {
  const auto rc = parse_run_config(read_json_file(std::string(MPG_SAMPLES_DIR) + "/run_scr.json"));
  EXPECT_EQ(rc.decoder, DecoderKind::scr);
  EXPECT_EQ(rc.decode.k, 4u);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig rc;
  rc.alphas = {1, 0, -9, -3};
  rc.decode.k = 2;
  rc.decode.log_M0_auto = false;
  rc.decode.bound.log_M0 = 0.25;
  const auto back = parse_run_config(to_json(rc));
  EXPECT_EQ(back.alphas, rc.alphas);
  EXPECT_EQ(back.decode.k, 2u);
  EXPECT_DOUBLE_EQ(back.decode.bound.log_M0, 0.25);
}

// ---- command line -------------------------------------------------------

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mpg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string samples(const std::string& name) { return std::string(MPG_SAMPLES_DIR) + "/" + name; }

TEST(Cli, DecodePrintsTokensAndStats) {
  const auto r = run_cli({"decode", "--config", samples("run_scr.json"), "--models",
                          samples("reference.json") + "," + samples("preference_ab.json") + "," +
                              samples("preference_cd.json"),
                          "--prompt", "0 3 1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  EXPECT_TRUE(doc["tokens"].is_array());
  EXPECT_FALSE(doc["tokens"].empty());
  EXPECT_EQ(doc["prompt"], (nlohmann::json{0, 3, 1}));
  EXPECT_TRUE(doc["stats"].contains("forward_passes"));
}

TEST(Cli, DecodeIsDeterministicAndWritesOut) {
  const std::string path = ::testing::TempDir() + "/mpg_decode.json";
  const auto a = run_cli({"decode", "--seed", "5", "--prompt", "1", "--out", path});
  const auto b = run_cli({"decode", "--seed", "5", "--prompt", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(nlohmann::json::parse(a.out)["tokens"], nlohmann::json::parse(b.out)["tokens"]);
  std::ifstream f(path);
  EXPECT_EQ(nlohmann::json::parse(f)["tokens"], nlohmann::json::parse(a.out)["tokens"]);
  std::remove(path.c_str());
}

TEST(Cli, UnknownFlagExitsOne) {
  const auto r = run_cli({"decode", "--bogus"});
  EXPECT_EQ(r.code, 1);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 1);
}

TEST(Cli, ConfigErrorsExitOne) {
  EXPECT_EQ(run_cli({"decode", "--alphas", "1,2,3"}).code, 1);
  EXPECT_EQ(run_cli({"decode", "--alphas", "x"}).code, 1);
  EXPECT_EQ(run_cli({"decode", "--prompt", "0 9"}).code, 1);
  EXPECT_EQ(run_cli({"decode", "--config", "/nonexistent.json"}).code, 1);
  EXPECT_EQ(run_cli({"verify", "--suite", "nothing"}).code, 1);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run_cli({"--help"}).code, 0); }

TEST(Cli, VerifyPassesAndBreachExitsTwo) {
  const auto ok = run_cli({"verify", "--suite", "chunk-conditional"});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(nlohmann::json::parse(ok.out)["tests"][0]["name"], "chunk-conditional");
  // 50 samples cannot get within TV 0.02 of an 85-outcome distribution.
  const auto breach = run_cli({"verify", "--suite", "seq-rs-exactness", "--samples", "50"});
  EXPECT_EQ(breach.code, 2);
  EXPECT_EQ(nlohmann::json::parse(breach.out)["all_passed"], false);
}

TEST(Cli, BenchReportsRequestedDecoders) {
  const auto r = run_cli({"bench", "--decoders", "base,mod,token-rs,scr", "--prompts", "5", "--max-new", "8",
                          "--alphas", "0.6,0.4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(r.out);
  ASSERT_EQ(doc["rows"].size(), 4u);
  EXPECT_EQ(doc["rows"][0]["decoder"], "base");
  EXPECT_EQ(doc["meta"]["prompts"], 5);
  EXPECT_EQ(doc["meta"]["max_new_tokens"], 8);
  EXPECT_NE(r.err.find("passes/tok"), std::string::npos);
}

TEST(Cli, TuneFindsOptimum) {
  const auto r = run_cli({"tune", "--steps", "200"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto best = nlohmann::json::parse(r.out)["best"]["alphas"].get<std::vector<double>>();
  EXPECT_EQ(best, (std::vector<double>{1, 0, -9, -3}));
}

}  // namespace
}  // namespace mpg
