// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mpg/bench.hpp"
#include "mpg/bundle.hpp"
#include "mpg/config.hpp"
#include "mpg/instances.hpp"
#include "mpg/remote.hpp"
#include "mpg/tuner.hpp"
#include "mpg/verify.hpp"

namespace mpg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitVerification = 2;

inline std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

inline std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  for (const auto& item : split_csv(csv)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::config, "not a number: \"" + item + "\"");
    }
  }
  return out;
}

inline TokenSequence parse_prompt(const std::string& text) {
  TokenSequence out;
  std::stringstream ss(text);
  std::string item;
  while (ss >> item) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(static_cast<TokenId>(v));
    } catch (const std::exception&) {
      fail(ErrorKind::config, "prompt token \"" + item + "\" is not a token id");
    }
  }
  return out;
}

// First path is the reference, the rest are preference models. Without
// paths the built-in four-token toy instance is used.
inline ModelBundle load_bundle(const std::string& models_csv) {
  if (models_csv.empty()) return instances::toy_bundle();
  const auto paths = split_csv(models_csv);
  if (paths.size() < 2) fail(ErrorKind::config, "--models needs a reference and at least one preference model");
  std::shared_ptr<const LanguageModel> ref = load_any_model(read_json_file(paths[0]));
  std::vector<std::shared_ptr<const LanguageModel>> prefs;
  for (std::size_t i = 1; i < paths.size(); ++i) prefs.push_back(load_any_model(read_json_file(paths[i])));
  return ModelBundle(std::move(ref), std::move(prefs));
}

inline void emit(const nlohmann::json& doc, const std::string& out_path, std::ostream& out) {
  out << doc.dump(2) << "\n";
  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) fail(ErrorKind::config, "cannot write " + out_path);
    f << doc.dump(2) << "\n";
  }
}

inline std::string render_bench_table(const BenchReport& report) {
  std::ostringstream os;
  os << "N=" << report.preference_models << " k=" << report.k << " prompts=" << report.prompts
     << " max_new_tokens=" << report.max_new_tokens << " repetitions=" << report.repetitions << "\n";
  os << std::left << std::setw(10) << "decoder" << std::right << std::setw(14) << "tok/s" << std::setw(12) << "s/seq"
     << std::setw(14) << "passes/tok" << std::setw(12) << "reject %" << "\n";
  for (const auto& r : report.rows) {
    os << std::left << std::setw(10) << to_string(r.decoder) << std::right;
    if (r.error) {
      os << "  error: " << *r.error << "\n";
      continue;
    }
    os << std::fixed << std::setprecision(1) << std::setw(14) << r.throughput_tok_s << std::setprecision(6)
       << std::setw(12) << r.latency_s << std::setprecision(3) << std::setw(14) << r.passes_per_token;
    if (r.rejection_rate_pct) {
      os << std::setprecision(1) << std::setw(12) << *r.rejection_rate_pct;
    } else {
      os << std::setw(12) << "---";
    }
    os << "\n";
  }
  return os.str();
}

struct CommonOptions {
  std::string config;
  std::string models;
  std::string alphas;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline RunConfig resolve_run_config(const CommonOptions& common, std::size_t n_prefs) {
  RunConfig rc;
  if (!common.config.empty()) rc = parse_run_config(read_json_file(common.config));
  if (!common.alphas.empty()) rc.alphas = parse_doubles(common.alphas);
  if (rc.alphas.empty()) rc.alphas.assign(n_prefs, 1.0 / static_cast<double>(n_prefs));
  if (common.seed) {
    rc.seed = *common.seed;
    rc.decode.sampling.seed = *common.seed;
  }
  if (rc.alphas.size() != n_prefs) {
    fail(ErrorKind::config, std::to_string(rc.alphas.size()) + " alphas for " + std::to_string(n_prefs) +
                                " preference models");
  }
  return rc;
}

// Entry point behind the `mpg` binary. Returns 0 on success, 1 on
// configuration or runtime errors (including bad flags), 2 when a
// verification suite breaches its threshold.
inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Multi-preference decoding with chunk-level rejection sampling"};
  app.require_subcommand(1);

  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration JSON");
    sub->add_option("--models", common.models, "Model files: reference first, then preferences (comma separated)");
    sub->add_option("--alphas", common.alphas, "Preference weights (comma separated, signed)");
    sub->add_option("--seed", common.seed, "RNG seed");
    sub->add_option("--out", common.out, "Write the JSON report here as well");
  };

  auto* decode = app.add_subcommand("decode", "Decode one prompt and print tokens and stats");
  add_common(decode);
  std::string prompt_text;
  std::string decoder_name;
  decode->add_option("--prompt", prompt_text, "Space-separated token ids");
  decode->add_option("--decoder", decoder_name, "base | seq-rs | token-rs | mod | scr (overrides the config)");

  auto* bench = app.add_subcommand("bench", "Efficiency comparison across decoders");
  add_common(bench);
  std::string decoders_csv = "base,mod,seq-rs,token-rs,scr";
  std::size_t prompt_count = 100;
  std::optional<std::size_t> max_new;
  std::size_t repetitions = 3;
  bench->add_option("--decoders", decoders_csv, "Decoders to compare (comma separated)");
  bench->add_option("--prompts", prompt_count, "Number of synthetic prompts");
  bench->add_option("--max-new", max_new, "Maximum new tokens per prompt");
  bench->add_option("--repetitions", repetitions, "Repetitions per decoder");

  auto* verify = app.add_subcommand("verify", "Compare samplers against the enumeration oracle");
  add_common(verify);
  std::string suite = "all";
  std::optional<std::uint64_t> samples;
  verify->add_option("--suite", suite, "seq-rs-exactness | chunk-conditional | identity-reduction | all");
  verify->add_option("--samples", samples, "Override the sample count of every suite");
  verify->add_option("--prompt", prompt_text, "Space-separated token ids (default \"0\")");

  auto* tune = app.add_subcommand("tune", "Coordinate search over preference weights");
  tune->add_option("--alphas", common.alphas, "Initial weights (default 1,1,1,1)");
  tune->add_option("--out", common.out, "Write the JSON report here as well");
  std::string target_csv = "1,0,-9,-3";
  std::size_t steps = 200;
  double step_size = 1.0;
  tune->add_option("--target", target_csv, "Hidden optimum for the synthetic accuracy callback");
  tune->add_option("--steps", steps, "Maximum coordinate-search steps");
  tune->add_option("--step-size", step_size, "Probe size per coordinate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*decode) {
      const ModelBundle models = load_bundle(common.models);
      RunConfig rc = resolve_run_config(common, models.size());
      if (!decoder_name.empty()) rc.decoder = parse_decoder_kind(decoder_name);
      const TokenSequence prompt = parse_prompt(prompt_text);
      const PreferenceWeights weights(rc.alphas);
      Rng rng(rc.seed);
      const DecodeResult r = run_decoder(rc.decoder, models, weights, rc.decode, prompt, rng);
      nlohmann::json text = nlohmann::json::array();
      for (TokenId t : r.tokens) text.push_back(models.vocabulary().label(t));
      emit({{"decoder", std::string(to_string(rc.decoder))},
            {"prompt", prompt},
            {"tokens", r.tokens},
            {"labels", text},
            {"stats", to_json(r.stats)}},
           common.out, out);
      return kExitOk;
    }

    if (*bench) {
      const ModelBundle models = load_bundle(common.models);
      RunConfig rc = resolve_run_config(common, models.size());
      if (max_new) rc.decode.max_new_tokens = *max_new;
      BenchOptions opts;
      opts.decoders.clear();
      for (const auto& name : split_csv(decoders_csv)) opts.decoders.push_back(parse_decoder_kind(name));
      opts.prompts = synthetic_prompts(models.vocabulary(), prompt_count, rc.seed);
      opts.repetitions = repetitions;
      opts.seed = rc.seed;
      const BenchReport report = run_benchmark(models, PreferenceWeights(rc.alphas), rc.decode, opts);
      err << render_bench_table(report);
      emit(to_json(report), common.out, out);
      return kExitOk;
    }

    if (*verify) {
      const ModelBundle models = load_bundle(common.models);
      SuiteParams params;
      if (!common.alphas.empty()) params.alphas = parse_doubles(common.alphas);
      if (params.alphas.size() != models.size()) {
        fail(ErrorKind::config, "verify needs one alpha per preference model");
      }
      if (common.seed) params.seed = *common.seed;
      if (!prompt_text.empty()) params.prompt = parse_prompt(prompt_text);
      if (samples) {
        params.seq_rs_samples = *samples;
        params.chunk_trials = *samples;
        params.identity_decodes = *samples;
      }
      const VerificationReport report = run_verification(models, suite, params);
      for (const auto& e : report.entries) {
        err << (e.pass ? "PASS " : "FAIL ") << e.name << " tv=" << e.tv << " threshold=" << e.threshold << "\n";
      }
      emit(to_json(report), common.out, out);
      return report.all_passed() ? kExitOk : kExitVerification;
    }

    if (*tune) {
      const std::vector<double> initial = common.alphas.empty() ? std::vector<double>{1, 1, 1, 1}
                                                                : parse_doubles(common.alphas);
      const TunerState state = tune_alpha(synthetic_accuracy(parse_doubles(target_csv)), initial, steps, step_size);
      emit(to_json(state), common.out, out);
      return state.error ? kExitConfig : kExitOk;
    }
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace mpg::cli
