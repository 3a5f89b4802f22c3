// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

// Decodes one prompt with the chunk decoder and the fused baseline, using the
// sample model files when given (reference first) and the built-in toy
// models otherwise.
//
//   quickstart [reference.json preference.json...]

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "mpg/mpg.hpp"

namespace {

mpg::ModelBundle bundle_from_args(int argc, char** argv) {
  if (argc < 3) return mpg::instances::toy_bundle();
  std::shared_ptr<const mpg::LanguageModel> ref = mpg::load_any_model(mpg::read_json_file(argv[1]));
  std::vector<std::shared_ptr<const mpg::LanguageModel>> prefs;
  for (int i = 2; i < argc; ++i) prefs.push_back(mpg::load_any_model(mpg::read_json_file(argv[i])));
  return mpg::ModelBundle(std::move(ref), std::move(prefs));
}

void show(const char* name, const mpg::ModelBundle& models, const mpg::DecodeResult& r) {
  std::string text;
  for (mpg::TokenId t : r.tokens) text += models.vocabulary().label(t) + " ";
  std::printf("%-4s %-30s passes/token %.3f  rejection %.1f%%\n", name, text.c_str(), r.stats.passes_per_token(),
              100.0 * r.stats.rejection_rate());
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const mpg::ModelBundle models = bundle_from_args(argc, argv);
    const mpg::PreferenceWeights weights(std::vector<double>(models.size(), 1.0 / static_cast<double>(models.size())));
    mpg::DecodeConfig cfg;
    cfg.max_new_tokens = 24;
    const mpg::TokenSequence prompt{0};

    mpg::Rng rng(7);
    show("scr", models, mpg::run_decoder(mpg::DecoderKind::scr, models, weights, cfg, prompt, rng));
    show("mod", models, mpg::run_decoder(mpg::DecoderKind::mod, models, weights, cfg, prompt, rng));
    show("base", models, mpg::run_decoder(mpg::DecoderKind::base, models, weights, cfg, prompt, rng));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
