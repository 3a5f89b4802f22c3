// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "mpg/error.hpp"
#include "mpg/model.hpp"

namespace mpg {

// Owns one reference model and N preference models and hands out the
// non-owning views the decoders take.
class ModelBundle {
 public:
  ModelBundle(std::shared_ptr<const LanguageModel> reference,
              std::vector<std::shared_ptr<const LanguageModel>> preferences)
      : reference_(std::move(reference)), preferences_(std::move(preferences)) {
    if (!reference_) fail(ErrorKind::config, "missing reference model");
    if (preferences_.empty()) fail(ErrorKind::config, "at least one preference model is required");
    for (const auto& p : preferences_) {
      if (!p) fail(ErrorKind::config, "null preference model");
      if (!(p->vocabulary() == reference_->vocabulary())) {
        fail(ErrorKind::config, "models do not share one vocabulary");
      }
      views_.push_back(p.get());
    }
  }

  const LanguageModel& reference() const noexcept { return *reference_; }
  std::span<const LanguageModel* const> preferences() const noexcept { return views_; }
  std::size_t size() const noexcept { return views_.size(); }
  const Vocabulary& vocabulary() const noexcept { return reference_->vocabulary(); }

  // Same reference with every preference slot pointing at the reference:
  // all density ratios are identically one.
  ModelBundle identity(std::size_t n) const {
    return ModelBundle(reference_, std::vector<std::shared_ptr<const LanguageModel>>(n, reference_));
  }

 private:
  std::shared_ptr<const LanguageModel> reference_;
  std::vector<std::shared_ptr<const LanguageModel>> preferences_;
  std::vector<const LanguageModel*> views_;
};

}  // namespace mpg
