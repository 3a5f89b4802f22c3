// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "mpg/bundle.hpp"
#include "mpg/model.hpp"

namespace mpg::instances {

// Four content tokens a..d plus eos (id 4). The same tables ship as
// samples/reference.json, samples/preference_ab.json, samples/preference_cd.json.
inline Vocabulary toy_vocabulary() { return Vocabulary(5, 4, {"a", "b", "c", "d", "</s>"}); }

inline std::unique_ptr<ToyModel> toy_reference() {
  return ToyModel::bigram(toy_vocabulary(), {0.3, 0.25, 0.2, 0.15, 0.1},
                          {{0.1, 0.3, 0.25, 0.15, 0.2},
                           {0.25, 0.1, 0.3, 0.15, 0.2},
                           {0.2, 0.25, 0.1, 0.25, 0.2},
                           {0.3, 0.2, 0.15, 0.1, 0.25},
                           {0.2, 0.2, 0.2, 0.2, 0.2}});
}

// Leans towards a and b.
inline std::unique_ptr<ToyModel> toy_preference_ab() {
  return ToyModel::bigram(toy_vocabulary(), {0.4, 0.3, 0.1, 0.1, 0.1},
                          {{0.15, 0.4, 0.15, 0.1, 0.2},
                           {0.35, 0.15, 0.2, 0.1, 0.2},
                           {0.3, 0.3, 0.05, 0.15, 0.2},
                           {0.4, 0.25, 0.1, 0.05, 0.2},
                           {0.2, 0.2, 0.2, 0.2, 0.2}});
}

// Leans towards c and d.
inline std::unique_ptr<ToyModel> toy_preference_cd() {
  return ToyModel::bigram(toy_vocabulary(), {0.15, 0.15, 0.3, 0.25, 0.15},
                          {{0.05, 0.2, 0.35, 0.25, 0.15},
                           {0.15, 0.05, 0.4, 0.25, 0.15},
                           {0.1, 0.2, 0.1, 0.4, 0.2},
                           {0.2, 0.1, 0.3, 0.15, 0.25},
                           {0.2, 0.2, 0.2, 0.2, 0.2}});
}

inline ModelBundle toy_bundle() {
  return ModelBundle(toy_reference(), {toy_preference_ab(), toy_preference_cd()});
}

}  // namespace mpg::instances
