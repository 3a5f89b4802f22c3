// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mpg/baselines.hpp"
#include "mpg/bench.hpp"
#include "mpg/bound.hpp"
#include "mpg/bundle.hpp"
#include "mpg/config.hpp"
#include "mpg/error.hpp"
#include "mpg/instances.hpp"
#include "mpg/model.hpp"
#include "mpg/oracle.hpp"
#include "mpg/random.hpp"
#include "mpg/remote.hpp"
#include "mpg/sampling.hpp"
#include "mpg/scoring.hpp"
#include "mpg/scr.hpp"
#include "mpg/stats.hpp"
#include "mpg/tuner.hpp"
#include "mpg/verify.hpp"
