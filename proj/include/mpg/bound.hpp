// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "mpg/error.hpp"
#include "mpg/logging.hpp"
#include "mpg/math.hpp"

namespace mpg {

enum class BoundPhase { warm_up, estimation, stabilization };

inline std::string_view to_string(BoundPhase phase) {
  switch (phase) {
    case BoundPhase::warm_up: return "warm-up";
    case BoundPhase::estimation: return "estimation";
    case BoundPhase::stabilization: return "stabilization";
  }
  return "unknown";
}

struct BoundParams {
  std::size_t window = 20;
  double log_M0 = 3.0;
  double gamma = 1.2;
  double tau = 0.01;

  void validate() const {
    if (window == 0) fail(ErrorKind::config, "window must be at least 1");
    if (!std::isfinite(log_M0)) fail(ErrorKind::config, "log_M0 must be finite");
    if (!(gamma > 1.0) || !std::isfinite(gamma)) fail(ErrorKind::config, "gamma must be > 1");
    if (!(tau >= 0.0)) fail(ErrorKind::config, "tau must be >= 0");
  }
};

// Sliding-window online estimate of the log envelope.
//   warm-up:       |buffer| <= W          -> log M = log M0, unfrozen
//   estimation:    past warm-up, unfrozen -> log M = max(last W) + ln gamma,
//                                            freeze if Var(last W) < tau
//   stabilization: frozen                 -> log M held, unfreeze once
//                                            Var(last W) >= tau
class BoundEstimator {
 public:
  explicit BoundEstimator(BoundParams params) : params_(params), log_M_(params.log_M0) { params_.validate(); }

  // Appends the round's scores and applies one update step.
  void update(std::span<const double> records) {
    buffer_.insert(buffer_.end(), records.begin(), records.end());
    if (buffer_.size() <= params_.window) {
      log_M_ = params_.log_M0;
      frozen_ = false;
      return;
    }
    const auto window = last_window();
    const double var = window_variance(window);
    if (!frozen_) {
      const double hi = window_max(window);
      // A window with no finite score carries no information about the bound.
      log_M_ = hi == kNegInf ? params_.log_M0 : hi + std::log(params_.gamma);
      if (var < params_.tau) {
        frozen_ = true;
        ++freezes_;
        event_log().info("bound frozen at log M = {:.6f} (window variance {:.3g})", log_M_, var);
      }
    } else if (var >= params_.tau) {
      frozen_ = false;
      ++unfreezes_;
      event_log().info("bound unfrozen (window variance {:.3g})", var);
    }
  }

  BoundPhase phase() const noexcept {
    if (buffer_.size() <= params_.window) return BoundPhase::warm_up;
    return frozen_ ? BoundPhase::stabilization : BoundPhase::estimation;
  }

  double log_M() const noexcept { return log_M_; }
  bool frozen() const noexcept { return frozen_; }
  const std::vector<double>& buffer() const noexcept { return buffer_; }
  const BoundParams& params() const noexcept { return params_; }
  std::size_t freezes() const noexcept { return freezes_; }
  std::size_t unfreezes() const noexcept { return unfreezes_; }

  std::span<const double> last_window() const {
    const std::size_t n = std::min(buffer_.size(), params_.window);
    return std::span<const double>(buffer_).last(n);
  }

  static double window_max(std::span<const double> window) {
    double hi = kNegInf;
    for (double s : window) hi = std::max(hi, s);
    return hi;
  }

  // Population variance of the finite entries; fewer than two finite entries
  // count as infinite variance so the bound can never freeze on them.
  static double window_variance(std::span<const double> window) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double s : window) {
      if (std::isfinite(s)) {
        sum += s;
        ++n;
      }
    }
    if (n < 2) return kPosInf;
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double s : window) {
      if (std::isfinite(s)) sq += (s - mean) * (s - mean);
    }
    return sq / static_cast<double>(n);
  }

 private:
  BoundParams params_;
  std::vector<double> buffer_;
  double log_M_;
  bool frozen_ = false;
  std::size_t freezes_ = 0;
  std::size_t unfreezes_ = 0;
};

}  // namespace mpg
