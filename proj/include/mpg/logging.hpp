// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <memory>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace mpg {

// Event logger for cap hits, bound freezes and fallbacks. The level comes
// from MPG_LOG (debug | info); anything else leaves only warnings visible.
inline spdlog::logger& event_log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto log = std::make_shared<spdlog::logger>("mpg", sink);
    log->set_pattern("[mpg %l] %v");
    const char* env = std::getenv("MPG_LOG");
    const std::string_view level = env ? env : "";
    if (level == "debug") {
      log->set_level(spdlog::level::debug);
    } else if (level == "info") {
      log->set_level(spdlog::level::info);
    } else {
      log->set_level(spdlog::level::warn);
    }
    return log;
  }();
  return *logger;
}

}  // namespace mpg
