// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpg {

enum class ErrorKind {
  input,
  format,
  config,
  degenerate_distribution,
  invalid_proposal,
  mode,
  progress_stall,
  envelope_too_tight,
  infeasible_target,
  combinatorial_explosion,
  transport,
  protocol,
  fidelity,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::format: return "format";
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate_distribution: return "degenerate-distribution";
    case ErrorKind::invalid_proposal: return "invalid-proposal";
    case ErrorKind::mode: return "mode";
    case ErrorKind::progress_stall: return "progress-stall";
    case ErrorKind::envelope_too_tight: return "envelope-too-tight";
    case ErrorKind::infeasible_target: return "infeasible-target";
    case ErrorKind::combinatorial_explosion: return "combinatorial-explosion";
    case ErrorKind::transport: return "transport";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::fidelity: return "fidelity";
  }
  return "unknown";
}

// Every failure raised by the library carries a kind so callers can branch
// on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace mpg
