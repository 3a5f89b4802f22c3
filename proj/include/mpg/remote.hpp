// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mpg/error.hpp"
#include "mpg/logging.hpp"
#include "mpg/math.hpp"
#include "mpg/model.hpp"

namespace mpg {

struct EndpointConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080 or http://host/prefix
  std::string model_name;
  double timeout_seconds = 10.0;
  int retries = 2;
  std::optional<std::string> auth_token;

  static constexpr int kMaxRetries = 5;

  void validate() const {
    if (base_url.empty()) fail(ErrorKind::config, "endpoint base_url is empty");
    if (!(timeout_seconds > 0.0)) fail(ErrorKind::config, "endpoint timeout must be positive");
    if (retries < 0 || retries > kMaxRetries) fail(ErrorKind::config, "endpoint retries must lie in [0, 5]");
  }
};

// Language model served over HTTP with a two-route JSON protocol:
//   POST {base}/logprobs {"model", "context"}                 -> {"logprobs": [...]}
//   POST {base}/score    {"model", "context", "continuation"} -> {"token_logprobs": [...]}
// Natural-log values; null stands for -inf. A logprobs response may be top-K
// truncated by leaving tokens null and reporting the uncovered probability in
// "remainder_mass"; remainders above kRemainderTolerance are refused.
// HTTP 4xx is a protocol error and is not retried; 5xx, timeouts and
// connection failures are transport errors retried up to `retries` times.
class RemoteModel final : public LanguageModel {
 public:
  static constexpr double kRemainderTolerance = 1e-4;
  static constexpr double kRenormalizeThreshold = 1e-12;

  RemoteModel(Vocabulary vocab, EndpointConfig endpoint) : LanguageModel(std::move(vocab)), endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    const auto scheme = endpoint_.base_url.find("://");
    const auto path_start = endpoint_.base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      host_ = endpoint_.base_url;
    } else {
      host_ = endpoint_.base_url.substr(0, path_start);
      prefix_ = endpoint_.base_url.substr(path_start);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  const EndpointConfig& endpoint() const noexcept { return endpoint_; }

  // HTTP attempts issued, retries included.
  std::uint64_t attempts() const noexcept { return attempts_.load(std::memory_order_relaxed); }

 protected:
  LogProbVector next_logprobs(std::span<const TokenId> context) const override {
    const nlohmann::json body = {{"model", endpoint_.model_name}, {"context", TokenSequence(context.begin(), context.end())}};
    const nlohmann::json reply = post("/logprobs", body);
    if (!reply.contains("logprobs") || !reply["logprobs"].is_array()) {
      fail(ErrorKind::protocol, "response lacks a \"logprobs\" array");
    }
    std::vector<double> values = parse_values(reply["logprobs"]);
    if (values.size() != vocabulary().size()) {
      fail(ErrorKind::protocol, "expected " + std::to_string(vocabulary().size()) + " log-probabilities, got " +
                                    std::to_string(values.size()));
    }
    if (reply.contains("remainder_mass")) {
      if (!reply["remainder_mass"].is_number()) fail(ErrorKind::protocol, "remainder_mass must be a number");
      const double remainder = reply["remainder_mass"].get<double>();
      if (remainder > kRemainderTolerance) {
        fail(ErrorKind::fidelity, "top-K response leaves " + std::to_string(remainder) + " probability uncovered");
      }
    }
    const double total = log_sum_exp(values);
    if (total == kNegInf) fail(ErrorKind::protocol, "response assigns zero probability to every token");
    if (std::abs(total) > kRenormalizeThreshold) {
      for (double& v : values) v -= total;
    }
    return LogProbVector(std::move(values));
  }

  std::vector<double> teacher_forced(std::span<const TokenId> context,
                                     std::span<const TokenId> continuation) const override {
    const nlohmann::json body = {
        {"model", endpoint_.model_name},
        {"context", TokenSequence(context.begin(), context.end())},
        {"continuation", TokenSequence(continuation.begin(), continuation.end())}};
    const nlohmann::json reply = post("/score", body);
    if (!reply.contains("token_logprobs") || !reply["token_logprobs"].is_array()) {
      fail(ErrorKind::protocol, "response lacks a \"token_logprobs\" array");
    }
    std::vector<double> values = parse_values(reply["token_logprobs"]);
    if (values.size() != continuation.size()) fail(ErrorKind::protocol, "token_logprobs length mismatch");
    for (double v : values) {
      if (v > LogProbVector::kTolerance) fail(ErrorKind::protocol, "positive token log-probability");
    }
    return values;
  }

 private:
  static std::vector<double> parse_values(const nlohmann::json& array) {
    std::vector<double> out;
    out.reserve(array.size());
    for (const auto& v : array) {
      if (v.is_null()) {
        out.push_back(kNegInf);
      } else if (v.is_number()) {
        out.push_back(v.get<double>());
      } else {
        fail(ErrorKind::protocol, "non-numeric log-probability");
      }
      if (std::isnan(out.back()) || out.back() == kPosInf) fail(ErrorKind::protocol, "NaN or +inf log-probability");
    }
    return out;
  }

  std::unique_ptr<httplib::Client> acquire() const {
    {
      std::lock_guard lock(pool_mutex_);
      if (!pool_.empty()) {
        auto c = std::move(pool_.back());
        pool_.pop_back();
        return c;
      }
    }
    auto client = std::make_unique<httplib::Client>(host_);
    const auto secs = static_cast<time_t>(endpoint_.timeout_seconds);
    const auto usecs = static_cast<time_t>((endpoint_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client->set_connection_timeout(secs, usecs);
    client->set_read_timeout(secs, usecs);
    client->set_write_timeout(secs, usecs);
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    if (endpoint_.auth_token) client->set_bearer_token_auth(*endpoint_.auth_token);
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) const {
    std::lock_guard lock(pool_mutex_);
    pool_.push_back(std::move(client));
  }

  nlohmann::json post(const std::string& route, const nlohmann::json& body) const {
    const std::string payload = body.dump();
    const std::string path = prefix_ + route;
    std::string last_error;
    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
      attempts_.fetch_add(1, std::memory_order_relaxed);
      auto client = acquire();
      auto res = client->Post(path, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        event_log().debug("{} attempt {} failed: {}", path, attempt + 1, last_error);
        continue;  // the broken connection is dropped with the client
      }
      release(std::move(client));
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        event_log().debug("{} attempt {} failed: {}", path, attempt + 1, last_error);
        continue;
      }
      if (res->status >= 400) {
        fail(ErrorKind::protocol, "HTTP " + std::to_string(res->status) + " from " + path + ": " + res->body);
      }
      try {
        auto reply = nlohmann::json::parse(res->body);
        if (!reply.is_object()) fail(ErrorKind::protocol, "response body is not a JSON object");
        return reply;
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::protocol, std::string("malformed response body: ") + e.what());
      }
    }
    fail(ErrorKind::transport, path + " failed after " + std::to_string(endpoint_.retries + 1) +
                                   " attempts: " + last_error);
  }

  EndpointConfig endpoint_;
  std::string host_;
  std::string prefix_;
  mutable std::mutex pool_mutex_;
  mutable std::vector<std::unique_ptr<httplib::Client>> pool_;
  mutable std::atomic<std::uint64_t> attempts_{0};
};

// Remote model document, accepted wherever a model file is:
//   {"type": "remote", "base_url": str, "model": str, "vocab_size": int,
//    "eos": int, "timeout": float?, "retries": int?, "auth_token": str?}
inline std::unique_ptr<RemoteModel> load_remote_model(const nlohmann::json& doc) {
  try {
    EndpointConfig ep;
    ep.base_url = doc.at("base_url").get<std::string>();
    ep.model_name = doc.at("model").get<std::string>();
    if (doc.contains("timeout")) ep.timeout_seconds = doc.at("timeout").get<double>();
    if (doc.contains("retries")) ep.retries = doc.at("retries").get<int>();
    if (doc.contains("auth_token")) ep.auth_token = doc.at("auth_token").get<std::string>();
    const auto size = doc.at("vocab_size").get<std::int64_t>();
    const auto eos = doc.at("eos").get<std::int64_t>();
    if (size < 2 || eos < 0 || eos >= size) fail(ErrorKind::format, "invalid vocab_size/eos");
    std::vector<std::string> labels;
    if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<std::string>>();
    return std::make_unique<RemoteModel>(
        Vocabulary(static_cast<std::size_t>(size), static_cast<TokenId>(eos), std::move(labels)), std::move(ep));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, e.what());
  }
}

// Loads either a toy table or a remote endpoint description.
inline std::unique_ptr<LanguageModel> load_any_model(const nlohmann::json& doc) {
  if (doc.is_object() && doc.value("type", "") == "remote") return load_remote_model(doc);
  return load_model(doc);
}

}  // namespace mpg
