// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <memory>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mpg/mpg.hpp"

namespace mpg::testing {

// In-process HTTP backend serving local toy models over the remote-lm wire
// protocol. Faults can be injected per test.
class ToyServer {
 public:
  enum class Fault { none, server_error, unnormalized, top_k, malformed, wrong_length };

  ToyServer() {
    server_.set_tcp_nodelay(true);
    server_.Post("/logprobs", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res, false); });
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res, true); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ToyServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ToyServer(const ToyServer&) = delete;
  ToyServer& operator=(const ToyServer&) = delete;

  void add(const std::string& name, std::shared_ptr<const LanguageModel> model) { models_[name] = std::move(model); }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  // The next `count` requests get `fault`; afterwards service is normal.
  void inject(Fault fault, int count = 1 << 30) {
    fault_ = fault;
    fault_budget_ = count;
  }

  void set_remainder_mass(double mass) { remainder_mass_ = mass; }

  std::uint64_t requests() const { return requests_.load(); }

  std::string last_authorization() const {
    std::lock_guard lock(auth_mutex_);
    return last_auth_;
  }

  nlohmann::json remote_doc(const std::string& name, int retries = 2, double timeout = 5.0) const {
    const auto& vocab = models_.at(name)->vocabulary();
    return {{"type", "remote"},        {"base_url", base_url()}, {"model", name}, {"vocab_size", vocab.size()},
            {"eos", vocab.eos()},      {"retries", retries},      {"timeout", timeout}};
  }

 private:
  static nlohmann::json encode(const std::vector<double>& values) {
    nlohmann::json out = nlohmann::json::array();
    for (double v : values) out.push_back(v == -INFINITY ? nlohmann::json() : nlohmann::json(v));
    return out;
  }

  Fault take_fault() {
    if (fault_ == Fault::none) return Fault::none;
    if (fault_budget_.fetch_sub(1) > 0) return fault_;
    return Fault::none;
  }

  void handle(const httplib::Request& req, httplib::Response& res, bool score) {
    ++requests_;
    {
      std::lock_guard lock(auth_mutex_);
      last_auth_ = req.get_header_value("Authorization");
    }
    const Fault fault = take_fault();
    if (fault == Fault::server_error) {
      res.status = 503;
      return;
    }
    if (fault == Fault::malformed) {
      res.set_content("{\"logprobs\": [0.1, ", "application/json");
      return;
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      return;
    }
    const auto it = models_.find(body.value("model", ""));
    if (it == models_.end()) {
      res.status = 404;
      res.set_content("unknown model", "text/plain");
      return;
    }
    const auto context = body.at("context").get<TokenSequence>();
    nlohmann::json reply;
    if (score) {
      auto values = it->second->score_continuation(context, body.at("continuation").get<TokenSequence>());
      if (fault == Fault::wrong_length) values.pop_back();
      reply["token_logprobs"] = encode(values);
    } else {
      auto dist = it->second->logprobs(context);
      std::vector<double> values(dist.values().begin(), dist.values().end());
      if (fault == Fault::unnormalized) {
        for (double& v : values) v += 0.7;
      } else if (fault == Fault::top_k) {
        // Drop the least likely token and report its mass as the remainder.
        std::size_t lo = 0;
        for (std::size_t i = 1; i < values.size(); ++i) {
          if (values[i] < values[lo]) lo = i;
        }
        values[lo] = -INFINITY;
        reply["remainder_mass"] = remainder_mass_;
      } else if (fault == Fault::wrong_length) {
        values.pop_back();
      }
      reply["logprobs"] = encode(values);
    }
    res.set_content(reply.dump(), "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::map<std::string, std::shared_ptr<const LanguageModel>> models_;
  std::atomic<Fault> fault_{Fault::none};
  std::atomic<int> fault_budget_{0};
  double remainder_mass_ = 0.0;
  std::atomic<std::uint64_t> requests_{0};
  mutable std::mutex auth_mutex_;
  std::string last_auth_;
};

}  // namespace mpg::testing
