// Copyright 2026 The MPG Decoding Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpg/error.hpp"
#include "mpg/math.hpp"

namespace mpg {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

class Vocabulary {
 public:
  Vocabulary(std::size_t size, TokenId eos, std::vector<std::string> labels = {})
      : size_(size), eos_(eos), labels_(std::move(labels)) {
    if (size_ < 2) fail(ErrorKind::format, "vocabulary size must be at least 2");
    if (eos_ >= size_) fail(ErrorKind::format, "eos id out of range");
    if (!labels_.empty() && labels_.size() != size_) {
      fail(ErrorKind::format, "labels length does not match vocabulary size");
    }
  }

  std::size_t size() const noexcept { return size_; }
  TokenId eos() const noexcept { return eos_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  bool contains(TokenId t) const noexcept { return t < size_; }

  std::string label(TokenId t) const {
    return labels_.empty() ? std::to_string(t) : labels_.at(t);
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.size_ == b.size_ && a.eos_ == b.eos_;
  }

 private:
  std::size_t size_;
  TokenId eos_;
  std::vector<std::string> labels_;
};

// Checks the TokenSequence invariant: ids in range, eos at most once and
// only in the last slot. With allow_eos = false no eos is permitted at all
// (contexts handed to a model must not be finished).
inline void validate_sequence(const Vocabulary& vocab, std::span<const TokenId> seq, bool allow_eos = true) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (!vocab.contains(seq[i])) {
      fail(ErrorKind::input, "token " + std::to_string(seq[i]) + " out of vocabulary range");
    }
    if (seq[i] == vocab.eos() && (!allow_eos || i + 1 != seq.size())) {
      fail(ErrorKind::input, "eos may only appear as the final token of a finished sequence");
    }
  }
}

inline bool ends_with_eos(const Vocabulary& vocab, std::span<const TokenId> seq) {
  return !seq.empty() && seq.back() == vocab.eos();
}

// Normalized natural-log next-token distribution.
class LogProbVector {
 public:
  static constexpr double kTolerance = 1e-9;

  LogProbVector() = default;

  explicit LogProbVector(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      if (std::isnan(v) || v > kTolerance) fail(ErrorKind::input, "log-probability entry is NaN or positive");
    }
    const double total = log_sum_exp(values_);
    if (!(std::abs(total) <= kTolerance)) {
      fail(ErrorKind::input, "log-probabilities are not normalized (logsumexp = " + std::to_string(total) + ")");
    }
  }

  // Shifts arbitrary finite-or-(-inf) scores so they sum to one.
  static LogProbVector normalized(std::vector<double> values) {
    for (double v : values) {
      if (std::isnan(v) || v == kPosInf) fail(ErrorKind::input, "score is NaN or +inf");
    }
    const double total = log_sum_exp(values);
    if (total == kNegInf) fail(ErrorKind::degenerate_distribution, "all entries are -inf");
    for (double& v : values) v -= total;
    return LogProbVector(std::move(values));
  }

  static LogProbVector from_probabilities(std::span<const double> probs) {
    std::vector<double> logs;
    logs.reserve(probs.size());
    for (double p : probs) logs.push_back(p > 0.0 ? std::log(p) : kNegInf);
    return LogProbVector(std::move(logs));
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](TokenId t) const { return values_.at(t); }
  double probability(TokenId t) const { return std::exp(values_.at(t)); }

 private:
  std::vector<double> values_;
};

// Token-level language model. Public entry points validate input and count
// forward passes; implementations override the protected hooks. Evaluation
// must be safe to call concurrently on one instance.
class LanguageModel {
 public:
  explicit LanguageModel(Vocabulary vocab) : vocab_(std::move(vocab)) {}
  virtual ~LanguageModel() = default;

  LanguageModel(const LanguageModel&) = delete;
  LanguageModel& operator=(const LanguageModel&) = delete;

  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  // One forward evaluation: next-token distribution given the context.
  LogProbVector logprobs(std::span<const TokenId> context) const {
    validate_sequence(vocab_, context, /*allow_eos=*/false);
    passes_.fetch_add(1, std::memory_order_relaxed);
    return next_logprobs(context);
  }

  // Teacher-forced log-probability of each continuation token. Counted as a
  // single (batched) forward pass.
  std::vector<double> score_continuation(std::span<const TokenId> context,
                                         std::span<const TokenId> continuation) const {
    if (continuation.empty()) fail(ErrorKind::input, "continuation must be non-empty");
    validate_sequence(vocab_, context, /*allow_eos=*/false);
    validate_sequence(vocab_, continuation);
    passes_.fetch_add(1, std::memory_order_relaxed);
    return teacher_forced(context, continuation);
  }

  std::uint64_t forward_passes() const noexcept { return passes_.load(std::memory_order_relaxed); }
  void reset_forward_passes() const noexcept { passes_.store(0, std::memory_order_relaxed); }

 protected:
  virtual LogProbVector next_logprobs(std::span<const TokenId> context) const = 0;

  virtual std::vector<double> teacher_forced(std::span<const TokenId> context,
                                             std::span<const TokenId> continuation) const {
    TokenSequence running(context.begin(), context.end());
    std::vector<double> out;
    out.reserve(continuation.size());
    for (TokenId t : continuation) {
      out.push_back(next_logprobs(running)[t]);
      running.push_back(t);
    }
    return out;
  }

 private:
  Vocabulary vocab_;
  mutable std::atomic<std::uint64_t> passes_{0};
};

enum class ToyKind { uniform, unigram, bigram };

inline std::string_view to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::uniform: return "uniform";
    case ToyKind::unigram: return "unigram";
    case ToyKind::bigram: return "bigram";
  }
  return "unknown";
}

// Table-driven toy model: uniform, a fixed categorical (unigram), or a
// first-order Markov table (bigram) with a dedicated empty-context row.
class ToyModel final : public LanguageModel {
 public:
  static constexpr double kRowTolerance = 1e-6;

  static std::unique_ptr<ToyModel> uniform(Vocabulary vocab) {
    const std::vector<double> row(vocab.size(), 1.0 / static_cast<double>(vocab.size()));
    return std::unique_ptr<ToyModel>(new ToyModel(std::move(vocab), ToyKind::uniform, row, {}));
  }

  static std::unique_ptr<ToyModel> unigram(Vocabulary vocab, std::vector<double> probs) {
    check_row(vocab, probs, "unigram distribution");
    return std::unique_ptr<ToyModel>(new ToyModel(std::move(vocab), ToyKind::unigram, std::move(probs), {}));
  }

  static std::unique_ptr<ToyModel> bigram(Vocabulary vocab, std::vector<double> start,
                                          std::vector<std::vector<double>> rows) {
    check_row(vocab, start, "start row");
    if (rows.size() != vocab.size()) fail(ErrorKind::format, "bigram table needs vocab_size rows");
    for (std::size_t i = 0; i < rows.size(); ++i) check_row(vocab, rows[i], "row " + std::to_string(i));
    return std::unique_ptr<ToyModel>(new ToyModel(std::move(vocab), ToyKind::bigram, std::move(start), std::move(rows)));
  }

  ToyKind kind() const noexcept { return kind_; }
  std::span<const double> start_probabilities() const noexcept { return start_probs_; }
  const std::vector<std::vector<double>>& row_probabilities() const noexcept { return row_probs_; }

 protected:
  LogProbVector next_logprobs(std::span<const TokenId> context) const override {
    return row_for(context);
  }

  std::vector<double> teacher_forced(std::span<const TokenId> context,
                                     std::span<const TokenId> continuation) const override {
    std::vector<double> out;
    out.reserve(continuation.size());
    std::optional<TokenId> last;
    if (!context.empty()) last = context.back();
    for (TokenId t : continuation) {
      out.push_back(row_after(last)[t]);
      last = t;
    }
    return out;
  }

 private:
  ToyModel(Vocabulary vocab, ToyKind kind, std::vector<double> start, std::vector<std::vector<double>> rows)
      : LanguageModel(std::move(vocab)), kind_(kind), start_probs_(std::move(start)), row_probs_(std::move(rows)) {
    start_ = to_log_row(start_probs_);
    for (const auto& r : row_probs_) rows_.push_back(to_log_row(r));
  }

  static void check_row(const Vocabulary& vocab, std::span<const double> row, const std::string& what) {
    if (row.size() != vocab.size()) {
      fail(ErrorKind::format, what + " has " + std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(vocab.size()));
    }
    double sum = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0) fail(ErrorKind::format, what + " has a negative or non-finite entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      fail(ErrorKind::format, what + " sums to " + std::to_string(sum));
    }
  }

  // Rows pass the 1e-6 file tolerance; renormalize so the 1e-9 invariant holds.
  static LogProbVector to_log_row(std::span<const double> probs) {
    std::vector<double> logs;
    logs.reserve(probs.size());
    for (double p : probs) logs.push_back(p > 0.0 ? std::log(p) : kNegInf);
    return LogProbVector::normalized(std::move(logs));
  }

  const LogProbVector& row_after(std::optional<TokenId> last) const {
    if (kind_ != ToyKind::bigram || !last) return start_;
    return rows_[*last];
  }

  const LogProbVector& row_for(std::span<const TokenId> context) const {
    if (context.empty()) return row_after(std::nullopt);
    return row_after(context.back());
  }

  ToyKind kind_;
  std::vector<double> start_probs_;
  std::vector<std::vector<double>> row_probs_;
  LogProbVector start_;
  std::vector<LogProbVector> rows_;
};

// Model file format:
//   {"type": "uniform"|"unigram"|"bigram", "vocab_size": int, "eos": int,
//    "labels": [string]?, "start": [float]?, "rows": [[float]]?}
// unigram reads its distribution from "start"; bigram needs both "start"
// (empty context) and vocab_size "rows".
inline std::unique_ptr<ToyModel> load_model(const nlohmann::json& doc) {
  try {
    if (!doc.is_object()) fail(ErrorKind::format, "model document must be a JSON object");
    const auto type = doc.at("type").get<std::string>();
    const auto size = doc.at("vocab_size").get<std::int64_t>();
    const auto eos = doc.at("eos").get<std::int64_t>();
    if (size < 2 || eos < 0 || eos >= size) fail(ErrorKind::format, "invalid vocab_size/eos");
    std::vector<std::string> labels;
    if (doc.contains("labels")) labels = doc.at("labels").get<std::vector<std::string>>();
    Vocabulary vocab(static_cast<std::size_t>(size), static_cast<TokenId>(eos), std::move(labels));

    if (type == "uniform") return ToyModel::uniform(std::move(vocab));
    if (type == "unigram") {
      if (!doc.contains("start")) fail(ErrorKind::format, "unigram model requires \"start\"");
      return ToyModel::unigram(std::move(vocab), doc.at("start").get<std::vector<double>>());
    }
    if (type == "bigram") {
      if (!doc.contains("start") || !doc.contains("rows")) {
        fail(ErrorKind::format, "bigram model requires \"start\" and \"rows\"");
      }
      return ToyModel::bigram(std::move(vocab), doc.at("start").get<std::vector<double>>(),
                              doc.at("rows").get<std::vector<std::vector<double>>>());
    }
    fail(ErrorKind::format, "unknown model type \"" + type + "\"");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, e.what());
  }
}

inline nlohmann::json to_json(const ToyModel& model) {
  nlohmann::json doc;
  doc["type"] = std::string(to_string(model.kind()));
  doc["vocab_size"] = model.vocabulary().size();
  doc["eos"] = model.vocabulary().eos();
  if (!model.vocabulary().labels().empty()) doc["labels"] = model.vocabulary().labels();
  if (model.kind() != ToyKind::uniform) doc["start"] = model.start_probabilities();
  if (model.kind() == ToyKind::bigram) doc["rows"] = model.row_probabilities();
  return doc;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::config, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, path + ": " + e.what());
  }
}

inline std::unique_ptr<ToyModel> load_model_file(const std::string& path) { return load_model(read_json_file(path)); }

}  // namespace mpg
