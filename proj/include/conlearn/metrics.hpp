#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "conlearn/constraint/spec.hpp"
#include "conlearn/errors.hpp"

namespace conlearn::metrics {

/// (1+b^2) m1 m2 / (m2 + b^2 m1); 0 when either argument is 0.
inline double hbeta(double m1, double m2, double beta) {
  if (!(beta > 0.0)) throw ContractViolation("hbeta: beta must be positive");
  if (!(m1 >= 0.0 && m1 <= 1.0 && m2 >= 0.0 && m2 <= 1.0))
    throw ContractViolation("hbeta: arguments must lie in [0,1]");
  if (m1 * m2 == 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * m1 * m2 / (m2 + b2 * m1);
}

/// Fraction of (input, output) pairs whose degree under `spec` is positive.
inline double violation_rate(const constraint::ConstraintSpec& spec, const std::vector<std::vector<int>>& inputs,
                             const std::vector<std::vector<int>>& outputs) {
  if (outputs.empty()) throw ContractViolation("violation_rate: empty dataset");
  if (!inputs.empty() && inputs.size() != outputs.size())
    throw ContractViolation("violation_rate: inputs/outputs length mismatch");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    std::span<const int> in = inputs.empty() ? std::span<const int>{} : std::span<const int>(inputs[i]);
    if (constraint::violates(spec, in, outputs[i])) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(outputs.size());
}

/// An example violates when any of the specs is violated.
inline double violation_rate(const std::vector<constraint::ConstraintSpec>& specs,
                             const std::vector<std::vector<int>>& inputs, const std::vector<std::vector<int>>& outputs) {
  if (outputs.empty()) throw ContractViolation("violation_rate: empty dataset");
  std::size_t bad = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    std::span<const int> in = inputs.empty() ? std::span<const int>{} : std::span<const int>(inputs.at(i));
    for (const auto& s : specs)
      if (constraint::violates(s, in, outputs[i])) {
        ++bad;
        break;
      }
  }
  return static_cast<double>(bad) / static_cast<double>(outputs.size());
}

enum class MetricKind { Accuracy, TokenAccuracy, F1 };

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::Accuracy: return "accuracy";
    case MetricKind::TokenAccuracy: return "token_accuracy";
    case MetricKind::F1: return "f1";
  }
  return {};
}

namespace detail {
inline void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw ContractViolation("metric: " + std::to_string(a) + " predictions vs " + std::to_string(b) + " golds");
  if (a == 0) throw ContractViolation("metric: empty evaluation set");
}
}  // namespace detail

/// Exact match per example (single-class accuracy, or subset accuracy for label vectors).
inline double accuracy(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold) {
  detail::check_lengths(pred.size(), gold.size());
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == gold[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

/// Micro token accuracy: positions aligned from the start; positions beyond the
/// shorter sequence count as wrong. Denominator is sum of max lengths.
inline double token_accuracy(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold) {
  detail::check_lengths(pred.size(), gold.size());
  std::size_t ok = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto n = std::min(pred[i].size(), gold[i].size());
    for (std::size_t t = 0; t < n; ++t) ok += pred[i][t] == gold[i][t];
    total += std::max(pred[i].size(), gold[i].size());
  }
  return total == 0 ? 1.0 : static_cast<double>(ok) / static_cast<double>(total);
}

/// Token-level micro F1 over tags != `outside`. Sequences must be aligned.
inline double tag_f1(const std::vector<std::vector<int>>& pred, const std::vector<std::vector<int>>& gold,
                     int outside = 0) {
  detail::check_lengths(pred.size(), gold.size());
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].size() != gold[i].size()) throw ContractViolation("tag_f1: sequence length mismatch");
    for (std::size_t t = 0; t < pred[i].size(); ++t) {
      const int p = pred[i][t], g = gold[i][t];
      if (p != outside && p == g) ++tp;
      if (p != outside && p != g) ++fp;
      if (g != outside && p != g) ++fn;
    }
  }
  if (tp == 0) return (fp == 0 && fn == 0) ? 1.0 : 0.0;
  const double prec = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double rec = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * prec * rec / (prec + rec);
}

inline double main_metric(MetricKind k, const std::vector<std::vector<int>>& pred,
                          const std::vector<std::vector<int>>& gold) {
  switch (k) {
    case MetricKind::Accuracy: return accuracy(pred, gold);
    case MetricKind::TokenAccuracy: return token_accuracy(pred, gold);
    case MetricKind::F1: return tag_f1(pred, gold);
  }
  return 0.0;
}

}  // namespace conlearn::metrics
