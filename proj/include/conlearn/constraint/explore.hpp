#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/constraint/spec.hpp"
#include "conlearn/errors.hpp"
#include "conlearn/models/output.hpp"
#include "conlearn/models/seq2seq.hpp"
#include "conlearn/random.hpp"

namespace conlearn::constraint {

inline constexpr std::size_t kExhaustiveCap = 4096;

struct Strategy {
  enum class Kind { Top1, Sampling, Exhaustive };
  Kind kind = Kind::Top1;
  std::size_t k = 1;

  static Strategy top1() { return {Kind::Top1, 1}; }
  static Strategy sampling(std::size_t k) { return {Kind::Sampling, k}; }
  static Strategy exhaustive() { return {Kind::Exhaustive, 0}; }

  /// "top1", "sample-K", "exhaustive".
  static Strategy parse(const std::string& s) {
    if (s == "top1") return top1();
    if (s == "exhaustive") return exhaustive();
    if (s.rfind("sample-", 0) == 0 || s.rfind("sampling-", 0) == 0) {
      const auto digits = s.substr(s.find('-') + 1);
      std::size_t k = 0;
      try {
        std::size_t used = 0;
        const long v = std::stol(digits, &used);
        if (used != digits.size() || v < 1) throw ConfigError("");
        k = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        throw ConfigError("sampling strategy needs a positive sample count: '" + s + "'");
      }
      return sampling(k);
    }
    throw ConfigError("unknown strategy '" + s + "' (expected top1, sample-K, exhaustive)");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Top1: return "top1";
      case Kind::Sampling: return "sample-" + std::to_string(k);
      case Kind::Exhaustive: return "exhaustive";
    }
    return {};
  }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

struct Candidate {
  Output output;
  std::optional<ad::Var> log_prob;  // [1]; absent for exhaustive enumeration
  double prob = std::numeric_limits<double>::quiet_NaN();  // exhaustive only
};

struct ExplorationResult {
  Strategy strategy;
  std::vector<Candidate> candidates;
};

/// A batch of model outputs that can be explored per example.
class OutputSource {
 public:
  virtual ~OutputSource() = default;
  virtual std::size_t examples() const = 0;
  virtual std::vector<int> input(std::size_t example) const = 0;
  /// One result per example; exploration draws from `rng` only.
  virtual std::vector<ExplorationResult> explore(ad::Graph& g, const Strategy& s, Rng& rng) const = 0;
  /// Differentiable [1] node P(output[position] == cls) for soft-logic atoms.
  virtual ad::Var atom_prob(ad::Graph& g, std::size_t example, const AtomRef& ref) const = 0;
  /// Number of output positions of an example, for grounding (factored outputs only).
  virtual std::size_t positions(std::size_t example) const = 0;
};

/// Independent per-position categoricals (classifier heads, taggers).
class FactoredSource : public OutputSource {
 public:
  FactoredSource(const ad::Graph& g, models::FactoredOutput out, std::vector<std::vector<int>> inputs = {})
      : out_(std::move(out)), inputs_(std::move(inputs)), probs_(g.value(out_.probs)) {
    if (!inputs_.empty() && inputs_.size() != out_.examples())
      throw ContractViolation("factored source: inputs/examples size mismatch");
  }

  std::size_t examples() const override { return out_.examples(); }
  std::vector<int> input(std::size_t e) const override { return inputs_.empty() ? std::vector<int>{} : inputs_.at(e); }
  std::size_t positions(std::size_t e) const override { return out_.rows.at(e).size(); }

  std::vector<ExplorationResult> explore(ad::Graph& g, const Strategy& s, Rng& rng) const override {
    std::vector<ExplorationResult> res;
    res.reserve(examples());
    for (std::size_t e = 0; e < examples(); ++e) {
      ExplorationResult r{s, {}};
      const auto& rows = out_.rows[e];
      switch (s.kind) {
        case Strategy::Kind::Top1: {
          Output o;
          for (auto row : rows) {
            auto p = row_span(row);
            o.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
          }
          r.candidates.push_back({o, log_prob(g, rows, o), std::numeric_limits<double>::quiet_NaN()});
          break;
        }
        case Strategy::Kind::Sampling: {
          if (s.k == 0) throw ConfigError("sampling strategy needs k >= 1");
          for (std::size_t j = 0; j < s.k; ++j) {
            Output o;
            for (auto row : rows) o.push_back(sample_categorical(rng, row_span(row)));
            r.candidates.push_back({o, log_prob(g, rows, o), std::numeric_limits<double>::quiet_NaN()});
          }
          break;
        }
        case Strategy::Kind::Exhaustive:
          r.candidates = enumerate(rows);
          break;
      }
      res.push_back(std::move(r));
    }
    return res;
  }

  ad::Var atom_prob(ad::Graph& g, std::size_t e, const AtomRef& ref) const override {
    const auto& rows = out_.rows.at(e);
    if (ref.position >= rows.size() || ref.cls >= out_.classes)
      throw ContractViolation("atom reference outside the output of example " + std::to_string(e));
    return g.element(out_.probs, rows[ref.position] * out_.classes + ref.cls);
  }

  const models::FactoredOutput& output() const { return out_; }

 private:
  std::span<const double> row_span(std::size_t row) const {
    return {probs_.data.data() + row * out_.classes, out_.classes};
  }

  ad::Var log_prob(ad::Graph& g, const std::vector<std::size_t>& rows, const Output& o) const {
    std::vector<std::size_t> idx;
    idx.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) idx.push_back(rows[i] * out_.classes + static_cast<std::size_t>(o[i]));
    return g.sum(g.log(g.index_select(out_.probs, std::move(idx))));
  }

  std::vector<Candidate> enumerate(const std::vector<std::size_t>& rows) const {
    double space = 1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) space *= static_cast<double>(out_.classes);
    if (space > static_cast<double>(kExhaustiveCap))
      throw CapacityError("exhaustive exploration would enumerate " + std::to_string(static_cast<long double>(space)) +
                          " outputs (cap " + std::to_string(kExhaustiveCap) + "); use top1 or sampling instead");
    std::vector<Candidate> out;
    Output o(rows.size(), 0);
    while (true) {
      double p = 1.0;
      for (std::size_t i = 0; i < rows.size(); ++i) p *= row_span(rows[i])[static_cast<std::size_t>(o[i])];
      out.push_back({o, std::nullopt, p});
      std::size_t i = rows.size();
      while (i > 0) {
        --i;
        if (static_cast<std::size_t>(++o[i]) < out_.classes) break;
        o[i] = 0;
        if (i == 0) return out;
      }
      if (rows.empty()) return out;
    }
  }

  models::FactoredOutput out_;
  std::vector<std::vector<int>> inputs_;
  ad::Tensor probs_;
};

/// Free-running seq2seq decodes over a batch of sources.
class Seq2SeqSource : public OutputSource {
 public:
  Seq2SeqSource(const models::Seq2Seq& model, const models::Bound& params, std::vector<std::vector<int>> sources)
      : model_(model), params_(params), src_(std::move(sources)) {
    if (src_.empty()) throw ContractViolation("seq2seq source: empty batch");
  }

  std::size_t examples() const override { return src_.size(); }
  std::vector<int> input(std::size_t e) const override { return src_.at(e); }
  std::size_t positions(std::size_t) const override {
    throw ContractViolation("sequence outputs have no fixed positions to ground soft rules on");
  }

  std::vector<ExplorationResult> explore(ad::Graph& g, const Strategy& s, Rng& rng) const override {
    if (s.kind == Strategy::Kind::Exhaustive)
      throw CapacityError("exhaustive exploration over free-running sequences is unbounded; use top1 or sampling");
    const std::size_t k = s.kind == Strategy::Kind::Sampling ? s.k : 1;
    if (k == 0) throw ConfigError("sampling strategy needs k >= 1");
    std::size_t longest = 0;
    for (const auto& x : src_) longest = std::max(longest, x.size());
    auto enc = models::Seq2Seq::replicate(g, model_.encode(g, params_, src_), k);
    auto mode = s.kind == Strategy::Kind::Sampling ? models::DecodeMode::Sample : models::DecodeMode::Greedy;
    auto gen = model_.decode(g, params_, enc, models::default_max_len(longest), mode, &rng);
    std::vector<ExplorationResult> res(src_.size(), ExplorationResult{s, {}});
    for (std::size_t e = 0; e < src_.size(); ++e)
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t row = e * k + j;
        res[e].candidates.push_back(
            {gen.tokens[row], g.element(gen.log_prob, row), std::numeric_limits<double>::quiet_NaN()});
      }
    return res;
  }

  ad::Var atom_prob(ad::Graph&, std::size_t, const AtomRef&) const override {
    throw ContractViolation("sequence outputs do not bind soft-logic atoms; use a REINFORCE loss");
  }

 private:
  const models::Seq2Seq& model_;
  const models::Bound& params_;
  std::vector<std::vector<int>> src_;
};

}  // namespace conlearn::constraint
