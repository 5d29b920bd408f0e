#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/constraint/explore.hpp"
#include "conlearn/constraint/spec.hpp"
#include "conlearn/softlogic/eval.hpp"

namespace conlearn::constraint {

enum class LossType { Soft, Binary, Real };

inline std::string to_string(LossType t) {
  switch (t) {
    case LossType::Soft: return "soft";
    case LossType::Binary: return "binary";
    case LossType::Real: return "real";
  }
  return {};
}

inline LossType parse_loss_type(const std::string& s) {
  if (s == "soft" || s == "psl") return LossType::Soft;
  if (s == "binary") return LossType::Binary;
  if (s == "real") return LossType::Real;
  throw ConfigError("unknown loss type '" + s + "' (expected soft, binary, real)");
}

inline void check_legal(LossType t, const Strategy& s) {
  if (s.kind == Strategy::Kind::Exhaustive && t != LossType::Soft)
    throw ConfigError("exhaustive exploration is only defined for the soft loss; REINFORCE needs top1 or sampling");
  if (s.kind == Strategy::Kind::Sampling && s.k == 0) throw ConfigError("sampling strategy needs k >= 1");
}

/// Loss node plus a non-negative scalar describing how violated the batch was:
/// the loss itself for soft, the mean reward over candidates for REINFORCE.
struct LossValue {
  ad::Var loss;
  double violation = 0.0;
};

/// (1/|cands|) * sum over violating candidates of r(y) * log p(y). Rewards are constants.
inline LossValue reinforce_loss(ad::Graph& g, const ExplorationResult& res, const ConstraintSpec& spec, LossType type,
                                std::span<const int> input) {
  if (type == LossType::Soft) throw ContractViolation("reinforce_loss called with the soft loss type");
  if (res.candidates.empty()) throw ContractViolation("reinforce_loss: no candidates");
  std::vector<ad::Var> terms;
  double reward_sum = 0.0;
  for (const auto& c : res.candidates) {
    if (!c.log_prob) throw ContractViolation("reinforce_loss needs sampled or top1 candidates with log-probabilities");
    const double d = violation_degree(spec, input, c.output);
    if (d <= 0.0) continue;
    const double r = type == LossType::Binary ? 1.0 : d;
    reward_sum += r;
    terms.push_back(g.scale(*c.log_prob, r));
  }
  const double n = static_cast<double>(res.candidates.size());
  if (terms.empty()) return {g.scalar(0.0), 0.0};
  return {g.scale(g.add_n(terms), 1.0 / n), reward_sum / n};
}

namespace detail {

inline bool grounding_active(const logic::Formula& f, const SymbolicRule& rule, const Output& out) {
  if (f.kind() != logic::Kind::Implies) return true;
  const auto& ante = f.child(0);
  return logic::eval_bool(ante, assignment_for(ante, rule, out));
}

}  // namespace detail

/// Mean over groundings of 1 - soft value. Exhaustive: every grounding counts.
/// Top1/sampling: a candidate activates the groundings whose antecedent it makes
/// true (non-implications are always active); atoms still bind to model
/// probabilities, and the per-candidate sums are averaged over candidates.
inline LossValue psl_loss(ad::Graph& g, const ExplorationResult& res, const OutputSource& src, std::size_t example,
                          const ConstraintSpec& spec, const logic::LogicKind& logic) {
  if (!spec.symbolic)
    throw ContractViolation("constraint '" + spec.name + "' is programmatic; use a REINFORCE loss type");
  const auto& rule = *spec.symbolic;
  const auto& gs = rule.groundings(src.positions(example));
  if (gs.empty()) return {g.scalar(0.0), 0.0};

  std::vector<double> weight(gs.size(), 0.0);
  const double n = static_cast<double>(gs.size());
  if (res.strategy.kind == Strategy::Kind::Exhaustive) {
    std::fill(weight.begin(), weight.end(), 1.0 / n);
  } else {
    if (res.candidates.empty()) throw ContractViolation("psl_loss: no candidates");
    const double per = 1.0 / (n * static_cast<double>(res.candidates.size()));
    for (const auto& c : res.candidates)
      for (std::size_t i = 0; i < gs.size(); ++i)
        if (detail::grounding_active(gs[i], rule, c.output)) weight[i] += per;
  }

  std::unordered_map<std::string, ad::Var> atoms;
  std::vector<ad::Var> terms;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (weight[i] == 0.0) continue;
    for (const auto& key : gs[i].atoms())
      if (!atoms.contains(key)) atoms.emplace(key, src.atom_prob(g, example, rule.resolve(key)));
    terms.push_back(g.scale(g.one_minus(logic::eval_soft(gs[i], atoms, g, logic)), weight[i]));
  }
  if (terms.empty()) return {g.scalar(0.0), 0.0};
  auto loss = g.add_n(terms);
  return {loss, g.scalar_value(loss)};
}

/// Batch constraint loss: explore once, then per spec the mean over examples;
/// the per-spec losses are summed.
inline LossValue constraint_loss(ad::Graph& g, const OutputSource& src, const std::vector<ConstraintSpec>& specs,
                                 LossType type, const Strategy& strategy, const logic::LogicKind& logic, Rng& rng) {
  check_legal(type, strategy);
  if (specs.empty()) throw ContractViolation("constraint_loss: no constraints");
  if (type == LossType::Soft)
    for (const auto& s : specs)
      if (!s.symbolic) throw ConfigError("constraint '" + s.name + "' has no soft-logic form; use binary or real");
  const auto results = src.explore(g, strategy, rng);
  const double inv = 1.0 / static_cast<double>(results.size());
  std::vector<ad::Var> terms;
  double violation = 0.0;
  for (const auto& spec : specs)
    for (std::size_t e = 0; e < results.size(); ++e) {
      auto lv = type == LossType::Soft ? psl_loss(g, results[e], src, e, spec, logic)
                                       : reinforce_loss(g, results[e], spec, type, src.input(e));
      terms.push_back(lv.loss);
      violation += lv.violation * inv;
    }
  return {g.scale(g.add_n(terms), inv), violation};
}

}  // namespace conlearn::constraint
