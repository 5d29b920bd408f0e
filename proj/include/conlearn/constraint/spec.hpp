#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/softlogic/eval.hpp"
#include "conlearn/softlogic/formula.hpp"

namespace conlearn::constraint {

/// A discrete model output: one class per position, or a token sequence.
using Output = std::vector<int>;

/// Where an atom lives in a factored output: P(output[position] == cls).
struct AtomRef {
  std::size_t position = 0;
  std::size_t cls = 0;
};

/// A rule schema grounded per output length.
struct SymbolicRule {
  /// Ground instances for an output with `positions` positions. Must return the
  /// same reference for the same argument; specs are shared across threads.
  std::function<const std::vector<logic::Formula>&(std::size_t positions)> groundings;
  std::function<AtomRef(const std::string& atom_key)> resolve;
};

/// Degree in [0,1] for a discrete output given the example's discrete input
/// (empty for feature-vector tasks).
using DegreeFn = std::function<double(std::span<const int> input, std::span<const int> output)>;

struct ConstraintSpec {
  std::string name;
  std::optional<SymbolicRule> symbolic;
  DegreeFn degree;  // when empty: fraction of violated groundings
};

/// Boolean assignment that a discrete output induces on `f`'s atoms.
inline logic::Assignment assignment_for(const logic::Formula& f, const SymbolicRule& rule, std::span<const int> output) {
  logic::Assignment a;
  for (const auto& key : f.atoms()) {
    auto ref = rule.resolve(key);
    if (ref.position >= output.size())
      throw ContractViolation("atom '" + key + "' refers to position " + std::to_string(ref.position) +
                              " of an output with " + std::to_string(output.size()) + " positions");
    a[key] = output[ref.position] == static_cast<int>(ref.cls) ? 1.0 : 0.0;
  }
  return a;
}

inline double violation_degree(const ConstraintSpec& spec, std::span<const int> input, std::span<const int> output) {
  double d = 0.0;
  if (spec.degree) {
    d = spec.degree(input, output);
  } else if (spec.symbolic) {
    const auto& gs = spec.symbolic->groundings(output.size());
    if (gs.empty()) return 0.0;
    std::size_t bad = 0;
    for (const auto& f : gs)
      if (!logic::eval_bool(f, assignment_for(f, *spec.symbolic, output))) ++bad;
    d = static_cast<double>(bad) / static_cast<double>(gs.size());
  } else {
    throw ContractViolation("constraint '" + spec.name + "' has neither rules nor a degree function");
  }
  if (!(d >= 0.0 && d <= 1.0))
    throw ContractViolation("constraint '" + spec.name + "' degree " + std::to_string(d) + " outside [0,1]");
  return d;
}

inline bool violates(const ConstraintSpec& spec, std::span<const int> input, std::span<const int> output) {
  return violation_degree(spec, input, output) > 0.0;
}

}  // namespace conlearn::constraint
