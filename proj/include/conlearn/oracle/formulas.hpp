#pragma once

#include <string>
#include <vector>

#include "conlearn/softlogic/eval.hpp"
#include "conlearn/softlogic/formula.hpp"

namespace conlearn::oracle {

using logic::Formula;

/// Every formula of depth <= 2 over atoms p0..p{n-1} built from !, &, |, =>,
/// plus n-ary &{} / |{} over the atoms themselves.
inline std::vector<Formula> enumerate_formulas(int atom_count) {
  std::vector<Formula> level0;
  for (int i = 0; i < atom_count; ++i) level0.push_back(Formula::atom("p" + std::to_string(i)));

  auto grow = [](const std::vector<Formula>& base) {
    std::vector<Formula> out;
    for (const auto& f : base) out.push_back(Formula::negation(f));
    for (const auto& a : base)
      for (const auto& b : base) {
        out.push_back(Formula::conjunction(a, b));
        out.push_back(Formula::disjunction(a, b));
        out.push_back(Formula::implication(a, b));
      }
    return out;
  };

  std::vector<Formula> level1 = level0;
  for (auto& f : grow(level0)) level1.push_back(std::move(f));

  std::vector<Formula> all = level1;
  for (auto& f : grow(level1)) all.push_back(std::move(f));
  all.push_back(Formula::big_and(level0));
  all.push_back(Formula::big_or(level0));
  all.push_back(Formula::big_and({}));
  all.push_back(Formula::big_or({}));
  return all;
}

inline std::vector<logic::LogicKind> all_logic_kinds() {
  std::vector<logic::LogicKind> out;
  for (auto t : {logic::TNorm::Product, logic::TNorm::Goedel, logic::TNorm::Lukasiewicz})
    for (auto m : {logic::ImplicationMode::Residuated, logic::ImplicationMode::SImplication}) out.push_back({t, m});
  return out;
}

struct BoundaryReport {
  std::size_t checked = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

/// Compare eval_soft at every {0,1} assignment against eval_bool.
inline BoundaryReport check_boundary_soundness(int atom_count) {
  BoundaryReport rep;
  const auto formulas = enumerate_formulas(atom_count);
  const auto kinds = all_logic_kinds();
  for (unsigned mask = 0; mask < (1u << atom_count); ++mask) {
    logic::Assignment a;
    for (int i = 0; i < atom_count; ++i) a["p" + std::to_string(i)] = (mask >> i) & 1u ? 1.0 : 0.0;
    for (const auto& f : formulas) {
      const double truth = logic::eval_bool(f, a) ? 1.0 : 0.0;
      for (const auto& k : kinds) {
        ++rep.checked;
        if (logic::eval_soft(f, a, k) != truth) {
          if (rep.mismatches++ == 0) rep.first_mismatch = f.to_string();
        }
      }
    }
  }
  return rep;
}

}  // namespace conlearn::oracle
