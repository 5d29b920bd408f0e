#pragma once

#include <string>
#include <string_view>
#include <unordered_map>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/errors.hpp"
#include "conlearn/softlogic/formula.hpp"

namespace conlearn::logic {

enum class TNorm { Product, Goedel, Lukasiewicz };
enum class ImplicationMode { Residuated, SImplication };

/// Which row of the t-norm table to use, and how to read =>.
/// Defaults to Goedel connectives with S-implication max(1-a, b).
struct LogicKind {
  TNorm tnorm = TNorm::Goedel;
  ImplicationMode implication = ImplicationMode::SImplication;

  friend bool operator==(const LogicKind&, const LogicKind&) = default;
};

inline std::string_view to_string(TNorm t) {
  switch (t) {
    case TNorm::Product: return "product";
    case TNorm::Goedel: return "goedel";
    case TNorm::Lukasiewicz: return "lukasiewicz";
  }
  return "?";
}

inline TNorm parse_tnorm(std::string_view s) {
  if (s == "product") return TNorm::Product;
  if (s == "goedel" || s == "godel" || s == "gödel") return TNorm::Goedel;
  if (s == "lukasiewicz") return TNorm::Lukasiewicz;
  throw ConfigError("unknown logic '" + std::string(s) + "' (expected product, goedel or lukasiewicz)");
}

inline std::string_view to_string(ImplicationMode m) {
  return m == ImplicationMode::Residuated ? "residuated" : "s";
}

inline ImplicationMode parse_implication(std::string_view s) {
  if (s == "residuated") return ImplicationMode::Residuated;
  if (s == "s" || s == "s_implication") return ImplicationMode::SImplication;
  throw ConfigError("unknown implication mode '" + std::string(s) + "' (expected residuated or s)");
}

using Assignment = std::unordered_map<std::string, double>;

/// Classical truth value; atoms are true iff assigned a value >= 0.5.
inline bool eval_bool(const Formula& f, const Assignment& a) {
  switch (f.kind()) {
    case Kind::Atom: {
      auto it = a.find(f.as_atom().key());
      if (it == a.end()) throw ContractViolation("unassigned atom '" + f.as_atom().key() + "'");
      return it->second >= 0.5;
    }
    case Kind::Not: return !eval_bool(f.child(0), a);
    case Kind::And: return eval_bool(f.child(0), a) && eval_bool(f.child(1), a);
    case Kind::Or: return eval_bool(f.child(0), a) || eval_bool(f.child(1), a);
    case Kind::Implies: return !eval_bool(f.child(0), a) || eval_bool(f.child(1), a);
    case Kind::BigAnd:
      for (const auto& c : f.children())
        if (!eval_bool(c, a)) return false;
      return true;
    case Kind::BigOr:
      for (const auto& c : f.children())
        if (eval_bool(c, a)) return true;
      return false;
  }
  return false;
}

/// Arithmetic on plain doubles.
struct DoubleAlgebra {
  using Value = double;
  double constant(double c) const { return c; }
  double value(double v) const { return v; }
  double add(double a, double b) const { return a + b; }
  double sub(double a, double b) const { return a - b; }
  double mul(double a, double b) const { return a * b; }
  double div(double a, double b) const { return a / b; }
  double one_minus(double a) const { return 1.0 - a; }
  // First argument wins ties, matching the graph ops.
  double min(double a, double b) const { return b < a ? b : a; }
  double max(double a, double b) const { return b > a ? b : a; }
};

/// Arithmetic that records [1]-shaped nodes on a Graph, so the soft value is differentiable.
struct GraphAlgebra {
  using Value = ad::Var;
  ad::Graph& g;
  ad::Var constant(double c) const { return g.scalar(c); }
  double value(ad::Var v) const { return g.scalar_value(v); }
  ad::Var add(ad::Var a, ad::Var b) const { return g.add(a, b); }
  ad::Var sub(ad::Var a, ad::Var b) const { return g.sub(a, b); }
  ad::Var mul(ad::Var a, ad::Var b) const { return g.mul(a, b); }
  ad::Var div(ad::Var a, ad::Var b) const { return g.div(a, b); }
  ad::Var one_minus(ad::Var a) const { return g.one_minus(a); }
  ad::Var min(ad::Var a, ad::Var b) const { return g.minimum(a, b); }
  ad::Var max(ad::Var a, ad::Var b) const { return g.maximum(a, b); }
};

namespace detail {

template <typename Alg>
typename Alg::Value tnorm(const Alg& alg, TNorm t, typename Alg::Value a, typename Alg::Value b) {
  switch (t) {
    case TNorm::Product: return alg.mul(a, b);
    case TNorm::Goedel: return alg.min(a, b);
    case TNorm::Lukasiewicz: return alg.max(alg.constant(0.0), alg.sub(alg.add(a, b), alg.constant(1.0)));
  }
  return a;
}

template <typename Alg>
typename Alg::Value tconorm(const Alg& alg, TNorm t, typename Alg::Value a, typename Alg::Value b) {
  switch (t) {
    case TNorm::Product: return alg.sub(alg.add(a, b), alg.mul(a, b));
    case TNorm::Goedel: return alg.max(a, b);
    case TNorm::Lukasiewicz: return alg.min(alg.constant(1.0), alg.add(a, b));
  }
  return a;
}

template <typename Alg>
typename Alg::Value implies(const Alg& alg, const LogicKind& k, typename Alg::Value a, typename Alg::Value b) {
  if (k.implication == ImplicationMode::SImplication) return alg.max(alg.one_minus(a), b);
  switch (k.tnorm) {
    case TNorm::Product:
      return alg.value(a) <= alg.value(b) ? alg.constant(1.0) : alg.div(b, a);
    case TNorm::Goedel:
      return alg.value(a) <= alg.value(b) ? alg.constant(1.0) : b;
    case TNorm::Lukasiewicz:
      return alg.min(alg.constant(1.0), alg.add(alg.one_minus(a), b));
  }
  return b;
}

}  // namespace detail

/// Soft truth value under `logic`. `lookup` maps an atom key to its value.
/// BigAnd/BigOr fold left with the binary connective; empty ones are 1 / 0.
template <typename Alg, typename Lookup>
typename Alg::Value eval_soft_with(const Formula& f, const Lookup& lookup, const LogicKind& logic, const Alg& alg) {
  switch (f.kind()) {
    case Kind::Atom: return lookup(f.as_atom().key());
    case Kind::Not: return alg.one_minus(eval_soft_with(f.child(0), lookup, logic, alg));
    case Kind::And:
      return detail::tnorm(alg, logic.tnorm, eval_soft_with(f.child(0), lookup, logic, alg),
                           eval_soft_with(f.child(1), lookup, logic, alg));
    case Kind::Or:
      return detail::tconorm(alg, logic.tnorm, eval_soft_with(f.child(0), lookup, logic, alg),
                             eval_soft_with(f.child(1), lookup, logic, alg));
    case Kind::Implies:
      return detail::implies(alg, logic, eval_soft_with(f.child(0), lookup, logic, alg),
                             eval_soft_with(f.child(1), lookup, logic, alg));
    case Kind::BigAnd:
    case Kind::BigOr: {
      const bool is_and = f.kind() == Kind::BigAnd;
      if (f.children().empty()) return alg.constant(is_and ? 1.0 : 0.0);
      auto acc = eval_soft_with(f.child(0), lookup, logic, alg);
      for (std::size_t i = 1; i < f.children().size(); ++i) {
        auto next = eval_soft_with(f.child(i), lookup, logic, alg);
        acc = is_and ? detail::tnorm(alg, logic.tnorm, acc, next) : detail::tconorm(alg, logic.tnorm, acc, next);
      }
      return acc;
    }
  }
  return alg.constant(0.0);
}

inline double eval_soft(const Formula& f, const Assignment& a, const LogicKind& logic = {}) {
  auto lookup = [&](const std::string& key) {
    auto it = a.find(key);
    if (it == a.end()) throw ContractViolation("unassigned atom '" + key + "'");
    if (!(it->second >= 0.0 && it->second <= 1.0))
      throw ContractViolation("atom '" + key + "' value " + std::to_string(it->second) + " outside [0,1]");
    return it->second;
  };
  return eval_soft_with(f, lookup, logic, DoubleAlgebra{});
}

/// Differentiable soft value over [1]-shaped probability nodes.
inline ad::Var eval_soft(const Formula& f, const std::unordered_map<std::string, ad::Var>& atoms, ad::Graph& g,
                         const LogicKind& logic = {}) {
  auto lookup = [&](const std::string& key) {
    auto it = atoms.find(key);
    if (it == atoms.end()) throw ContractViolation("unassigned atom '" + key + "'");
    const double v = g.scalar_value(it->second);
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractViolation("atom '" + key + "' value " + std::to_string(v) + " outside [0,1]");
    return it->second;
  };
  return eval_soft_with(f, lookup, logic, GraphAlgebra{g});
}

}  // namespace conlearn::logic
