#pragma once

#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "conlearn/errors.hpp"

namespace conlearn::logic {

enum class Kind { Atom, Not, And, Or, Implies, BigAnd, BigOr };

/// Propositional atom, optionally with ground index arguments: name(a,b).
struct Atom {
  std::string name;
  std::vector<std::string> args;

  std::string key() const {
    if (args.empty()) return name;
    std::string out = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ",";
      out += args[i];
    }
    return out + ")";
  }

  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Immutable formula tree. Copies share structure.
class Formula {
 public:
  struct Node {
    Kind kind;
    Atom atom;                      // Kind::Atom
    std::vector<Formula> children;  // 1 for Not, 2 for binary, n for Big*
  };

  static Formula atom(std::string name, std::vector<std::string> args = {}) {
    if (name.empty()) throw ContractViolation("atom name must be non-empty");
    return Formula(Node{Kind::Atom, Atom{std::move(name), std::move(args)}, {}});
  }
  static Formula negation(Formula f) { return Formula(Node{Kind::Not, {}, {std::move(f)}}); }
  static Formula conjunction(Formula a, Formula b) { return Formula(Node{Kind::And, {}, {std::move(a), std::move(b)}}); }
  static Formula disjunction(Formula a, Formula b) { return Formula(Node{Kind::Or, {}, {std::move(a), std::move(b)}}); }
  static Formula implication(Formula a, Formula b) {
    return Formula(Node{Kind::Implies, {}, {std::move(a), std::move(b)}});
  }
  static Formula big_and(std::vector<Formula> fs) { return Formula(Node{Kind::BigAnd, {}, std::move(fs)}); }
  static Formula big_or(std::vector<Formula> fs) { return Formula(Node{Kind::BigOr, {}, std::move(fs)}); }

  Kind kind() const { return node_->kind; }
  const Atom& as_atom() const { return node_->atom; }
  const std::vector<Formula>& children() const { return node_->children; }
  const Formula& child(std::size_t i) const { return node_->children.at(i); }

  /// Concrete syntax accepted by parse_formula. Binary nodes are always
  /// parenthesized; n-ary nodes use &{...} and |{...}.
  std::string to_string() const {
    switch (kind()) {
      case Kind::Atom:
        return as_atom().key();
      case Kind::Not:
        return "!" + child(0).to_string();
      case Kind::And:
        return "(" + child(0).to_string() + " & " + child(1).to_string() + ")";
      case Kind::Or:
        return "(" + child(0).to_string() + " | " + child(1).to_string() + ")";
      case Kind::Implies:
        return "(" + child(0).to_string() + " => " + child(1).to_string() + ")";
      case Kind::BigAnd:
      case Kind::BigOr: {
        std::string out = kind() == Kind::BigAnd ? "&{" : "|{";
        for (std::size_t i = 0; i < children().size(); ++i) {
          if (i) out += ", ";
          out += children()[i].to_string();
        }
        return out + "}";
      }
    }
    return {};
  }

  void collect_atoms(std::set<std::string>& out) const {
    if (kind() == Kind::Atom) {
      out.insert(as_atom().key());
      return;
    }
    for (const auto& c : children()) c.collect_atoms(out);
  }

  std::set<std::string> atoms() const {
    std::set<std::string> out;
    collect_atoms(out);
    return out;
  }

  friend bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    if (a.kind() == Kind::Atom) return a.as_atom() == b.as_atom();
    return a.children() == b.children();
  }

 private:
  explicit Formula(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace conlearn::logic
