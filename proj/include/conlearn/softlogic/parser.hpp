#pragma once

// Concrete syntax for constraint formulas.
//
//   formula     := implication
//   implication := disjunction [ "=>" implication ]          (right assoc)
//   disjunction := conjunction { "|" conjunction }           (left assoc)
//   conjunction := unary { "&" unary }                       (left assoc)
//   unary       := "!" unary | quantifier | nary | primary
//   quantifier  := ("forall" | "exists") VAR "in" DOMAIN [ "\" "{" arg {"," arg} "}" ] ":" formula
//   nary        := ("&" | "|") "{" [ formula { "," formula } ] "}"
//   primary     := atom | "(" formula ")"
//   atom        := IDENT [ "(" arg { "," arg } ")" ]
//   arg         := IDENT | INT
//
// Quantifiers expand eagerly over the declared finite domain into BigAnd
// (forall) or BigOr (exists). Inside the body, the quantified variable is
// substituted into atom arguments and exclusion sets. A quantifier body
// extends as far right as possible.
//
// Constraint files hold one formula per line after a header of domain
// declarations:
//
//   # comment
//   domain S = {1, 2, 3}
//   domain R = 0..3
//   B(X,i) => ...

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/softlogic/formula.hpp"

namespace conlearn::logic {

using Domains = std::map<std::string, std::vector<std::string>>;
using Bindings = std::map<std::string, std::string>;

namespace detail {

enum class Tok { Ident, Int, Not, And, Or, Implies, LParen, RParen, LBrace, RBrace, Comma, Colon, Backslash, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

inline std::vector<Token> tokenize(std::string_view text, int first_line = 1) {
  std::vector<Token> out;
  int line = first_line, col = 1;
  std::size_t i = 0;
  auto push = [&](Tok k, std::string s, int c) { out.push_back(Token{k, std::move(s), line, c}); };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      ++col;
      continue;
    }
    const int start_col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      push(Tok::Ident, std::string(text.substr(i, j - i)), start_col);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      push(Tok::Int, std::string(text.substr(i, j - i)), start_col);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }
    if (c == '=' && i + 1 < text.size() && text[i + 1] == '>') {
      push(Tok::Implies, "=>", start_col);
      i += 2;
      col += 2;
      continue;
    }
    Tok k;
    switch (c) {
      case '!': k = Tok::Not; break;
      case '&': k = Tok::And; break;
      case '|': k = Tok::Or; break;
      case '(': k = Tok::LParen; break;
      case ')': k = Tok::RParen; break;
      case '{': k = Tok::LBrace; break;
      case '}': k = Tok::RBrace; break;
      case ',': k = Tok::Comma; break;
      case ':': k = Tok::Colon; break;
      case '\\': k = Tok::Backslash; break;
      default:
        throw ParseError(std::string("unexpected character '") + c + "'", line, start_col);
    }
    push(k, std::string(1, c), start_col);
    ++i;
    ++col;
  }
  out.push_back(Token{Tok::End, "", line, col});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, const Domains& domains, Bindings bindings)
      : toks_(std::move(toks)), domains_(domains), bindings_(std::move(bindings)) {}

  Formula parse_all() {
    Formula f = formula();
    if (peek().kind != Tok::End) fail("unexpected '" + peek().text + "'");
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  const Token& expect(Tok k, std::string_view what) {
    if (peek().kind != k) fail("expected " + std::string(what) + (peek().kind == Tok::End ? " before end of input" : ", got '" + peek().text + "'"));
    return next();
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().column); }

  Formula formula() { return implication(); }

  Formula implication() {
    Formula lhs = disjunction();
    if (accept(Tok::Implies)) return Formula::implication(std::move(lhs), implication());
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (peek().kind == Tok::Or && toks_[pos_ + 1].kind != Tok::LBrace) {
      ++pos_;
      lhs = Formula::disjunction(std::move(lhs), conjunction());
    }
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = unary();
    while (peek().kind == Tok::And && toks_[pos_ + 1].kind != Tok::LBrace) {
      ++pos_;
      lhs = Formula::conjunction(std::move(lhs), unary());
    }
    return lhs;
  }

  Formula unary() {
    if (accept(Tok::Not)) return Formula::negation(unary());
    if ((peek().kind == Tok::And || peek().kind == Tok::Or) && toks_[pos_ + 1].kind == Tok::LBrace) return nary();
    if (peek().kind == Tok::Ident && (peek().text == "forall" || peek().text == "exists")) return quantifier();
    return primary();
  }

  Formula nary() {
    const bool is_and = next().kind == Tok::And;
    expect(Tok::LBrace, "'{'");
    std::vector<Formula> items;
    if (!accept(Tok::RBrace)) {
      do items.push_back(formula());
      while (accept(Tok::Comma));
      expect(Tok::RBrace, "'}'");
    }
    return is_and ? Formula::big_and(std::move(items)) : Formula::big_or(std::move(items));
  }

  Formula quantifier() {
    const bool is_forall = next().text == "forall";
    const Token& var = expect(Tok::Ident, "quantified variable");
    const Token& in = expect(Tok::Ident, "'in'");
    if (in.text != "in") throw ParseError("expected 'in', got '" + in.text + "'", in.line, in.column);
    const Token& dom_tok = expect(Tok::Ident, "domain name");
    auto dom_it = domains_.find(dom_tok.text);
    if (dom_it == domains_.end()) throw SemanticError("unknown index domain '" + dom_tok.text + "' at " + std::to_string(dom_tok.line) + ":" + std::to_string(dom_tok.column));

    std::vector<std::string> excluded;
    if (accept(Tok::Backslash)) {
      expect(Tok::LBrace, "'{'");
      do excluded.push_back(argument());
      while (accept(Tok::Comma));
      expect(Tok::RBrace, "'}'");
    }
    expect(Tok::Colon, "':'");

    std::vector<std::string> values;
    for (const auto& v : dom_it->second)
      if (std::find(excluded.begin(), excluded.end(), v) == excluded.end()) values.push_back(v);

    const std::size_t body_start = pos_;
    const std::optional<std::string> shadowed =
        bindings_.contains(var.text) ? std::optional<std::string>(bindings_[var.text]) : std::nullopt;

    std::vector<Formula> items;
    std::size_t body_end = body_start;
    if (values.empty()) {
      // Still consume the body so the surrounding parse can continue.
      bindings_[var.text] = dom_it->second.empty() ? std::string("_") : dom_it->second.front();
      formula();
      body_end = pos_;
    }
    for (const auto& v : values) {
      pos_ = body_start;
      bindings_[var.text] = v;
      items.push_back(formula());
      body_end = pos_;
    }
    pos_ = body_end;
    if (shadowed)
      bindings_[var.text] = *shadowed;
    else
      bindings_.erase(var.text);
    return is_forall ? Formula::big_and(std::move(items)) : Formula::big_or(std::move(items));
  }

  std::string argument() {
    const Token& t = next();
    if (t.kind == Tok::Int) return t.text;
    if (t.kind == Tok::Ident) {
      auto it = bindings_.find(t.text);
      return it == bindings_.end() ? t.text : it->second;
    }
    throw ParseError("expected index argument, got '" + t.text + "'", t.line, t.column);
  }

  Formula primary() {
    if (accept(Tok::LParen)) {
      Formula f = formula();
      expect(Tok::RParen, "')'");
      return f;
    }
    const Token& name = expect(Tok::Ident, "atom or '('");
    std::vector<std::string> args;
    if (accept(Tok::LParen)) {
      do args.push_back(argument());
      while (accept(Tok::Comma));
      expect(Tok::RParen, "')'");
    }
    return Formula::atom(name.text, std::move(args));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const Domains& domains_;
  Bindings bindings_;
};

}  // namespace detail

/// Parse one formula. Free variables may be pre-bound through `bindings`.
inline Formula parse_formula(std::string_view text, const Domains& domains = {}, const Bindings& bindings = {}) {
  detail::Parser p(detail::tokenize(text), domains, bindings);
  return p.parse_all();
}

struct ConstraintFile {
  Domains domains;
  std::vector<Formula> formulas;
  std::vector<std::string> sources;  // original text of each formula line
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> parse_domain_values(const std::string& spec, int line) {
  std::vector<std::string> values;
  if (spec.size() >= 2 && spec.front() == '{' && spec.back() == '}') {
    std::stringstream ss(spec.substr(1, spec.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) throw ParseError("empty domain element", line, 1);
      values.push_back(item);
    }
    return values;
  }
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    try {
      const int lo = std::stoi(spec.substr(0, dots));
      const int hi = std::stoi(spec.substr(dots + 2));
      for (int v = lo; v <= hi; ++v) values.push_back(std::to_string(v));
      return values;
    } catch (const std::logic_error&) {
    }
  }
  throw ParseError("domain must be {a, b, ...} or lo..hi", line, 1);
}

}  // namespace detail

/// Parse a constraint file: `domain NAME = ...` header lines, then one formula per line.
inline ConstraintFile parse_constraint_file(std::string_view text) {
  ConstraintFile out;
  std::stringstream ss{std::string(text)};
  std::string raw;
  int line_no = 0;
  bool header = true;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.rfind("domain ", 0) == 0) {
      if (!header) throw ParseError("domain declarations must precede formulas", line_no, 1);
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError("expected '=' in domain declaration", line_no, 1);
      const std::string name = detail::trim(line.substr(7, eq - 7));
      if (name.empty()) throw ParseError("missing domain name", line_no, 8);
      out.domains[name] = detail::parse_domain_values(detail::trim(line.substr(eq + 1)), line_no);
      continue;
    }
    header = false;
    detail::Parser p(detail::tokenize(line, line_no), out.domains, {});
    out.formulas.push_back(p.parse_all());
    out.sources.push_back(line);
  }
  return out;
}

}  // namespace conlearn::logic
