#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/harness/run.hpp"
#include "conlearn/text.hpp"

namespace conlearn::harness {

/// One `key = value` entry. Scalars are stored as a one-element list.
struct ConfigValue {
  std::vector<std::string> items;
  bool is_list = false;
  int line = 0;
};

/// Parsed config file: keys are "section.key" (or "key" before any section).
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& content, const std::string& source = "<config>") {
    ConfigFile cf;
    cf.source_ = source;
    std::istringstream in(content);
    std::string raw, section;
    int n = 0;
    while (std::getline(in, raw)) {
      ++n;
      const std::string line(text::trim(strip_comment(raw)));
      if (line.empty()) continue;
      auto fail = [&](const std::string& msg) { throw ConfigError(source + ":" + std::to_string(n) + ": " + msg); };
      if (line.front() == '[') {
        if (line.back() != ']') fail("unterminated section header");
        section = std::string(text::trim(std::string_view(line).substr(1, line.size() - 2)));
        if (!valid_name(section, true)) fail("bad section name '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail("expected 'key = value'");
      const std::string key(text::trim(std::string_view(line).substr(0, eq)));
      if (!valid_name(key, false)) fail("bad key '" + key + "'");
      const std::string full = section.empty() ? key : section + "." + key;
      if (cf.values_.count(full)) fail("duplicate key '" + full + "'");
      const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
      ConfigValue v;
      v.line = n;
      if (!value.empty() && value.front() == '[') {
        if (value.back() != ']') fail("unterminated list");
        v.is_list = true;
        const auto body = text::trim(std::string_view(value).substr(1, value.size() - 2));
        if (!body.empty())
          for (const auto& item : text::split(body, ',')) {
            auto s = unquote(text::trim(item));
            if (!s) fail("malformed list item '" + item + "'");
            if (s->empty()) fail("empty list item");
            v.items.push_back(*s);
          }
      } else {
        auto s = unquote(value);
        if (!s) fail("malformed value '" + value + "'");
        if (s->empty()) fail("missing value for '" + full + "'");
        v.items.push_back(*s);
      }
      cf.values_[full] = std::move(v);
      cf.order_.push_back(full);
    }
    return cf;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const ConfigValue& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
    return it->second;
  }
  const std::vector<std::string>& keys() const { return order_; }
  const std::string& source() const { return source_; }

  std::string where(const std::string& key) const { return source_ + ":" + std::to_string(at(key).line); }

 private:
  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }

  static bool valid_name(const std::string& s, bool dotted) {
    if (s.empty()) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || (dotted && c == '.'))) return false;
    return s.front() != '.' && s.back() != '.';
  }

  /// Bare word or "double-quoted" string (no escapes); nullopt when malformed.
  static std::optional<std::string> unquote(std::string_view s) {
    if (!s.empty() && s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') return std::nullopt;
      auto inner = s.substr(1, s.size() - 2);
      if (inner.find('"') != std::string_view::npos) return std::nullopt;
      return std::string(inner);
    }
    for (char c : s)
      if (c == '"' || c == '[' || c == ']' || c == ',') return std::nullopt;
    return std::string(s);
  }

  std::string source_;
  std::map<std::string, ConfigValue> values_;
  std::vector<std::string> order_;
};

/// A grid: shared training settings plus the axes to sweep.
struct GridSpec {
  RunConfig base;  // task, training, data, integrator weights, betas
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> losses;  // "none" is the constraint-free baseline
  std::vector<constraint::Strategy> strategies;
  std::vector<integrate::Mechanism> mechanisms;
  std::vector<logic::LogicKind> logics;
  std::size_t workers = 1;
  std::string out_dir = "results";
};

inline std::string logic_name(const logic::LogicKind& k) {
  return std::string(logic::to_string(k.tnorm)) + "-" + std::string(logic::to_string(k.implication));
}

inline std::vector<integrate::Mechanism> all_mechanisms() {
  using M = integrate::Mechanism;
  return {M::Static, M::Monotone, M::ProjSup, M::ProjCon, M::ProjBoth};
}

/// Tuned per-task defaults; the shipped configs/ files restate them.
inline GridSpec default_grid(const std::string& task) {
  using constraint::Strategy;
  GridSpec g;
  g.base.task = task;
  g.mechanisms = all_mechanisms();
  g.logics = {logic::LogicKind{}};
  auto& c = g.base;
  if (task == "ste") {
    c.epochs = 1;
    c.batch_size = 64;
    c.lr = 0.005;
    c.constraint_batch = 8;
    c.integrator.lambda2 = 0.02;
    c.data.train = 6000;
    g.losses = {"none", "binary", "real"};
    g.strategies = {Strategy::top1(), Strategy::sampling(1), Strategy::sampling(5), Strategy::sampling(10)};
  } else if (task == "hierlabel") {
    c.epochs = 40;
    c.batch_size = 32;
    c.lr = 0.01;
    c.constraint_batch = 32;
    c.integrator.lambda2 = 0.2;
    g.losses = {"none", "soft", "binary", "real"};
    g.strategies = {Strategy::top1(), Strategy::sampling(1), Strategy::sampling(5), Strategy::sampling(10),
                    Strategy::exhaustive()};
  } else if (task == "bio") {
    c.epochs = 8;
    c.batch_size = 32;
    c.lr = 0.005;
    c.constraint_batch = 8;
    c.integrator.lambda2 = 0.1;
    g.losses = {"none", "soft", "binary", "real"};
    g.strategies = {Strategy::top1(), Strategy::sampling(1), Strategy::sampling(5), Strategy::sampling(10)};
  } else if (task == "pairrel") {
    c.epochs = 30;
    c.batch_size = 32;
    c.lr = 0.01;
    c.constraint_batch = 16;
    c.integrator.lambda2 = 1.0;
    g.losses = {"none", "soft", "binary", "real"};
    g.strategies = {Strategy::top1(), Strategy::sampling(1), Strategy::sampling(5), Strategy::sampling(10),
                    Strategy::exhaustive()};
  } else {
    throw ConfigError("unknown task '" + task + "'");
  }
  return g;
}

namespace detail {

inline std::string scalar(const ConfigFile& cf, const std::string& key) {
  const auto& v = cf.at(key);
  if (v.is_list || v.items.size() != 1) throw ConfigError(cf.where(key) + ": '" + key + "' must be a single value");
  return v.items.front();
}

template <typename F>
auto convert(const ConfigFile& cf, const std::string& key, const std::string& item, F f) {
  try {
    return f(item);
  } catch (const std::exception& e) {
    throw ConfigError(cf.where(key) + ": " + key + ": " + e.what());
  }
}

inline std::size_t to_count(const std::string& s) {
  const auto v = text::parse_int(s);
  if (v < 0) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

inline std::uint64_t to_seed(const std::string& s) {
  const auto v = text::parse_int(s);
  if (v < 0) throw ConfigError("seeds must be non-negative, got '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

template <typename F>
auto list_of(const ConfigFile& cf, const std::string& key, F f) {
  std::vector<decltype(f(std::string()))> out;
  for (const auto& item : cf.at(key).items) out.push_back(convert(cf, key, item, f));
  if (out.empty()) throw ConfigError(cf.where(key) + ": '" + key + "' must not be empty");
  return out;
}

inline std::string check_loss_name(const std::string& s) {
  if (s != "none") constraint::parse_loss_type(s);
  return s;
}

}  // namespace detail

/// Builds a grid from a parsed file: task defaults first, then every key in
/// the file. Unknown keys are errors.
inline GridSpec grid_from_config(const ConfigFile& cf, const std::string& task_override = "") {
  using namespace detail;
  if (task_override.empty() && !cf.has("task")) throw ConfigError(cf.source() + ": missing key 'task'");
  const auto task = task_override.empty() ? scalar(cf, "task") : task_override;
  if (!tasks::is_task(task)) throw ConfigError("unknown task '" + task + "'");
  GridSpec g = default_grid(task);
  auto& c = g.base;
  for (const auto& key : cf.keys()) {
    auto one = [&] { return scalar(cf, key); };
    auto count = [&] { return convert(cf, key, one(), to_count); };
    auto real = [&] { return convert(cf, key, one(), [](const std::string& s) { return text::parse_double(s); }); };
    if (key == "task") continue;
    if (key == "seeds") g.seeds = list_of(cf, key, to_seed);
    else if (key == "train.epochs") c.epochs = count();
    else if (key == "train.batch_size") c.batch_size = count();
    else if (key == "train.constraint_batch") c.constraint_batch = count();
    else if (key == "train.constraint_start_epoch") c.constraint_start_epoch = count();
    else if (key == "train.lr") c.lr = real();
    else if (key == "data.train") c.data.train = count();
    else if (key == "data.test") c.data.test = count();
    else if (key == "data.unlabeled") {
      c.data.unlabeled = count();
      c.data.unlabeled_set = true;
    } else if (key == "data.seed") c.data.data_seed = convert(cf, key, one(), to_seed);
    else if (key == "grid.loss") g.losses = list_of(cf, key, check_loss_name);
    else if (key == "grid.strategy") g.strategies = list_of(cf, key, constraint::Strategy::parse);
    else if (key == "grid.mechanism") g.mechanisms = list_of(cf, key, integrate::parse_mechanism);
    else if (key == "grid.logic") {
      const auto tnorms = list_of(cf, key, [](const std::string& s) { return logic::parse_tnorm(s); });
      const auto impl = g.logics.front().implication;
      g.logics.clear();
      for (auto t : tnorms) g.logics.push_back({t, impl});
    } else if (key == "grid.implication") {
      const auto mode = convert(cf, key, one(), [](const std::string& s) { return logic::parse_implication(s); });
      for (auto& l : g.logics) l.implication = mode;
    } else if (key == "integrator.lambda1") c.integrator.lambda1 = real();
    else if (key == "integrator.lambda2") c.integrator.lambda2 = real();
    else if (key == "integrator.eta") c.integrator.eta = real();
    else if (key == "output.betas") c.betas = list_of(cf, key, [](const std::string& s) { return text::parse_double(s); });
    else if (key == "output.workers") g.workers = count();
    else if (key == "output.dir") g.out_dir = one();
    else throw ConfigError(cf.where(key) + ": unknown key '" + key + "'");
  }
  // grid.implication may precede grid.logic in the file.
  if (cf.has("grid.implication")) {
    const auto mode = logic::parse_implication(scalar(cf, "grid.implication"));
    for (auto& l : g.logics) l.implication = mode;
  }
  if (g.workers == 0) throw ConfigError("output.workers must be at least 1");
  return g;
}

/// One (loss, strategy, mechanism, logic) combination; seeds are applied per run.
struct Cell {
  RunConfig cfg;  // seed left at the base value

  std::string loss() const { return cfg.loss_name(); }
  std::string strategy() const { return cfg.loss ? cfg.strategy.name() : "none"; }
  std::size_t k() const {
    return cfg.loss && cfg.strategy.kind == constraint::Strategy::Kind::Sampling ? cfg.strategy.k : 0;
  }
  std::string mechanism() const { return cfg.loss ? integrate::to_string(cfg.integrator.mechanism) : "none"; }
  std::string logic() const { return logic_name(cfg.logic); }
  std::string label() const { return loss() + "/" + strategy() + "/" + mechanism() + "/" + logic(); }
};

struct Expansion {
  std::vector<Cell> cells;
  std::vector<std::string> skipped;  // combinations the task cannot run, with reasons
};

/// Cross product of the axes, minus combinations that are not defined. The
/// baseline ("none") yields one cell per logic, independent of the other axes.
inline Expansion expand(const GridSpec& g, const tasks::Task& task) {
  using constraint::LossType;
  using constraint::Strategy;
  if (g.losses.empty() || g.seeds.empty()) throw ConfigError("grid needs at least one loss and one seed");
  Expansion ex;
  for (const auto& loss : g.losses) {
    if (loss == "none") {
      for (const auto& lk : g.logics) {
        Cell c{g.base};
        c.cfg.loss.reset();
        c.cfg.logic = lk;
        ex.cells.push_back(c);
      }
      continue;
    }
    const auto lt = constraint::parse_loss_type(loss);
    if (lt == LossType::Soft && !task.supports_soft()) {
      ex.skipped.push_back(loss + ": not defined for " + task.name());
      continue;
    }
    for (const auto& s : g.strategies) {
      if (s.kind == Strategy::Kind::Exhaustive && lt != LossType::Soft) {
        ex.skipped.push_back(loss + "/" + s.name() + ": exhaustive exploration is only defined for soft");
        continue;
      }
      if (s.kind == Strategy::Kind::Exhaustive && !task.supports_exhaustive()) {
        ex.skipped.push_back(loss + "/" + s.name() + ": output space of " + task.name() + " is too large to enumerate");
        continue;
      }
      for (auto m : g.mechanisms)
        for (const auto& lk : g.logics) {
          Cell c{g.base};
          c.cfg.loss = lt;
          c.cfg.strategy = s;
          c.cfg.integrator.mechanism = m;
          c.cfg.logic = lk;
          ex.cells.push_back(c);
        }
    }
  }
  for (const auto& c : ex.cells) validate(c.cfg, task);
  return ex;
}

}  // namespace conlearn::harness
