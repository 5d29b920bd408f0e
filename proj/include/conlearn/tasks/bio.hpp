#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "conlearn/constraint/explore.hpp"
#include "conlearn/models/tagger.hpp"
#include "conlearn/models/vocab.hpp"
#include "conlearn/softlogic/parser.hpp"
#include "conlearn/tasks/task.hpp"
#include "conlearn/text.hpp"

namespace conlearn::tasks {

// Tag ids: O = 0, B_X = 1 + 2X, I_X = 2 + 2X for core roles X = 0..3.
inline constexpr int kBioRoles = 4;
inline constexpr int kBioTags = 1 + 2 * kBioRoles;
inline constexpr int bio_begin(int role) { return 1 + 2 * role; }
inline constexpr int bio_inside(int role) { return 2 + 2 * role; }

inline std::string bio_tag_name(int tag) {
  if (tag == 0) return "O";
  if (tag < 0 || tag >= kBioTags) throw InputError("tag id " + std::to_string(tag) + " out of range");
  return std::string((tag - 1) % 2 == 0 ? "B" : "I") + std::to_string((tag - 1) / 2);
}

inline int bio_tag_id(std::string_view name) {
  for (int t = 0; t < kBioTags; ++t)
    if (bio_tag_name(t) == name) return t;
  throw InputError("unknown tag '" + std::string(name) + "'");
}

/// Sum over roles of the surplus B_X occurrences, divided by sequence length.
inline double bio_violation(std::span<const int> tags) {
  if (tags.empty()) return 0.0;
  int surplus = 0;
  for (int x = 0; x < kBioRoles; ++x) {
    const auto c = std::count(tags.begin(), tags.end(), bio_begin(x));
    surplus += static_cast<int>(std::max<std::ptrdiff_t>(0, c - 1));
  }
  return static_cast<double>(surplus) / static_cast<double>(tags.size());
}

/// Generator knobs. A token inside a role-X span is one of X's words with
/// probability `cue`, one of another role's words with probability `confuse`,
/// and otherwise a noise word; O positions always get noise words. B_X and I_X
/// share the role words, so span starts and roles must come from context.
struct BioGeometry {
  int min_len = 6;
  int max_len = 12;
  int max_roles = 3;
  int max_span = 4;
  int role_words = 4;
  int noise_words = 12;
  double cue = 0.7;
  double confuse = 0.2;
};

inline std::vector<std::string> bio_words(const BioGeometry& geo) {
  std::vector<std::string> w;
  for (int x = 0; x < kBioRoles; ++x)
    for (int k = 0; k < geo.role_words; ++k) w.push_back("r" + std::to_string(x) + "w" + std::to_string(k));
  for (int k = 0; k < geo.noise_words; ++k) w.push_back("n" + std::to_string(k));
  return w;
}

/// Inputs are word-id sequences under `vocab`; outputs are aligned tag ids.
using BioDataset = Dataset<std::vector<int>, std::vector<int>>;

inline BioDataset gen_bio(std::size_t count, const BioGeometry& geo, const models::Vocab& vocab, Rng& rng) {
  if (count == 0) throw ContractViolation("gen_bio: count must be positive");
  if (geo.min_len < 1 || geo.max_len < geo.min_len) throw ConfigError("gen_bio: bad length range");
  auto noise = [&] { return vocab.id("n" + std::to_string(uniform_int(rng, 0, geo.noise_words - 1))); };
  BioDataset d{"bio", 0, {}, {}, {}};
  for (std::size_t n = 0; n < count; ++n) {
    const int len = uniform_int(rng, geo.min_len, geo.max_len);
    std::vector<int> tags(static_cast<std::size_t>(len), 0);
    std::vector<int> roles(kBioRoles);
    for (int x = 0; x < kBioRoles; ++x) roles[static_cast<std::size_t>(x)] = x;
    shuffle(rng, roles);
    const int nroles = uniform_int(rng, 1, geo.max_roles);
    for (int r = 0; r < nroles; ++r) {
      const int span = std::min(uniform_int(rng, 1, geo.max_span), len);
      // A few placement attempts; a role that does not fit is left out.
      for (int attempt = 0; attempt < 8; ++attempt) {
        const int start = uniform_int(rng, 0, len - span);
        bool free = true;
        for (int t = start; t < start + span; ++t) free = free && tags[static_cast<std::size_t>(t)] == 0;
        if (!free) continue;
        const int x = roles[static_cast<std::size_t>(r)];
        tags[static_cast<std::size_t>(start)] = bio_begin(x);
        for (int t = start + 1; t < start + span; ++t) tags[static_cast<std::size_t>(t)] = bio_inside(x);
        break;
      }
    }
    std::vector<int> words;
    auto role_word = [&](int x) {
      return vocab.id("r" + std::to_string(x) + "w" + std::to_string(uniform_int(rng, 0, geo.role_words - 1)));
    };
    for (int tag : tags) {
      const double u = tag == 0 ? 1.0 : uniform01(rng);
      const int x = (tag - 1) / 2;
      if (u < geo.cue)
        words.push_back(role_word(x));
      else if (u < geo.cue + geo.confuse)
        words.push_back(role_word((x + uniform_int(rng, 1, kBioRoles - 1)) % kBioRoles));
      else
        words.push_back(noise());
    }
    d.inputs.push_back(std::move(words));
    d.outputs.push_back(std::move(tags));
  }
  return d;
}

/// Unique core roles: B_X(i) => no other B_X, grounded for every role X and
/// position i of a sequence of length L. Atoms are B<X>(<i>).
class BioGroundings {
 public:
  explicit BioGroundings(int max_len) {
    for (int len = 1; len <= max_len; ++len) {
      logic::Domains dom;
      for (int j = 0; j < len; ++j) dom["S"].push_back(std::to_string(j));
      std::vector<logic::Formula> fs;
      for (int x = 0; x < kBioRoles; ++x)
        for (int i = 0; i < len; ++i) {
          const std::string b = "B" + std::to_string(x);
          fs.push_back(logic::parse_formula(b + "(i) => forall j in S \\ {i} : !" + b + "(j)", dom,
                                            {{"i", std::to_string(i)}}));
        }
      by_len_.push_back(std::move(fs));
    }
  }

  const std::vector<logic::Formula>& at(std::size_t len) const {
    if (len == 0 || len > by_len_.size())
      throw ContractViolation("no unique-role groundings for length " + std::to_string(len));
    return by_len_[len - 1];
  }

  static constraint::AtomRef resolve(const std::string& key) {
    // "B<X>(<i>)"
    const auto open = key.find('(');
    if (key.size() < 5 || key[0] != 'B' || open == std::string::npos || key.back() != ')')
      throw ContractViolation("malformed role atom '" + key + "'");
    const auto x = static_cast<int>(text::parse_int(std::string_view(key).substr(1, open - 1)));
    const auto i = text::parse_int(std::string_view(key).substr(open + 1, key.size() - open - 2));
    if (x < 0 || x >= kBioRoles || i < 0) throw ContractViolation("role atom '" + key + "' out of range");
    return {static_cast<std::size_t>(i), static_cast<std::size_t>(bio_begin(x))};
  }

 private:
  std::vector<std::vector<logic::Formula>> by_len_;
};

inline constraint::ConstraintSpec bio_spec(int max_len) {
  auto gs = std::make_shared<const BioGroundings>(max_len);
  constraint::SymbolicRule rule;
  rule.groundings = [gs](std::size_t len) -> const std::vector<logic::Formula>& { return gs->at(len); };
  rule.resolve = &BioGroundings::resolve;
  return {"unique-core-roles", std::move(rule),
          [](std::span<const int>, std::span<const int> out) { return bio_violation(out); }};
}

inline void write_bio(std::ostream& os, const BioDataset& d, const models::Vocab& vocab) {
  for (std::size_t n = 0; n < d.size(); ++n) {
    os << text::join(d.inputs[n], " ", [&](int w) { return vocab.token(w); }) << '\t'
       << text::join(d.outputs[n], " ", [](int t) { return bio_tag_name(t); }) << '\n';
  }
}

inline BioDataset read_bio(std::istream& is, const models::Vocab& vocab) {
  BioDataset d{"bio", 0, {}, {}, {}};
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 2) throw InputError("bio data line " + std::to_string(n) + ": expected words<TAB>tags");
    std::vector<int> w, t;
    for (const auto& s : text::words(f[0])) w.push_back(vocab.id(s));
    for (const auto& s : text::words(f[1])) t.push_back(bio_tag_id(s));
    if (w.size() != t.size() || w.empty())
      throw InputError("bio data line " + std::to_string(n) + ": word and tag counts differ");
    d.inputs.push_back(std::move(w));
    d.outputs.push_back(std::move(t));
  }
  return d;
}

/// Role tagging with a left-to-right LSTM; token-level micro-F1 over non-O tags.
class BioTask : public Task {
 public:
  static constexpr std::size_t kDefaultTrain = 1500;
  static constexpr std::size_t kDefaultTest = 1000;
  static constexpr double kDefaultPoolFraction = 0.03;

  explicit BioTask(const TaskOptions& opt, BioGeometry geo = {})
      : geo_(geo), vocab_(bio_words(geo)), model_({vocab_.size(), kBioTags, 32, 64}) {
    auto tr = detail::data_stream(opt.data_seed, detail::kTrainStream);
    auto te = detail::data_stream(opt.data_seed, detail::kTestStream);
    auto po = detail::data_stream(opt.data_seed, detail::kPoolStream);
    train_ = gen_bio(detail::or_default(opt.train, kDefaultTrain), geo_, vocab_, tr);
    test_ = gen_bio(detail::or_default(opt.test, kDefaultTest), geo_, vocab_, te);
    train_.seed = test_.seed = opt.data_seed;
    const std::size_t pool =
        opt.unlabeled_set ? opt.unlabeled
                          : std::max<std::size_t>(1, static_cast<std::size_t>(kDefaultPoolFraction *
                                                                              static_cast<double>(train_.size())));
    if (pool > 0) train_.unlabeled = gen_bio(pool, geo_, vocab_, po).inputs;
    specs_.push_back(bio_spec(geo_.max_len));
  }

  std::string name() const override { return "bio"; }
  bool supports_exhaustive() const override { return false; }
  metrics::MetricKind metric() const override { return metrics::MetricKind::F1; }
  const std::vector<constraint::ConstraintSpec>& specs() const override { return specs_; }

  ad::ParamSet init_params(Rng& rng) const override { return model_.init(rng); }
  std::size_t train_size() const override { return train_.size(); }
  std::size_t pool_size() const override { return train_.size() + train_.unlabeled.size(); }

  ad::Var supervised_loss(ad::Graph& g, const models::Bound& p, std::span<const std::size_t> idx) const override {
    std::vector<std::vector<int>> xs, ys;
    for (auto i : idx) {
      xs.push_back(train_.inputs.at(i));
      ys.push_back(train_.outputs[i]);
    }
    return model_.supervised_loss(g, p, xs, ys);
  }

  std::unique_ptr<constraint::OutputSource> constraint_source(ad::Graph& g, const models::Bound& p,
                                                              std::span<const std::size_t> idx) const override {
    std::vector<std::vector<int>> xs;
    for (auto i : idx) xs.push_back(i < train_.size() ? train_.inputs[i] : train_.unlabeled.at(i - train_.size()));
    auto out = model_.forward(g, p, xs);
    return std::make_unique<constraint::FactoredSource>(g, std::move(out), std::move(xs));
  }

  Evaluation evaluate(const ad::ParamSet& params) const override {
    auto pred = predict(params, test_.inputs);
    return {metrics::tag_f1(pred, test_.outputs), metrics::violation_rate(specs_, test_.inputs, pred), pred.size()};
  }

  /// Per-position argmax tags.
  std::vector<std::vector<int>> predict(const ad::ParamSet& params, const std::vector<std::vector<int>>& xs) const {
    std::vector<std::vector<int>> out;
    constexpr std::size_t kChunk = 250;
    for (std::size_t s = 0; s < xs.size(); s += kChunk) {
      std::vector<std::vector<int>> part(xs.begin() + static_cast<std::ptrdiff_t>(s),
                                         xs.begin() + static_cast<std::ptrdiff_t>(std::min(xs.size(), s + kChunk)));
      ad::Graph g;
      auto b = g.bind(params);
      auto fo = model_.forward(g, b, part);
      const auto& probs = g.value(fo.probs);
      for (const auto& rows : fo.rows) {
        std::vector<int> tags;
        for (auto r : rows) {
          const double* row = probs.data.data() + r * kBioTags;
          tags.push_back(static_cast<int>(std::max_element(row, row + kBioTags) - row));
        }
        out.push_back(std::move(tags));
      }
    }
    return out;
  }

  void write_data(std::ostream& train, std::ostream& test, std::ostream& unlabeled) const override {
    write_bio(train, train_, vocab_);
    write_bio(test, test_, vocab_);
    for (const auto& x : train_.unlabeled)
      unlabeled << text::join(x, " ", [&](int w) { return vocab_.token(w); }) << '\n';
  }

  const BioDataset& train() const { return train_; }
  const BioDataset& test() const { return test_; }
  const models::Vocab& vocab() const { return vocab_; }

 private:
  BioGeometry geo_;
  models::Vocab vocab_;
  models::Tagger model_;
  BioDataset train_, test_;
  std::vector<constraint::ConstraintSpec> specs_;
};

}  // namespace conlearn::tasks
