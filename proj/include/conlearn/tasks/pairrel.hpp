#pragma once

#include <array>
#include <istream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "conlearn/constraint/explore.hpp"
#include "conlearn/models/mlp.hpp"
#include "conlearn/softlogic/parser.hpp"
#include "conlearn/tasks/features.hpp"
#include "conlearn/tasks/task.hpp"

namespace conlearn::tasks {

// Relation classes.
inline constexpr int kEnt = 0;
inline constexpr int kCon = 1;
inline constexpr int kNeu = 2;
inline constexpr std::size_t kRelations = 3;
inline const std::array<std::string, kRelations> kRelationNames = {"ent", "con", "neu"};

inline int relation_id(std::string_view name) {
  for (std::size_t i = 0; i < kRelations; ++i)
    if (kRelationNames[i] == name) return static_cast<int>(i);
  throw InputError("unknown relation '" + std::string(name) + "'");
}

/// Each item has latent features z ~ N(0, I); the model sees z + noise.
/// Labels come from the latents: con iff z1[1] + z2[1] > con_threshold
/// (symmetric), otherwise ent iff z2[0] > z1[0], otherwise neu. The reverse of
/// a non-con pair therefore swaps ent and neu, and con stays con.
struct PairGeometry {
  std::size_t dim = 6;
  double noise = 0.6;
  double con_threshold = 0.61;  // about a third of pairs are con
};

inline int pair_relation(const Features& z1, const Features& z2, const PairGeometry& geo) {
  if (z1[1] + z2[1] > geo.con_threshold) return kCon;
  return z2[0] > z1[0] ? kEnt : kNeu;
}

/// Input: both items' observed features, concatenated (first item first).
/// Output: {relation(a,b), relation(b,a)}.
using PairDataset = Dataset<Features, std::vector<int>>;

inline PairDataset gen_pairrel(std::size_t count, const PairGeometry& geo, Rng& rng) {
  if (count == 0) throw ContractViolation("gen_pairrel: count must be positive");
  PairDataset d{"pairrel", 0, {}, {}, {}};
  for (std::size_t n = 0; n < count; ++n) {
    auto z1 = gaussian(rng, geo.dim);
    auto z2 = gaussian(rng, geo.dim);
    Features x;
    for (double v : z1) x.push_back(v + geo.noise * normal(rng));
    for (double v : z2) x.push_back(v + geo.noise * normal(rng));
    d.inputs.push_back(std::move(x));
    d.outputs.push_back({pair_relation(z1, z2, geo), pair_relation(z2, z1, geo)});
  }
  return d;
}

/// R2-R4, each grounded in both orientations. Atom rel(a,b) reads position 0
/// (the forward prediction), rel(b,a) reads position 1.
inline std::vector<constraint::ConstraintSpec> pairrel_specs() {
  const std::array<std::pair<std::string, std::string>, 3> rules = {{
      {"R2", "con(a,b) => con(b,a)"},
      {"R3", "ent(a,b) => !con(b,a)"},
      {"R4", "neu(a,b) => !con(b,a)"},
  }};
  std::vector<constraint::ConstraintSpec> specs;
  for (const auto& [name, text] : rules) {
    auto gs = std::make_shared<const std::vector<logic::Formula>>(std::vector{
        logic::parse_formula(text, {}, {{"a", "a"}, {"b", "b"}}),
        logic::parse_formula(text, {}, {{"a", "b"}, {"b", "a"}}),
    });
    constraint::SymbolicRule rule;
    rule.groundings = [gs](std::size_t) -> const std::vector<logic::Formula>& { return *gs; };
    rule.resolve = [](const std::string& key) {
      const auto open = key.find('(');
      if (open == std::string::npos) throw ContractViolation("malformed relation atom '" + key + "'");
      const auto args = key.substr(open);
      std::size_t pos = 0;
      if (args == "(b,a)")
        pos = 1;
      else if (args != "(a,b)")
        throw ContractViolation("relation atom '" + key + "' must use (a,b) or (b,a)");
      return constraint::AtomRef{pos, static_cast<std::size_t>(relation_id(key.substr(0, open)))};
    };
    specs.push_back({name + ": " + text, std::move(rule), {}});
  }
  return specs;
}

inline void write_pairrel(std::ostream& os, const PairDataset& d) {
  for (std::size_t n = 0; n < d.size(); ++n)
    os << format_features(d.inputs[n]) << '\t' << kRelationNames.at(static_cast<std::size_t>(d.outputs[n][0])) << ' '
       << kRelationNames.at(static_cast<std::size_t>(d.outputs[n][1])) << '\n';
}

inline PairDataset read_pairrel(std::istream& is, std::size_t dim) {
  PairDataset d{"pairrel", 0, {}, {}, {}};
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    auto rel = f.size() == 2 ? text::words(f[1]) : std::vector<std::string>{};
    if (rel.size() != 2)
      throw InputError("pairrel data line " + std::to_string(n) + ": expected features<TAB>fwd rev");
    d.inputs.push_back(parse_features(f[0], 2 * dim));
    d.outputs.push_back({relation_id(rel[0]), relation_id(rel[1])});
  }
  return d;
}

/// Three-way relation classification of ordered pairs; each pair is scored in
/// both orientations by the same softmax MLP. Accuracy is over orientations.
class PairRelTask : public Task {
 public:
  static constexpr std::size_t kDefaultTrain = 300;
  static constexpr std::size_t kDefaultTest = 1000;
  static constexpr std::size_t kDefaultPool = 1000;

  explicit PairRelTask(const TaskOptions& opt, PairGeometry geo = {})
      : geo_(geo), model_({2 * geo.dim, 32, kRelations, models::Head::Softmax}), specs_(pairrel_specs()) {
    auto tr = detail::data_stream(opt.data_seed, detail::kTrainStream);
    auto te = detail::data_stream(opt.data_seed, detail::kTestStream);
    auto po = detail::data_stream(opt.data_seed, detail::kPoolStream);
    train_ = gen_pairrel(detail::or_default(opt.train, kDefaultTrain), geo_, tr);
    test_ = gen_pairrel(detail::or_default(opt.test, kDefaultTest), geo_, te);
    train_.seed = test_.seed = opt.data_seed;
    const std::size_t pool = opt.unlabeled_set ? opt.unlabeled : kDefaultPool;
    if (pool > 0) train_.unlabeled = gen_pairrel(pool, geo_, po).inputs;
  }

  std::string name() const override { return "pairrel"; }
  metrics::MetricKind metric() const override { return metrics::MetricKind::Accuracy; }
  const std::vector<constraint::ConstraintSpec>& specs() const override { return specs_; }

  ad::ParamSet init_params(Rng& rng) const override { return model_.init(rng, 0.2); }
  std::size_t train_size() const override { return train_.size(); }
  std::size_t pool_size() const override { return train_.size() + train_.unlabeled.size(); }

  /// Mean cross-entropy over both orientations of every pair.
  ad::Var supervised_loss(ad::Graph& g, const models::Bound& p, std::span<const std::size_t> idx) const override {
    std::vector<Features> xs;
    std::vector<std::size_t> gold;
    for (auto i : idx) {
      xs.push_back(train_.inputs.at(i));
      for (int r : train_.outputs[i]) gold.push_back(static_cast<std::size_t>(r));
    }
    auto z = model_.logits(g, p, oriented(g, xs));
    const double n = static_cast<double>(gold.size());
    return g.scale(g.sum(g.pick(g.log_softmax(z), std::move(gold))), -1.0 / n);
  }

  std::unique_ptr<constraint::OutputSource> constraint_source(ad::Graph& g, const models::Bound& p,
                                                              std::span<const std::size_t> idx) const override {
    std::vector<Features> xs;
    for (auto i : idx) xs.push_back(i < train_.size() ? train_.inputs[i] : train_.unlabeled.at(i - train_.size()));
    models::FactoredOutput out;
    out.probs = model_.probabilities(g, p, oriented(g, xs));
    out.classes = kRelations;
    for (std::size_t e = 0; e < xs.size(); ++e) out.rows.push_back({2 * e, 2 * e + 1});
    return std::make_unique<constraint::FactoredSource>(g, std::move(out));
  }

  Evaluation evaluate(const ad::ParamSet& params) const override {
    auto pred = predict(params, test_.inputs);
    std::vector<std::vector<int>> p1, g1;
    for (std::size_t n = 0; n < pred.size(); ++n)
      for (std::size_t o = 0; o < 2; ++o) {
        p1.push_back({pred[n][o]});
        g1.push_back({test_.outputs[n][o]});
      }
    return {metrics::accuracy(p1, g1), metrics::violation_rate(specs_, std::vector<std::vector<int>>(pred.size()), pred),
            pred.size()};
  }

  /// Argmax relation for both orientations.
  std::vector<std::vector<int>> predict(const ad::ParamSet& params, const std::vector<Features>& xs) const {
    ad::Graph g;
    auto b = g.bind(params);
    const auto& probs = g.value(model_.probabilities(g, b, oriented(g, xs)));
    std::vector<std::vector<int>> out;
    for (std::size_t e = 0; e < xs.size(); ++e) {
      std::vector<int> y;
      for (std::size_t o = 0; o < 2; ++o) {
        const double* row = probs.data.data() + (2 * e + o) * kRelations;
        y.push_back(static_cast<int>(std::max_element(row, row + kRelations) - row));
      }
      out.push_back(std::move(y));
    }
    return out;
  }

  void write_data(std::ostream& train, std::ostream& test, std::ostream& unlabeled) const override {
    write_pairrel(train, train_);
    write_pairrel(test, test_);
    for (const auto& x : train_.unlabeled) unlabeled << format_features(x) << '\n';
  }

  const PairDataset& train() const { return train_; }
  const PairDataset& test() const { return test_; }
  const PairGeometry& geometry() const { return geo_; }

 private:
  /// Rows 2e and 2e+1 hold pair e as (a,b) and (b,a).
  ad::Var oriented(ad::Graph& g, const std::vector<Features>& xs) const {
    std::vector<Features> rows;
    for (const auto& x : xs) {
      if (x.size() != 2 * geo_.dim) throw InputError("pair features must have length " + std::to_string(2 * geo_.dim));
      rows.push_back(x);
      Features rev(x.begin() + static_cast<std::ptrdiff_t>(geo_.dim), x.end());
      rev.insert(rev.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(geo_.dim));
      rows.push_back(std::move(rev));
    }
    return models::features_constant(g, rows);
  }

  PairGeometry geo_;
  models::Mlp model_;
  PairDataset train_, test_;
  std::vector<constraint::ConstraintSpec> specs_;
};

}  // namespace conlearn::tasks
