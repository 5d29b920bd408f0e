#pragma once

#include <array>
#include <cmath>
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

// Two-level label tree: label p (0..3) is a parent, label 4+p its only child.
inline constexpr std::size_t kHierParents = 4;
inline constexpr std::size_t kHierLabels = 2 * kHierParents;
inline const std::array<std::string, kHierLabels> kHierNames = {
    "fiction", "science", "history", "art", "science_fiction", "physics", "medieval", "painting"};

inline std::size_t hier_label_index(std::string_view name) {
  for (std::size_t i = 0; i < kHierLabels; ++i)
    if (kHierNames[i] == name) return i;
  throw InputError("unknown hierarchy label '" + std::string(name) + "'");
}

/// Cluster geometry. A parent-only example sits near parent_gain * u_p; an
/// example that also carries the child sits near child_parent_gain * u_p +
/// child_gain * v_p, so the parent cue is weaker exactly where the child is on.
struct HierGeometry {
  std::size_t dim = 16;
  double parent_gain = 1.0;
  double child_parent_gain = 0.35;
  double child_gain = 1.0;
  double noise = 0.3;
  double child_rate = 0.5;
};

struct HierLayout {
  HierGeometry geo;
  std::vector<Features> parent_dir, child_dir;  // unit vectors
};

inline HierLayout make_hier_layout(const HierGeometry& geo, Rng& rng) {
  HierLayout l{geo, {}, {}};
  auto unit = [&] {
    auto v = gaussian(rng, geo.dim);
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
  };
  for (std::size_t p = 0; p < kHierParents; ++p) {
    l.parent_dir.push_back(unit());
    l.child_dir.push_back(unit());
  }
  return l;
}

using HierDataset = Dataset<Features, std::vector<int>>;

/// Each example has one parent label; with probability child_rate also its child.
inline HierDataset gen_hierlabel(std::size_t count, const HierLayout& layout, Rng& rng) {
  if (count == 0) throw ContractViolation("gen_hierlabel: count must be positive");
  const auto& geo = layout.geo;
  HierDataset d{"hierlabel", 0, {}, {}, {}};
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(kHierParents) - 1));
    const bool child = uniform01(rng) < geo.child_rate;
    auto x = gaussian(rng, geo.dim, geo.noise);
    for (std::size_t j = 0; j < geo.dim; ++j)
      x[j] += child ? geo.child_parent_gain * layout.parent_dir[p][j] + geo.child_gain * layout.child_dir[p][j]
                    : geo.parent_gain * layout.parent_dir[p][j];
    std::vector<int> y(kHierLabels, 0);
    y[p] = 1;
    if (child) y[kHierParents + p] = 1;
    d.inputs.push_back(std::move(x));
    d.outputs.push_back(std::move(y));
  }
  return d;
}

/// One "child => parent" rule per parent; atoms are label names.
inline std::vector<constraint::ConstraintSpec> hierlabel_specs() {
  std::vector<constraint::ConstraintSpec> specs;
  for (std::size_t p = 0; p < kHierParents; ++p) {
    const std::string text = kHierNames[kHierParents + p] + " => " + kHierNames[p];
    auto gs = std::make_shared<const std::vector<logic::Formula>>(std::vector{logic::parse_formula(text)});
    constraint::SymbolicRule rule;
    rule.groundings = [gs](std::size_t) -> const std::vector<logic::Formula>& { return *gs; };
    rule.resolve = [](const std::string& key) { return constraint::AtomRef{hier_label_index(key), 1}; };
    specs.push_back({text, std::move(rule), {}});
  }
  return specs;
}

inline std::string format_labels(const std::vector<int>& y) {
  std::string out;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i]) out += (out.empty() ? "" : ",") + kHierNames.at(i);
  return out.empty() ? "-" : out;
}

inline std::vector<int> parse_labels(std::string_view s) {
  std::vector<int> y(kHierLabels, 0);
  if (text::trim(s) == "-") return y;
  for (const auto& name : text::split(s, ',')) y[hier_label_index(text::trim(name))] = 1;
  return y;
}

inline void write_hierlabel(std::ostream& os, const HierDataset& d) {
  for (std::size_t i = 0; i < d.size(); ++i) os << format_features(d.inputs[i]) << '\t' << format_labels(d.outputs[i]) << '\n';
}

inline HierDataset read_hierlabel(std::istream& is, std::size_t dim) {
  HierDataset d{"hierlabel", 0, {}, {}, {}};
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    if (f.size() != 2) throw InputError("hierlabel data line " + std::to_string(n) + ": expected features<TAB>labels");
    d.inputs.push_back(parse_features(f[0], dim));
    d.outputs.push_back(parse_labels(f[1]));
  }
  return d;
}

/// Multilabel classification under the hierarchy; sigmoid-head MLP, subset accuracy.
class HierLabelTask : public Task {
 public:
  static constexpr std::size_t kDefaultTrain = 400;
  static constexpr std::size_t kDefaultTest = 1000;
  static constexpr std::size_t kDefaultPool = 1000;

  explicit HierLabelTask(const TaskOptions& opt, HierGeometry geo = {})
      : model_({geo.dim, 32, kHierLabels, models::Head::Sigmoid}), specs_(hierlabel_specs()) {
    auto lay = detail::data_stream(opt.data_seed, detail::kLayoutStream);
    auto tr = detail::data_stream(opt.data_seed, detail::kTrainStream);
    auto te = detail::data_stream(opt.data_seed, detail::kTestStream);
    auto po = detail::data_stream(opt.data_seed, detail::kPoolStream);
    layout_ = make_hier_layout(geo, lay);
    train_ = gen_hierlabel(detail::or_default(opt.train, kDefaultTrain), layout_, tr);
    test_ = gen_hierlabel(detail::or_default(opt.test, kDefaultTest), layout_, te);
    train_.seed = test_.seed = opt.data_seed;
    const std::size_t pool = opt.unlabeled_set ? opt.unlabeled : kDefaultPool;
    if (pool > 0) train_.unlabeled = gen_hierlabel(pool, layout_, po).inputs;
  }

  std::string name() const override { return "hierlabel"; }
  metrics::MetricKind metric() const override { return metrics::MetricKind::Accuracy; }
  const std::vector<constraint::ConstraintSpec>& specs() const override { return specs_; }

  ad::ParamSet init_params(Rng& rng) const override { return model_.init(rng, 0.2); }
  std::size_t train_size() const override { return train_.size(); }
  std::size_t pool_size() const override { return train_.size() + train_.unlabeled.size(); }

  /// Mean binary cross-entropy over all (example, label) cells.
  ad::Var supervised_loss(ad::Graph& g, const models::Bound& p, std::span<const std::size_t> idx) const override {
    std::vector<Features> xs;
    std::vector<std::size_t> gold;
    for (auto i : idx) {
      xs.push_back(train_.inputs.at(i));
      for (int v : train_.outputs[i]) gold.push_back(static_cast<std::size_t>(v));
    }
    const std::size_t cells = gold.size();
    auto z = g.reshape(model_.logits(g, p, models::features_constant(g, xs)), {cells, 1});
    auto pair = g.concat({g.constant(ad::Tensor({cells, 1})), z});  // log-odds of {off, on}
    return g.scale(g.sum(g.pick(g.log_softmax(pair), std::move(gold))), -1.0 / static_cast<double>(cells));
  }

  std::unique_ptr<constraint::OutputSource> constraint_source(ad::Graph& g, const models::Bound& p,
                                                              std::span<const std::size_t> idx) const override {
    std::vector<Features> xs;
    for (auto i : idx) xs.push_back(i < train_.size() ? train_.inputs[i] : train_.unlabeled.at(i - train_.size()));
    return std::make_unique<constraint::FactoredSource>(g, forward(g, p, xs));
  }

  Evaluation evaluate(const ad::ParamSet& params) const override {
    auto pred = predict(params, test_.inputs);
    return {metrics::accuracy(pred, test_.outputs),
            metrics::violation_rate(specs_, std::vector<std::vector<int>>(pred.size()), pred), pred.size()};
  }

  /// Thresholds each label's probability at 0.5.
  std::vector<std::vector<int>> predict(const ad::ParamSet& params, const std::vector<Features>& xs) const {
    ad::Graph g;
    auto b = g.bind(params);
    const auto& probs = g.value(model_.probabilities(g, b, models::features_constant(g, xs)));
    std::vector<std::vector<int>> out(xs.size(), std::vector<int>(kHierLabels, 0));
    for (std::size_t e = 0; e < xs.size(); ++e)
      for (std::size_t c = 0; c < kHierLabels; ++c) out[e][c] = probs.at(e, c) >= 0.5 ? 1 : 0;
    return out;
  }

  void write_data(std::ostream& train, std::ostream& test, std::ostream& unlabeled) const override {
    write_hierlabel(train, train_);
    write_hierlabel(test, test_);
    for (const auto& x : train_.unlabeled) unlabeled << format_features(x) << '\n';
  }

  const HierDataset& train() const { return train_; }
  const HierDataset& test() const { return test_; }

 private:
  models::FactoredOutput forward(ad::Graph& g, const models::Bound& p, const std::vector<Features>& xs) const {
    models::FactoredOutput out;
    out.probs = models::Mlp::binary_rows(g, model_.probabilities(g, p, models::features_constant(g, xs)));
    out.classes = 2;
    for (std::size_t e = 0; e < xs.size(); ++e) {
      out.rows.emplace_back();
      for (std::size_t c = 0; c < kHierLabels; ++c) out.rows.back().push_back(e * kHierLabels + c);
    }
    return out;
  }

  models::Mlp model_;
  HierLayout layout_;
  HierDataset train_, test_;
  std::vector<constraint::ConstraintSpec> specs_;
};

}  // namespace conlearn::tasks
