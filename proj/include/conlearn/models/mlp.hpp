#pragma once

#include <cstddef>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/models/lstm.hpp"
#include "conlearn/models/output.hpp"

namespace conlearn::models {

enum class Head { Softmax, Sigmoid };

struct MlpConfig {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t classes = 0;
  Head head = Head::Softmax;
};

/// One tanh hidden layer followed by a softmax or per-class sigmoid head.
class Mlp {
 public:
  explicit Mlp(MlpConfig cfg) : cfg_(cfg) {}

  const MlpConfig& config() const { return cfg_; }

  ad::ParamSet init(Rng& rng, double scale = 0.08) const {
    ad::ParamSet p;
    p.add("mlp.W1", ad::Tensor({cfg_.input, cfg_.hidden}));
    p.add("mlp.b1", ad::Tensor({cfg_.hidden}));
    p.add("mlp.W2", ad::Tensor({cfg_.hidden, cfg_.classes}));
    p.add("mlp.b2", ad::Tensor({cfg_.classes}));
    ad::init_uniform(p, rng, scale);
    return p;
  }

  /// [batch, input] -> [batch, classes] logits.
  ad::Var logits(ad::Graph& g, const Bound& p, ad::Var features) const {
    const auto& x = g.value(features);
    if (x.rank() != 2 || x.shape[1] != cfg_.input)
      throw ContractViolation("mlp: feature width " + ad::shape_str(x.shape) + " does not match input " +
                              std::to_string(cfg_.input));
    auto h = g.tanh(g.add_bias(g.matmul(features, bound(p, "mlp.W1")), bound(p, "mlp.b1")));
    return g.add_bias(g.matmul(h, bound(p, "mlp.W2")), bound(p, "mlp.b2"));
  }

  /// Softmax head: row distributions. Sigmoid head: independent P(class on).
  ad::Var probabilities(ad::Graph& g, const Bound& p, ad::Var features) const {
    auto z = logits(g, p, features);
    return cfg_.head == Head::Softmax ? g.softmax(z) : g.sigmoid(z);
  }

  /// Sigmoid head as one 2-way {off, on} distribution per (example, class): [batch*classes, 2].
  static ad::Var binary_rows(ad::Graph& g, ad::Var on_probs) {
    const std::size_t n = g.value(on_probs).size();
    auto on = g.reshape(on_probs, {n, 1});
    return g.concat({g.one_minus(on), on});
  }

 private:
  MlpConfig cfg_;
};

inline ad::Var features_constant(ad::Graph& g, const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ContractViolation("empty feature batch");
  const std::size_t w = rows.front().size();
  ad::Tensor t({rows.size(), w});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != w) throw ContractViolation("ragged feature batch");
    std::copy(rows[r].begin(), rows[r].end(), t.data.begin() + static_cast<std::ptrdiff_t>(r * w));
  }
  return g.constant(std::move(t));
}

/// Single-example forward. Softmax head -> one position over `classes`;
/// sigmoid head -> `classes` positions, each a {off, on} distribution.
inline FactoredOutput mlp_forward(ad::Graph& g, const Mlp& model, const Bound& p, const std::vector<double>& features) {
  if (features.size() != model.config().input)
    throw ContractViolation("mlp: feature length " + std::to_string(features.size()) + " != " +
                            std::to_string(model.config().input));
  auto probs = model.probabilities(g, p, features_constant(g, {features}));
  FactoredOutput out;
  if (model.config().head == Head::Softmax) {
    out.probs = probs;
    out.classes = model.config().classes;
    out.rows = {{0}};
  } else {
    out.probs = Mlp::binary_rows(g, probs);
    out.classes = 2;
    out.rows.emplace_back();
    for (std::size_t c = 0; c < model.config().classes; ++c) out.rows[0].push_back(c);
  }
  return out;
}

}  // namespace conlearn::models
