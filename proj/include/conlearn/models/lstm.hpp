#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/params.hpp"

namespace conlearn::models {

using Bound = std::unordered_map<std::string, ad::Var>;

inline ad::Var bound(const Bound& b, const std::string& name) {
  auto it = b.find(name);
  if (it == b.end()) throw ContractViolation("parameter '" + name + "' not bound on this graph");
  return it->second;
}

struct LstmState {
  ad::Var h;
  ad::Var c;
};

/// Single-layer LSTM with fused gate weights [input+hidden, 4*hidden], gate order i, f, g, o.
struct LstmCell {
  std::string prefix;
  std::size_t input = 0;
  std::size_t hidden = 0;

  void add_params(ad::ParamSet& p) const {
    p.add(prefix + ".W", ad::Tensor({input + hidden, 4 * hidden}));
    p.add(prefix + ".b", ad::Tensor({4 * hidden}));
  }

  LstmState zero_state(ad::Graph& g, std::size_t batch) const {
    return {g.constant(ad::Tensor({batch, hidden})), g.constant(ad::Tensor({batch, hidden}))};
  }

  LstmState step(ad::Graph& g, const Bound& p, ad::Var x, const LstmState& s) const {
    auto z = g.add_bias(g.matmul(g.concat({x, s.h}), bound(p, prefix + ".W")), bound(p, prefix + ".b"));
    auto i = g.sigmoid(g.slice_cols(z, 0, hidden));
    auto f = g.sigmoid(g.slice_cols(z, hidden, hidden));
    auto u = g.tanh(g.slice_cols(z, 2 * hidden, hidden));
    auto o = g.sigmoid(g.slice_cols(z, 3 * hidden, hidden));
    auto c = g.add(g.mul(f, s.c), g.mul(i, u));
    return {g.mul(o, g.tanh(c)), c};
  }
};

/// Keep `next` on rows where active[r] is set, `prev` elsewhere.
inline LstmState masked_update(ad::Graph& g, const LstmState& prev, const LstmState& next,
                               const std::vector<bool>& active, std::size_t hidden) {
  bool all = true;
  for (bool a : active) all = all && a;
  if (all) return next;
  ad::Tensor m({active.size(), hidden});
  for (std::size_t r = 0; r < active.size(); ++r)
    if (active[r])
      for (std::size_t j = 0; j < hidden; ++j) m.at(r, j) = 1.0;
  auto mask = g.constant(std::move(m));
  auto blend = [&](ad::Var a, ad::Var b) { return g.add(a, g.mul(mask, g.sub(b, a))); };
  return {blend(prev.h, next.h), blend(prev.c, next.c)};
}

/// Rows of an embedding table for a batch of token ids.
inline ad::Var embed(ad::Graph& g, ad::Var table, const std::vector<int>& ids) {
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return g.gather_rows(table, std::move(rows));
}

}  // namespace conlearn::models
