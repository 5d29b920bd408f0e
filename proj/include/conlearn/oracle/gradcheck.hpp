#pragma once

// Central finite-difference oracle for the autodiff engine, used by the tests
// and the self-test. It rebuilds the graph from scratch for every perturbation
// and never looks at adjoints.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/random.hpp"

namespace conlearn::oracle {

using ad::Graph;
using ad::Tensor;
using ad::Var;

/// Builds a scalar loss from leaf inputs.
using LossBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::vector<Tensor> analytic;
  std::vector<Tensor> numeric;
};

inline double loss_at(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < inputs.size(); ++i) leaves.push_back(g.leaf("x" + std::to_string(i), inputs[i]));
  return g.scalar_value(build(g, leaves));
}

inline std::vector<Tensor> numeric_gradient(const LossBuilder& build, std::vector<Tensor> inputs,
                                            double step = 1e-5) {
  std::vector<Tensor> out;
  for (auto& t : inputs) {
    Tensor grad(t.shape);
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double orig = t.data[j];
      t.data[j] = orig + step;
      const double up = loss_at(build, inputs);
      t.data[j] = orig - step;
      const double down = loss_at(build, inputs);
      t.data[j] = orig;
      grad.data[j] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(grad));
  }
  return out;
}

inline std::vector<Tensor> analytic_gradient(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  Graph g;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < inputs.size(); ++i) leaves.push_back(g.leaf("x" + std::to_string(i), inputs[i]));
  auto grads = g.backward(build(g, leaves));
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < grads.size(); ++i) out.push_back(grads.tensor(i));
  return out;
}

/// Norm-wise relative error ||a - n|| / max(||a||, ||n||, floor), worst over inputs.
inline GradCheckResult gradcheck(const LossBuilder& build, const std::vector<Tensor>& inputs) {
  GradCheckResult r;
  r.analytic = analytic_gradient(build, inputs);
  r.numeric = numeric_gradient(build, inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t j = 0; j < r.analytic[i].size(); ++j) {
      const double a = r.analytic[i].data[j];
      const double n = r.numeric[i].data[j];
      diff += (a - n) * (a - n);
      na += a * a;
      nn += n * n;
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-8});
    r.max_relative_error = std::max(r.max_relative_error, std::sqrt(diff) / denom);
  }
  return r;
}

inline Tensor random_tensor(Rng& rng, ad::Shape shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = uniform(rng, lo, hi);
  return t;
}

struct OpCase {
  std::string name;
  /// Generates inputs and a loss builder for one random composite graph.
  std::function<std::pair<std::vector<Tensor>, LossBuilder>(Rng&)> make;
};

/// One entry per differentiable op. Each graph composes the op with tanh and a
/// random weighted sum; inputs stay away from log/div singularities and from
/// min/max ties.
inline std::vector<OpCase> op_catalog() {
  using Pair = std::pair<std::vector<Tensor>, LossBuilder>;
  auto dims = [](Rng& rng) {
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(uniform_int(rng, 1, 4)),
                                               static_cast<std::size_t>(uniform_int(rng, 2, 5)));
  };
  auto elementwise2 = [dims](const std::string& name, double lo, double hi, auto op) {
    return OpCase{name, [=](Rng& rng) -> Pair {
                    auto [m, n] = dims(rng);
                    std::vector<Tensor> in{random_tensor(rng, {m, n}, -1.0, 1.0), random_tensor(rng, {m, n}, lo, hi)};
                    Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                    return {in, [=](Graph& g, const std::vector<Var>& x) {
                              return g.sum(g.mul(g.tanh(op(g, x[0], x[1])), g.constant(w)));
                            }};
                  }};
  };
  auto elementwise1 = [dims](const std::string& name, double lo, double hi, auto op) {
    return OpCase{name, [=](Rng& rng) -> Pair {
                    auto [m, n] = dims(rng);
                    std::vector<Tensor> in{random_tensor(rng, {m, n}, lo, hi)};
                    Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                    return {in, [=](Graph& g, const std::vector<Var>& x) {
                              return g.sum(g.mul(op(g, x[0]), g.constant(w)));
                            }};
                  }};
  };

  std::vector<OpCase> cases;
  cases.push_back(elementwise2("add", -1.0, 1.0, [](Graph& g, Var a, Var b) { return g.add(a, b); }));
  cases.push_back(elementwise2("sub", -1.0, 1.0, [](Graph& g, Var a, Var b) { return g.sub(a, b); }));
  cases.push_back(elementwise2("mul", -1.0, 1.0, [](Graph& g, Var a, Var b) { return g.mul(a, b); }));
  cases.push_back(elementwise2("div", 0.5, 2.0, [](Graph& g, Var a, Var b) { return g.div(a, b); }));
  cases.push_back(elementwise1("sigmoid", -3.0, 3.0, [](Graph& g, Var a) { return g.sigmoid(a); }));
  cases.push_back(elementwise1("tanh", -2.0, 2.0, [](Graph& g, Var a) { return g.tanh(a); }));
  cases.push_back(elementwise1("exp", -2.0, 1.0, [](Graph& g, Var a) { return g.exp(a); }));
  cases.push_back(elementwise1("log", 0.3, 3.0, [](Graph& g, Var a) { return g.log(a); }));
  cases.push_back(elementwise1("affine", -1.0, 1.0, [](Graph& g, Var a) { return g.tanh(g.affine(a, -1.7, 0.4)); }));
  cases.push_back(elementwise1("softmax", -2.0, 2.0, [](Graph& g, Var a) { return g.softmax(a); }));
  cases.push_back(elementwise1("log_softmax", -2.0, 2.0, [](Graph& g, Var a) { return g.log_softmax(a); }));

  cases.push_back({"minimum", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     Tensor a = random_tensor(rng, {m, n}, -1.0, 1.0);
                     Tensor b = a;
                     for (double& v : b.data) v += (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.2, 0.8);
                     Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                     return {{a, b}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.minimum(x[0], x[1])), g.constant(w)));
                             }};
                   }});
  cases.push_back({"maximum", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     Tensor a = random_tensor(rng, {m, n}, -1.0, 1.0);
                     Tensor b = a;
                     for (double& v : b.data) v += (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.2, 0.8);
                     Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                     return {{a, b}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.maximum(x[0], x[1])), g.constant(w)));
                             }};
                   }});
  cases.push_back({"matmul", [](Rng& rng) -> Pair {
                     const auto m = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     const auto k = static_cast<std::size_t>(uniform_int(rng, 1, 5));
                     const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, k}, -1, 1), random_tensor(rng, {k, n}, -1, 1)},
                             [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.matmul(x[0], x[1])), g.constant(w)));
                             }};
                   }});
  cases.push_back({"add_bias", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1), random_tensor(rng, {n}, -1, 1)},
                             [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.add_bias(x[0], x[1])), g.constant(w)));
                             }};
                   }});
  cases.push_back({"sum", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     return {{random_tensor(rng, {m, n}, -1, 1)},
                             [](Graph& g, const std::vector<Var>& x) { return g.tanh(g.sum(g.tanh(x[0]))); }};
                   }});
  cases.push_back({"mean", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     return {{random_tensor(rng, {m, n}, -1, 1)},
                             [](Graph& g, const std::vector<Var>& x) { return g.exp(g.mean(g.tanh(x[0]))); }};
                   }});
  cases.push_back({"add_n", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     Tensor w = random_tensor(rng, {m, n}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1), random_tensor(rng, {m, n}, -1, 1),
                              random_tensor(rng, {m, n}, -1, 1)},
                             [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.add_n({x[0], x[1], x[2], x[0]})), g.constant(w)));
                             }};
                   }});
  cases.push_back({"index_select", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     std::vector<std::size_t> idx;
                     const int picks = uniform_int(rng, 1, 6);
                     for (int i = 0; i < picks; ++i) idx.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(m * n) - 1)));
                     Tensor w = random_tensor(rng, {idx.size()}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1)}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.index_select(g.tanh(x[0]), idx)), g.constant(w)));
                             }};
                   }});
  cases.push_back({"gather_rows", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     std::vector<std::size_t> rows;
                     const int picks = uniform_int(rng, 1, 5);
                     for (int i = 0; i < picks; ++i) rows.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(m) - 1)));
                     Tensor w = random_tensor(rng, {rows.size(), n}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1)}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.gather_rows(x[0], rows)), g.constant(w)));
                             }};
                   }});
  cases.push_back({"pick", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     std::vector<std::size_t> cols;
                     for (std::size_t i = 0; i < m; ++i) cols.push_back(static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(n) - 1)));
                     Tensor w = random_tensor(rng, {m}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1)}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.log(g.pick(g.softmax(x[0]), cols)), g.constant(w)));
                             }};
                   }});
  cases.push_back({"concat", [](Rng& rng) -> Pair {
                     const auto m = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     const auto n1 = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     const auto n2 = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     Tensor w = random_tensor(rng, {m, n1 + n2}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n1}, -1, 1), random_tensor(rng, {m, n2}, -1, 1)},
                             [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.concat({x[0], x[1]})), g.constant(w)));
                             }};
                   }});
  cases.push_back({"slice_cols", [](Rng& rng) -> Pair {
                     const auto m = static_cast<std::size_t>(uniform_int(rng, 1, 4));
                     const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 6));
                     const auto start = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(n) - 1));
                     const auto len = static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(n - start)));
                     Tensor w = random_tensor(rng, {m, len}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1)}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.tanh(g.slice_cols(x[0], start, len)), g.constant(w)));
                             }};
                   }});
  cases.push_back({"reshape", [dims](Rng& rng) -> Pair {
                     auto [m, n] = dims(rng);
                     Tensor w = random_tensor(rng, {n, m}, -1.5, 1.5);
                     return {{random_tensor(rng, {m, n}, -1, 1)}, [=](Graph& g, const std::vector<Var>& x) {
                               return g.sum(g.mul(g.softmax(g.reshape(x[0], {n, m})), g.constant(w)));
                             }};
                   }});
  return cases;
}

}  // namespace conlearn::oracle
