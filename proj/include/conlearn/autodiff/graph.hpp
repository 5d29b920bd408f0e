#pragma once

// Tape-style reverse-mode autodiff. A Graph is built fresh for every training
// step: each op appends a node whose parents all have smaller indices, so the
// backward sweep is a single reverse scan.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conlearn/autodiff/params.hpp"
#include "conlearn/autodiff/tensor.hpp"
#include "conlearn/errors.hpp"

namespace conlearn::ad {

enum class Op {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Div,
  Affine,
  MatMul,
  AddBias,
  Sigmoid,
  Tanh,
  Exp,
  Log,
  Softmax,
  LogSoftmax,
  Sum,
  Mean,
  AddN,
  IndexSelect,
  GatherRows,
  Pick,
  Concat,
  SliceCols,
  Reshape,
  Minimum,
  Maximum,
};

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::Constant: return "constant";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Affine: return "affine";
    case Op::MatMul: return "matmul";
    case Op::AddBias: return "add_bias";
    case Op::Sigmoid: return "sigmoid";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Softmax: return "softmax";
    case Op::LogSoftmax: return "log_softmax";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::AddN: return "add_n";
    case Op::IndexSelect: return "index_select";
    case Op::GatherRows: return "gather_rows";
    case Op::Pick: return "pick";
    case Op::Concat: return "concat";
    case Op::SliceCols: return "slice_cols";
    case Op::Reshape: return "reshape";
    case Op::Minimum: return "minimum";
    case Op::Maximum: return "maximum";
  }
  return "?";
}

/// Handle to a node of one Graph.
struct Var {
  std::size_t id = 0;
};

inline constexpr double kLogClamp = 1e-12;

class Graph {
 public:
  struct Node {
    Op op;
    std::vector<std::size_t> parents;
    Tensor value;
    Tensor adjoint;
    std::vector<std::size_t> index;  // IndexSelect / GatherRows / Pick
    double a = 0.0;                  // Affine scale, SliceCols start
    double b = 0.0;                  // Affine shift
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ---- leaves -------------------------------------------------------------

  /// Differentiable input; its gradient is reported by backward().
  Var leaf(const std::string& name, Tensor value) {
    if (leaf_index_.contains(name)) throw ContractViolation("duplicate leaf '" + name + "'");
    Var v = push(Op::Leaf, {}, std::move(value));
    leaf_index_.emplace(name, leaves_.size());
    leaves_.push_back({name, v.id});
    return v;
  }

  Var constant(Tensor value) { return push(Op::Constant, {}, std::move(value)); }
  Var scalar(double v) { return constant(Tensor::scalar(v)); }

  /// Register every tensor of a ParamSet as a leaf; returned Vars follow the set's order.
  std::unordered_map<std::string, Var> bind(const ParamSet& params) {
    std::unordered_map<std::string, Var> out;
    for (const auto& [name, t] : params) out.emplace(name, leaf(name, t));
    return out;
  }

  // ---- elementwise --------------------------------------------------------

  Var add(Var x, Var y) { return binary(Op::Add, x, y, [](double p, double q) { return p + q; }); }
  Var sub(Var x, Var y) { return binary(Op::Sub, x, y, [](double p, double q) { return p - q; }); }
  Var mul(Var x, Var y) { return binary(Op::Mul, x, y, [](double p, double q) { return p * q; }); }
  Var div(Var x, Var y) { return binary(Op::Div, x, y, [](double p, double q) { return p / q; }); }
  /// min/max; at ties the first argument receives the gradient.
  Var minimum(Var x, Var y) {
    return binary(Op::Minimum, x, y, [](double p, double q) { return q < p ? q : p; });
  }
  Var maximum(Var x, Var y) {
    return binary(Op::Maximum, x, y, [](double p, double q) { return q > p ? q : p; });
  }

  /// scale * x + shift
  Var affine(Var x, double scale, double shift) {
    Tensor out = value(x);
    for (double& v : out.data) v = scale * v + shift;
    Var r = push(Op::Affine, {x.id}, std::move(out));
    nodes_[r.id].a = scale;
    nodes_[r.id].b = shift;
    return r;
  }
  Var scale(Var x, double s) { return affine(x, s, 0.0); }
  Var one_minus(Var x) { return affine(x, -1.0, 1.0); }

  Var sigmoid(Var x) {
    return unary(Op::Sigmoid, x, [](double v) {
      return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
  }
  Var tanh(Var x) { return unary(Op::Tanh, x, [](double v) { return std::tanh(v); }); }
  Var exp(Var x) { return unary(Op::Exp, x, [](double v) { return std::exp(v); }); }
  /// Natural log with the input clamped at 1e-12.
  Var log(Var x) {
    return unary(Op::Log, x, [](double v) { return std::log(std::max(v, kLogClamp)); });
  }

  // ---- linear algebra -----------------------------------------------------

  /// [m,k] x [k,n] -> [m,n]
  Var matmul(Var x, Var y) {
    const Tensor& A = value(x);
    const Tensor& B = value(y);
    if (A.rank() != 2 || B.rank() != 2 || A.shape[1] != B.shape[0])
      throw ContractViolation("matmul shape mismatch " + shape_str(A.shape) + " x " + shape_str(B.shape));
    const std::size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
    Tensor C({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = &C.data[i * n];
      for (std::size_t p = 0; p < k; ++p) {
        const double a = A.data[i * k + p];
        if (a == 0.0) continue;
        const double* brow = &B.data[p * n];
        for (std::size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
      }
    }
    return push(Op::MatMul, {x.id, y.id}, std::move(C));
  }

  /// [m,n] + [n] broadcast over rows.
  Var add_bias(Var x, Var bias) {
    const Tensor& X = value(x);
    const Tensor& b = value(bias);
    if (X.rank() != 2 || b.rank() != 1 || b.shape[0] != X.shape[1])
      throw ContractViolation("add_bias shape mismatch " + shape_str(X.shape) + " + " + shape_str(b.shape));
    Tensor out = X;
    const std::size_t n = X.shape[1];
    for (std::size_t i = 0; i < X.shape[0]; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += b.data[j];
    return push(Op::AddBias, {x.id, bias.id}, std::move(out));
  }

  // ---- normalizers (over the last dimension, row-wise) ---------------------

  Var softmax(Var x) {
    Tensor out = value(x);
    const std::size_t n = out.cols();
    for (std::size_t r = 0; r < out.size() / n; ++r) {
      double* row = &out.data[r * n];
      const double mx = *std::max_element(row, row + n);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += (row[j] = std::exp(row[j] - mx));
      for (std::size_t j = 0; j < n; ++j) row[j] /= s;
    }
    return push(Op::Softmax, {x.id}, std::move(out));
  }

  Var log_softmax(Var x) {
    Tensor out = value(x);
    const std::size_t n = out.cols();
    for (std::size_t r = 0; r < out.size() / n; ++r) {
      double* row = &out.data[r * n];
      const double mx = *std::max_element(row, row + n);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] - mx);
      const double lse = mx + std::log(s);
      for (std::size_t j = 0; j < n; ++j) row[j] -= lse;
    }
    return push(Op::LogSoftmax, {x.id}, std::move(out));
  }

  // ---- reductions ---------------------------------------------------------

  Var sum(Var x) {
    double s = 0.0;
    for (double v : value(x).data) s += v;
    return push(Op::Sum, {x.id}, Tensor::scalar(s));
  }

  Var mean(Var x) {
    const Tensor& X = value(x);
    double s = 0.0;
    for (double v : X.data) s += v;
    return push(Op::Mean, {x.id}, Tensor::scalar(s / static_cast<double>(X.size())));
  }

  /// Elementwise sum of same-shaped nodes.
  Var add_n(const std::vector<Var>& xs) {
    if (xs.empty()) throw ContractViolation("add_n needs at least one input");
    Tensor out = value(xs[0]);
    std::vector<std::size_t> parents{xs[0].id};
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const Tensor& t = value(xs[i]);
      if (t.shape != out.shape) throw ContractViolation("add_n shape mismatch");
      for (std::size_t j = 0; j < t.size(); ++j) out.data[j] += t.data[j];
      parents.push_back(xs[i].id);
    }
    return push(Op::AddN, std::move(parents), std::move(out));
  }

  // ---- indexing -----------------------------------------------------------

  /// Gather elements of the flattened input -> [indices.size()].
  Var index_select(Var x, std::vector<std::size_t> indices) {
    const Tensor& X = value(x);
    if (indices.empty()) throw ContractViolation("index_select needs at least one index");
    std::vector<double> out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= X.size()) throw ContractViolation("index_select index out of range");
      out[i] = X.data[indices[i]];
    }
    Var r = push(Op::IndexSelect, {x.id}, Tensor::vector(std::move(out)));
    nodes_[r.id].index = std::move(indices);
    return r;
  }

  /// Single element as a [1] node.
  Var element(Var x, std::size_t flat_index) { return index_select(x, {flat_index}); }

  /// Rows of a [m,n] matrix (repeats allowed) -> [rows.size(), n].
  Var gather_rows(Var x, std::vector<std::size_t> rows) {
    const Tensor& X = value(x);
    if (X.rank() != 2) throw ContractViolation("gather_rows expects a matrix");
    if (rows.empty()) throw ContractViolation("gather_rows needs at least one row");
    const std::size_t n = X.shape[1];
    Tensor out({rows.size(), n});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] >= X.shape[0]) throw ContractViolation("gather_rows row out of range");
      std::copy_n(&X.data[rows[i] * n], n, &out.data[i * n]);
    }
    Var r = push(Op::GatherRows, {x.id}, std::move(out));
    nodes_[r.id].index = std::move(rows);
    return r;
  }

  /// One column per row of a [m,n] matrix -> [m].
  Var pick(Var x, std::vector<std::size_t> cols) {
    const Tensor& X = value(x);
    const std::size_t n = X.cols();
    const std::size_t m = X.size() / n;
    if (cols.size() != m) throw ContractViolation("pick needs one column per row");
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      if (cols[i] >= n) throw ContractViolation("pick column out of range");
      out[i] = X.data[i * n + cols[i]];
    }
    Var r = push(Op::Pick, {x.id}, Tensor::vector(std::move(out)));
    nodes_[r.id].index = std::move(cols);
    return r;
  }

  /// Concatenate along the last dimension; all inputs share leading dimensions.
  Var concat(const std::vector<Var>& xs) {
    if (xs.empty()) throw ContractViolation("concat needs at least one input");
    const Tensor& first = value(xs[0]);
    const std::size_t rows = first.size() / first.cols();
    std::size_t total = 0;
    std::vector<std::size_t> parents;
    for (Var v : xs) {
      const Tensor& t = value(v);
      if (t.rank() != first.rank() || t.size() / t.cols() != rows)
        throw ContractViolation("concat leading dimensions differ");
      total += t.cols();
      parents.push_back(v.id);
    }
    Shape shape = first.shape;
    shape.back() = total;
    Tensor out(shape);
    std::size_t off = 0;
    for (Var v : xs) {
      const Tensor& t = value(v);
      const std::size_t w = t.cols();
      for (std::size_t r = 0; r < rows; ++r) std::copy_n(&t.data[r * w], w, &out.data[r * total + off]);
      off += w;
    }
    return push(Op::Concat, std::move(parents), std::move(out));
  }

  /// Columns [start, start+len) of a matrix.
  Var slice_cols(Var x, std::size_t start, std::size_t len) {
    const Tensor& X = value(x);
    const std::size_t n = X.cols();
    if (start + len > n || len == 0) throw ContractViolation("slice_cols out of range");
    const std::size_t rows = X.size() / n;
    Shape shape = X.shape;
    shape.back() = len;
    Tensor out(shape);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&X.data[r * n + start], len, &out.data[r * len]);
    Var v = push(Op::SliceCols, {x.id}, std::move(out));
    nodes_[v.id].a = static_cast<double>(start);
    return v;
  }

  Var reshape(Var x, Shape shape) {
    const Tensor& X = value(x);
    if (shape_size(shape) != X.size()) throw ContractViolation("reshape changes element count");
    return push(Op::Reshape, {x.id}, Tensor(std::move(shape), X.data));
  }

  // ---- inspection ---------------------------------------------------------

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  double scalar_value(Var v) const { return value(v).data.at(0); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t i) const { return nodes_.at(i); }

  // ---- backward -----------------------------------------------------------

  /// Gradient of a scalar node with respect to every leaf, in leaf creation order.
  GradSet backward(Var loss) {
    if (loss.id >= nodes_.size()) throw ContractViolation("backward: unknown node");
    if (nodes_[loss.id].value.shape != Shape{1})
      throw ContractViolation("backward: loss node must have shape [1], got " +
                              shape_str(nodes_[loss.id].value.shape));
    for (auto& n : nodes_) n.adjoint = Tensor();
    nodes_[loss.id].adjoint = Tensor::scalar(1.0);

    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.adjoint.data.empty()) continue;
      if (!n.adjoint.all_finite())
        throw NumericError("non-finite adjoint at node " + std::to_string(i) + " (" +
                           std::string(op_name(n.op)) + ")");
      propagate(i);
    }

    GradSet grads;
    for (const auto& [name, id] : leaves_) {
      const Node& n = nodes_[id];
      grads.add(name, n.adjoint.data.empty() ? Tensor(n.value.shape) : n.adjoint);
    }
    return grads;
  }

 private:
  struct LeafEntry {
    std::string name;
    std::size_t id;
  };

  Var push(Op op, std::vector<std::size_t> parents, Tensor value) {
    if (!value.all_finite())
      throw NumericError("non-finite value produced at node " + std::to_string(nodes_.size()) + " (" +
                         std::string(op_name(op)) + ")");
    nodes_.push_back(Node{op, std::move(parents), std::move(value), Tensor(), {}, 0.0, 0.0});
    return Var{nodes_.size() - 1};
  }

  template <typename F>
  Var unary(Op op, Var x, F f) {
    Tensor out = value(x);
    for (double& v : out.data) v = f(v);
    return push(op, {x.id}, std::move(out));
  }

  template <typename F>
  Var binary(Op op, Var x, Var y, F f) {
    const Tensor& X = value(x);
    const Tensor& Y = value(y);
    if (X.shape != Y.shape)
      throw ContractViolation(std::string(op_name(op)) + " shape mismatch " + shape_str(X.shape) + " vs " +
                              shape_str(Y.shape));
    Tensor out(X.shape);
    for (std::size_t i = 0; i < X.size(); ++i) out.data[i] = f(X.data[i], Y.data[i]);
    return push(op, {x.id, y.id}, std::move(out));
  }

  Tensor& adj(std::size_t id) {
    Node& n = nodes_[id];
    if (n.adjoint.data.empty()) n.adjoint = Tensor(n.value.shape);
    return n.adjoint;
  }

  void propagate(std::size_t i) {
    // Parents always precede i, so adj() never touches this node's buffers.
    // A parent used twice (mul(x, x)) accumulates into the same adjoint.
    const Node& n = nodes_[i];
    const std::vector<double>& g = n.adjoint.data;
    const std::vector<double>& y = n.value.data;
    const std::size_t sz = g.size();

    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j];
        auto& b = adj(n.parents[1]).data;
        for (std::size_t j = 0; j < sz; ++j) b[j] += g[j];
        break;
      }
      case Op::Sub: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j];
        auto& b = adj(n.parents[1]).data;
        for (std::size_t j = 0; j < sz; ++j) b[j] -= g[j];
        break;
      }
      case Op::Mul: {
        const auto& xv = nodes_[n.parents[0]].value.data;
        const auto& yv = nodes_[n.parents[1]].value.data;
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j] * yv[j];
        auto& b = adj(n.parents[1]).data;
        for (std::size_t j = 0; j < sz; ++j) b[j] += g[j] * xv[j];
        break;
      }
      case Op::Div: {
        const auto& xv = nodes_[n.parents[0]].value.data;
        const auto& yv = nodes_[n.parents[1]].value.data;
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j] / yv[j];
        auto& b = adj(n.parents[1]).data;
        for (std::size_t j = 0; j < sz; ++j) b[j] -= g[j] * xv[j] / (yv[j] * yv[j]);
        break;
      }
      case Op::Minimum:
      case Op::Maximum: {
        const auto& xv = nodes_[n.parents[0]].value.data;
        auto& a = adj(n.parents[0]).data;
        auto& b = adj(n.parents[1]).data;
        for (std::size_t j = 0; j < sz; ++j) {
          if (y[j] == xv[j])
            a[j] += g[j];
          else
            b[j] += g[j];
        }
        break;
      }
      case Op::Affine: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += n.a * g[j];
        break;
      }
      case Op::Sigmoid: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j] * y[j] * (1.0 - y[j]);
        break;
      }
      case Op::Tanh: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j] * (1.0 - y[j] * y[j]);
        break;
      }
      case Op::Exp: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j] * y[j];
        break;
      }
      case Op::Log: {
        const auto& xv = nodes_[n.parents[0]].value.data;
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j)
          if (xv[j] >= kLogClamp) a[j] += g[j] / xv[j];
        break;
      }
      case Op::Softmax: {
        const std::size_t w = n.value.cols();
        auto& a = adj(n.parents[0]).data;
        for (std::size_t r = 0; r < sz / w; ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < w; ++j) dot += g[r * w + j] * y[r * w + j];
          for (std::size_t j = 0; j < w; ++j) a[r * w + j] += y[r * w + j] * (g[r * w + j] - dot);
        }
        break;
      }
      case Op::LogSoftmax: {
        const std::size_t w = n.value.cols();
        auto& a = adj(n.parents[0]).data;
        for (std::size_t r = 0; r < sz / w; ++r) {
          double gs = 0.0;
          for (std::size_t j = 0; j < w; ++j) gs += g[r * w + j];
          for (std::size_t j = 0; j < w; ++j) a[r * w + j] += g[r * w + j] - std::exp(y[r * w + j]) * gs;
        }
        break;
      }
      case Op::Sum: {
        auto& a = adj(n.parents[0]).data;
        for (double& v : a) v += g[0];
        break;
      }
      case Op::Mean: {
        auto& a = adj(n.parents[0]).data;
        const double s = g[0] / static_cast<double>(a.size());
        for (double& v : a) v += s;
        break;
      }
      case Op::AddN: {
        for (std::size_t p : n.parents) {
          auto& a = adj(p).data;
          for (std::size_t j = 0; j < sz; ++j) a[j] += g[j];
        }
        break;
      }
      case Op::IndexSelect: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < n.index.size(); ++j) a[n.index[j]] += g[j];
        break;
      }
      case Op::GatherRows: {
        const std::size_t w = n.value.cols();
        auto& a = adj(n.parents[0]).data;
        for (std::size_t r = 0; r < n.index.size(); ++r)
          for (std::size_t j = 0; j < w; ++j) a[n.index[r] * w + j] += g[r * w + j];
        break;
      }
      case Op::Pick: {
        const std::size_t w = nodes_[n.parents[0]].value.cols();
        auto& a = adj(n.parents[0]).data;
        for (std::size_t r = 0; r < n.index.size(); ++r) a[r * w + n.index[r]] += g[r];
        break;
      }
      case Op::Concat: {
        const std::size_t total = n.value.cols();
        const std::size_t rows = sz / total;
        std::size_t off = 0;
        for (std::size_t p : n.parents) {
          const std::size_t w = nodes_[p].value.cols();
          auto& a = adj(p).data;
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < w; ++j) a[r * w + j] += g[r * total + off + j];
          off += w;
        }
        break;
      }
      case Op::SliceCols: {
        const std::size_t w = n.value.cols();
        const std::size_t full = nodes_[n.parents[0]].value.cols();
        const auto start = static_cast<std::size_t>(n.a);
        auto& a = adj(n.parents[0]).data;
        for (std::size_t r = 0; r < sz / w; ++r)
          for (std::size_t j = 0; j < w; ++j) a[r * full + start + j] += g[r * w + j];
        break;
      }
      case Op::Reshape: {
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j];
        break;
      }
      case Op::AddBias: {
        const std::size_t w = n.value.cols();
        auto& a = adj(n.parents[0]).data;
        for (std::size_t j = 0; j < sz; ++j) a[j] += g[j];
        auto& b = adj(n.parents[1]).data;
        for (std::size_t r = 0; r < sz / w; ++r)
          for (std::size_t j = 0; j < w; ++j) b[j] += g[r * w + j];
        break;
      }
      case Op::MatMul: {
        const Tensor& A = nodes_[n.parents[0]].value;
        const Tensor& B = nodes_[n.parents[1]].value;
        const std::size_t m = A.shape[0], k = A.shape[1], w = B.shape[1];
        {
          auto& ga = adj(n.parents[0]).data;
          for (std::size_t r = 0; r < m; ++r) {
            const double* grow = &g[r * w];
            for (std::size_t p = 0; p < k; ++p) {
              const double* brow = &B.data[p * w];
              double s = 0.0;
              for (std::size_t j = 0; j < w; ++j) s += grow[j] * brow[j];
              ga[r * k + p] += s;
            }
          }
        }
        {
          auto& gb = adj(n.parents[1]).data;
          for (std::size_t r = 0; r < m; ++r) {
            const double* grow = &g[r * w];
            for (std::size_t p = 0; p < k; ++p) {
              const double av = A.data[r * k + p];
              if (av == 0.0) continue;
              double* gbrow = &gb[p * w];
              for (std::size_t j = 0; j < w; ++j) gbrow[j] += av * grow[j];
            }
          }
        }
        break;
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<LeafEntry> leaves_;
  std::unordered_map<std::string, std::size_t> leaf_index_;
};

}  // namespace conlearn::ad
