#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "conlearn/autodiff/tensor.hpp"
#include "conlearn/errors.hpp"
#include "conlearn/random.hpp"

namespace conlearn::ad {

/// Named tensors in insertion order. Used both for model parameters and for
/// the gradients that mirror them.
class ParamSet {
 public:
  ParamSet() = default;

  Tensor& add(const std::string& name, Tensor t) {
    if (name.empty()) throw ContractViolation("parameter name must be non-empty");
    if (index_.contains(name)) throw ContractViolation("duplicate parameter name '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(name, std::move(t));
    return entries_.back().second;
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Tensor& operator[](const std::string& name) const { return entries_[lookup(name)].second; }
  Tensor& operator[](const std::string& name) { return entries_[lookup(name)].second; }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::string& name(std::size_t i) const { return entries_[i].first; }
  const Tensor& tensor(std::size_t i) const { return entries_[i].second; }
  Tensor& tensor(std::size_t i) { return entries_[i].second; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [_, t] : entries_) n += t.size();
    return n;
  }

  /// Same names and shapes, all zeros.
  ParamSet zeros_like() const {
    ParamSet out;
    for (const auto& [n, t] : entries_) out.add(n, Tensor(t.shape));
    return out;
  }

  bool same_layout(const ParamSet& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
      if (other.name(i) != name(i) || other.tensor(i).shape != tensor(i).shape) return false;
    return true;
  }

  friend bool operator==(const ParamSet& a, const ParamSet& b) { return a.entries_ == b.entries_; }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractViolation("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradSet = ParamSet;

inline std::vector<double> flatten(const ParamSet& grads) {
  std::vector<double> flat;
  flat.reserve(grads.total_size());
  for (const auto& [_, t] : grads) flat.insert(flat.end(), t.data.begin(), t.data.end());
  return flat;
}

inline ParamSet unflatten(const std::vector<double>& flat, const ParamSet& layout) {
  if (flat.size() != layout.total_size())
    throw ContractViolation("unflatten: vector length " + std::to_string(flat.size()) +
                            " != parameter count " + std::to_string(layout.total_size()));
  ParamSet out;
  std::size_t off = 0;
  for (const auto& [n, t] : layout) {
    std::vector<double> chunk(flat.begin() + static_cast<std::ptrdiff_t>(off),
                              flat.begin() + static_cast<std::ptrdiff_t>(off + t.size()));
    off += t.size();
    out.add(n, Tensor(t.shape, std::move(chunk)));
  }
  return out;
}

/// Uniform initialization in [-scale, scale], drawn in parameter order.
inline void init_uniform(ParamSet& params, Rng& rng, double scale) {
  for (std::size_t i = 0; i < params.size(); ++i)
    for (double& v : params.tensor(i).data) v = uniform(rng, -scale, scale);
}

}  // namespace conlearn::ad
