#pragma once

#include <cmath>
#include <cstdint>

#include "conlearn/autodiff/params.hpp"
#include "conlearn/errors.hpp"

namespace conlearn::ad {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(const ParamSet& params, AdamConfig cfg)
      : config(cfg), first_moment(params.zeros_like()), second_moment(params.zeros_like()) {}
};

/// One bias-corrected Adam update, in place.
inline void adam_step(ParamSet& params, const GradSet& grads, AdamState& state) {
  if (!grads.same_layout(params))
    throw ContractViolation("adam_step: gradient layout does not match parameters");
  if (!state.first_moment.same_layout(params) || !state.second_moment.same_layout(params))
    throw ContractViolation("adam_step: optimizer state layout does not match parameters");

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.tensor(i).data;
    const auto& g = grads.tensor(i).data;
    auto& m = state.first_moment.tensor(i).data;
    auto& v = state.second_moment.tensor(i).data;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

inline void sgd_step(ParamSet& params, const GradSet& grads, double learning_rate) {
  if (!grads.same_layout(params))
    throw ContractViolation("sgd_step: gradient layout does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params.tensor(i).data;
    const auto& g = grads.tensor(i).data;
    for (std::size_t j = 0; j < p.size(); ++j) p[j] -= learning_rate * g[j];
  }
}

}  // namespace conlearn::ad
