#pragma once

// Exact-expectation oracle for the score-function estimator on a one-position,
// three-class softmax model: the exact gradient of sum_y p(y) r(y) with respect
// to the logits is enumerated in closed form and compared with the gradient of
// the sampled surrogate built by the constraint engine.

#include <cmath>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/constraint/loss.hpp"
#include "conlearn/random.hpp"

namespace conlearn::oracle {

/// Constraint on a single-position output: degree = rewards[class].
inline constraint::ConstraintSpec table_spec(std::vector<double> rewards) {
  constraint::ConstraintSpec s;
  s.name = "reward-table";
  s.degree = [rewards](std::span<const int>, std::span<const int> out) {
    return rewards.at(static_cast<std::size_t>(out[0]));
  };
  return s;
}

inline models::FactoredOutput single_row(ad::Var probs, std::size_t classes) {
  return {probs, classes, {{0}}};
}

/// d/dz sum_y softmax(z)_y r_y, computed by hand: p_j (r_j - sum_y p_y r_y).
inline std::vector<double> exact_expected_gradient(const std::vector<double>& logits, const std::vector<double>& r) {
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i]));
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mean += (p[i] /= z) * r[i];
  std::vector<double> g(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = p[i] * (r[i] - mean);
  return g;
}

/// Gradient of the engine's sampled REINFORCE surrogate with `draws` samples.
inline std::vector<double> sampled_gradient(const std::vector<double>& logits, const std::vector<double>& rewards,
                                            constraint::LossType type, std::size_t draws, std::uint64_t seed) {
  ad::Graph g;
  auto z = g.leaf("z", ad::Tensor::matrix(1, logits.size(), logits));
  constraint::FactoredSource src(g, single_row(g.softmax(z), logits.size()));
  auto rng = make_rng(seed);
  auto lv = constraint::constraint_loss(g, src, {table_spec(rewards)}, type, constraint::Strategy::sampling(draws),
                                        logic::LogicKind{}, rng);
  return g.backward(lv.loss)["z"].data;
}

inline double relative_error(const std::vector<double>& est, const std::vector<double>& exact) {
  double d = 0.0, n = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    d += (est[i] - exact[i]) * (est[i] - exact[i]);
    n += exact[i] * exact[i];
  }
  return std::sqrt(d) / std::sqrt(n);
}

}  // namespace conlearn::oracle
