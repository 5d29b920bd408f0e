#pragma once

#include <cstddef>
#include <vector>

#include "conlearn/autodiff/graph.hpp"

namespace conlearn::models {

/// Independent categorical distributions, one per output position.
/// `probs` is [rows, classes]; rows[e] lists example e's rows in position order.
struct FactoredOutput {
  ad::Var probs;
  std::size_t classes = 0;
  std::vector<std::vector<std::size_t>> rows;

  std::size_t examples() const { return rows.size(); }
};

/// Free-running autoregressive decode of a batch.
struct Generation {
  std::vector<std::vector<int>> tokens;  // emitted tokens, EOS excluded
  std::vector<bool> truncated;           // hit max_len before EOS
  ad::Var log_prob;                      // [batch]; sum of log p(chosen) incl. EOS
  std::vector<ad::Var> step_probs;       // [batch, vocab] per step
};

}  // namespace conlearn::models
