#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/constraint/explore.hpp"
#include "conlearn/constraint/spec.hpp"
#include "conlearn/metrics.hpp"
#include "conlearn/models/lstm.hpp"
#include "conlearn/random.hpp"

namespace conlearn::tasks {

/// Labeled pairs plus an optional unlabeled input pool.
template <typename In, typename Out>
struct Dataset {
  std::string task;
  std::uint64_t seed = 0;
  std::vector<In> inputs;
  std::vector<Out> outputs;
  std::vector<In> unlabeled;

  std::size_t size() const { return inputs.size(); }
};

/// Sizes of the generated splits; 0 selects the task default.
struct TaskOptions {
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t unlabeled = 0;
  bool unlabeled_set = false;  // distinguishes an explicit 0 from "use default"
  std::uint64_t data_seed = 20240601;
};

struct Evaluation {
  double main_metric = 0.0;
  double violation_rate = 0.0;
  std::size_t examples = 0;
};

/// What the training loop needs from a task. Pool indices address the labeled
/// training inputs first, then the unlabeled pool; labels are never read there.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual metrics::MetricKind metric() const = 0;
  virtual const std::vector<constraint::ConstraintSpec>& specs() const = 0;
  virtual bool supports_soft() const { return true; }
  /// False when a single output space is too large to enumerate.
  virtual bool supports_exhaustive() const { return true; }

  virtual ad::ParamSet init_params(Rng& rng) const = 0;
  virtual std::size_t train_size() const = 0;
  virtual std::size_t pool_size() const = 0;

  virtual ad::Var supervised_loss(ad::Graph& g, const models::Bound& p, std::span<const std::size_t> train_idx) const = 0;
  virtual std::unique_ptr<constraint::OutputSource> constraint_source(ad::Graph& g, const models::Bound& p,
                                                                      std::span<const std::size_t> pool_idx) const = 0;
  /// Greedy/argmax predictions on the held-out test split.
  virtual Evaluation evaluate(const ad::ParamSet& params) const = 0;

  /// Line-oriented dumps: "input<TAB>output" for labeled data, "input" for the pool.
  virtual void write_data(std::ostream& train, std::ostream& test, std::ostream& unlabeled) const = 0;
};

namespace detail {

inline std::size_t or_default(std::size_t v, std::size_t d) { return v == 0 ? d : v; }

/// Splits a generation seed into independent, named streams.
inline Rng data_stream(std::uint64_t seed, std::uint64_t which) { return make_rng(seed, 1000 + which); }

inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kTestStream = 2;
inline constexpr std::uint64_t kPoolStream = 3;
inline constexpr std::uint64_t kLayoutStream = 4;

}  // namespace detail

}  // namespace conlearn::tasks
