#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/optim.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/constraint/loss.hpp"
#include "conlearn/integrators.hpp"
#include "conlearn/metrics.hpp"
#include "conlearn/random.hpp"
#include "conlearn/softlogic/eval.hpp"
#include "conlearn/tasks/registry.hpp"

namespace conlearn::harness {

struct RunConfig {
  std::string task = "ste";
  std::optional<constraint::LossType> loss;  // empty: constraint machinery disabled
  constraint::Strategy strategy = constraint::Strategy::top1();
  integrate::IntegratorConfig integrator;
  logic::LogicKind logic;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::size_t constraint_batch = 8;
  std::size_t constraint_start_epoch = 0;  // epochs of supervised-only warmup
  double lr = 1e-3;
  std::uint64_t seed = 1;
  tasks::TaskOptions data;
  std::vector<double> betas{0.3, 1.0, 3.0};

  std::string loss_name() const { return loss ? constraint::to_string(*loss) : "none"; }
};

/// Checks everything that can be checked before training starts.
inline void validate(const RunConfig& c) {
  if (!tasks::is_task(c.task)) throw ConfigError("unknown task '" + c.task + "'");
  if (c.epochs == 0) throw ConfigError("epochs must be at least 1");
  if (c.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(c.lr > 0.0)) throw ConfigError("lr must be positive");
  if (c.betas.empty()) throw ConfigError("at least one beta is required");
  for (double b : c.betas)
    if (!(b > 0.0)) throw ConfigError("beta values must be positive");
  if (c.loss) {
    constraint::check_legal(*c.loss, c.strategy);
    if (*c.loss == constraint::LossType::Soft && c.task == "ste")
      throw ConfigError("the soft loss is not defined for ste; use binary or real");
    if (c.constraint_batch == 0) throw ConfigError("constraint_batch must be at least 1");
  }
  if (c.integrator.eta < 0.0) throw ConfigError("eta must be non-negative");
}

struct StepTrace {
  double lambda = 0.0;
  double violation = 0.0;
  double orthogonality_residual = 0.0;
  bool con_projected = false;
  bool sup_projected = false;
};

struct RunResult {
  double main_metric = 0.0;
  double violation_rate = 0.0;
  std::vector<double> hbeta;  // aligned with RunConfig::betas
  double lambda_final = 0.0;
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  std::string status = "ok";
  std::vector<StepTrace> trace;

  bool ok() const { return status == "ok"; }
};

// Independent random streams per run; adding a constraint never perturbs the
// supervised path.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kOrderStream = 2;
inline constexpr std::uint64_t kPoolStream = 3;
inline constexpr std::uint64_t kExploreStream = 4;

using Progress = std::function<void(std::size_t epoch, const tasks::Evaluation&)>;

/// Checks the configuration against what the task can do.
inline void validate(const RunConfig& c, const tasks::Task& task) {
  validate(c);
  if (c.task != task.name()) throw ConfigError("config names task '" + c.task + "' but got '" + task.name() + "'");
  if (!c.loss) return;
  if (*c.loss == constraint::LossType::Soft && !task.supports_soft())
    throw ConfigError("the soft loss is not defined for " + task.name() + "; use binary or real");
  if (c.strategy.kind == constraint::Strategy::Kind::Exhaustive && !task.supports_exhaustive())
    throw ConfigError("the " + task.name() + " output space is too large for exhaustive exploration; use top1 or sampling");
}

/// Trains and evaluates one run. `final_params`, when given, receives the trained parameters.
inline RunResult run_experiment(const RunConfig& cfg, const tasks::Task& task, const Progress& progress = {},
                                ad::ParamSet* final_params = nullptr) {
  validate(cfg, task);
  const auto t0 = std::chrono::steady_clock::now();
  RunResult res;
  try {
    auto init_rng = make_rng(cfg.seed, kInitStream);
    auto order_rng = make_rng(cfg.seed, kOrderStream);
    auto pool_rng = make_rng(cfg.seed, kPoolStream);
    auto explore_rng = make_rng(cfg.seed, kExploreStream);

    auto params = task.init_params(init_rng);
    ad::AdamState adam(params, ad::AdamConfig{cfg.lr});
    integrate::IntegratorState integ(cfg.integrator, params.total_size());

    std::vector<std::size_t> order(task.train_size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      shuffle(order_rng, order);
      const bool constrain = cfg.loss && epoch >= cfg.constraint_start_epoch;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        std::span<const std::size_t> batch(order.data() + start, end - start);

        std::vector<double> g_sup;
        {
          ad::Graph g;
          auto b = g.bind(params);
          g_sup = ad::flatten(g.backward(task.supervised_loss(g, b, batch)));
        }
        std::vector<double> g_con(g_sup.size(), 0.0);
        double c_value = 0.0;
        if (constrain) {
          std::vector<std::size_t> pool_idx(cfg.constraint_batch);
          for (auto& i : pool_idx)
            i = static_cast<std::size_t>(uniform_int(pool_rng, 0, static_cast<int>(task.pool_size()) - 1));
          ad::Graph g;
          auto b = g.bind(params);
          auto src = task.constraint_source(g, b, pool_idx);
          auto lv = constraint::constraint_loss(g, *src, task.specs(), *cfg.loss, cfg.strategy, cfg.logic, explore_rng);
          g_con = ad::flatten(g.backward(lv.loss));
          c_value = lv.violation;
        }

        std::vector<double> step_dir;
        if (cfg.loss) {
          auto out = integ.combine(g_sup, g_con, c_value);
          res.trace.push_back({out.diag.lambda, c_value, out.diag.orthogonality_residual, out.diag.con_projected,
                               out.diag.sup_projected});
          step_dir = std::move(out.combined);
        } else {
          step_dir = std::move(g_sup);
        }
        ad::adam_step(params, ad::unflatten(step_dir, params), adam);
        ++res.steps;
      }
      if (progress) progress(epoch, task.evaluate(params));
    }

    auto ev = task.evaluate(params);
    if (final_params) *final_params = params;
    res.main_metric = ev.main_metric;
    res.violation_rate = ev.violation_rate;
    for (double b : cfg.betas) res.hbeta.push_back(metrics::hbeta(res.main_metric, 1.0 - res.violation_rate, b));
    res.lambda_final = cfg.loss ? (cfg.integrator.mechanism == integrate::Mechanism::Monotone ? integ.lambda()
                                                                                             : cfg.integrator.lambda2)
                                : 0.0;
  } catch (const NumericError& e) {
    res.status = std::string("failed: ") + e.what();
  } catch (const CapacityError& e) {
    res.status = std::string("failed: ") + e.what();
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline RunResult run_experiment(const RunConfig& cfg, const Progress& progress = {}) {
  validate(cfg);
  auto task = tasks::make_task(cfg.task, cfg.data);
  return run_experiment(cfg, *task, progress);
}

}  // namespace conlearn::harness
