#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "conlearn/harness/config.hpp"
#include "conlearn/harness/grid.hpp"
#include "conlearn/integrators.hpp"
#include "conlearn/metrics.hpp"
#include "conlearn/oracle/formulas.hpp"
#include "conlearn/oracle/gradcheck.hpp"
#include "conlearn/oracle/reinforce.hpp"
#include "conlearn/text.hpp"

namespace conlearn::harness {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  bool training = true;  // include the training-based checks 6-8
  std::size_t workers = 1;
  std::function<void(const std::string&)> log;  // progress lines
};

namespace accept {

using Clock = std::chrono::steady_clock;

inline double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

inline std::string fx(double v, int d = 4) { return text::format_fixed(v, d); }

template <typename F>
CheckResult timed(int id, std::string name, double budget_s, F body) {
  CheckResult r;
  r.id = id;
  r.name = std::move(name);
  const auto t0 = Clock::now();
  try {
    std::ostringstream detail;
    r.passed = body(detail);
    r.detail = detail.str();
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = since(t0);
  if (r.seconds >= budget_s) {
    r.passed = false;
    r.detail += "; over time budget " + fx(budget_s, 0) + " s";
  }
  return r;
}

inline CheckResult gradients() {
  return timed(1, "gradient correctness", 10.0, [](std::ostream& d) {
    Rng rng = make_rng(2024);
    double worst = 0.0;
    std::string worst_op;
    std::size_t graphs = 0;
    const auto ops = oracle::op_catalog();
    for (const auto& op : ops)
      for (int trial = 0; trial < 20; ++trial) {
        auto [inputs, build] = op.make(rng);
        const double e = oracle::gradcheck(build, inputs).max_relative_error;
        ++graphs;
        if (e > worst) {
          worst = e;
          worst_op = op.name;
        }
      }
    d << ops.size() << " op classes x 20 graphs, worst relative error " << worst << " (" << worst_op << ")";
    return worst < 1e-4;
  });
}

inline CheckResult boundary() {
  return timed(2, "soft-logic boundary soundness", 5.0, [](std::ostream& d) {
    auto rep = oracle::check_boundary_soundness(4);
    d << rep.checked << " evaluations, " << rep.mismatches << " mismatches";
    if (rep.mismatches) d << " (first: " << rep.first_mismatch << ")";
    return rep.mismatches == 0 && rep.checked > 0;
  });
}

inline CheckResult projection() {
  return timed(3, "projection algebra", 60.0, [](std::ostream& d) {
    using namespace integrate;
    auto hand = project({1, 0}, {-1, 1});
    const double hand_err = std::max(std::abs(hand.v[0] - 0.5), std::abs(hand.v[1] - 0.5));
    auto rng = make_rng(31);
    double worst_res = 0.0, worst_idem = 0.0;
    bool non_expanding = true;
    for (int i = 0; i < 1000; ++i) {
      const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 41));
      std::vector<double> v(n), r(n);
      for (auto& x : v) x = normal(rng);
      for (auto& x : r) x = normal(rng);
      auto p = project(v, r);
      if (p.fired) worst_res = std::max(worst_res, std::abs(dot(p.v, r)) / (norm(p.v) * norm(r) + 1e-300));
      non_expanding = non_expanding && norm(p.v) <= norm(v) * (1 + 1e-15);
      auto pp = project(p.v, r);
      for (std::size_t j = 0; j < n; ++j) worst_idem = std::max(worst_idem, std::abs(pp.v[j] - p.v[j]));
    }
    d << "hand example error " << hand_err << ", max orthogonality residual " << worst_res
      << ", max idempotence gap " << worst_idem << (non_expanding ? ", norms non-increasing" : ", NORM GREW");
    return hand.fired && hand_err <= 1e-12 && worst_res < 1e-9 && worst_idem < 1e-9 && non_expanding;
  });
}

inline CheckResult reinforce() {
  return timed(4, "REINFORCE vs exact expectation", 30.0, [](std::ostream& d) {
    const std::vector<double> z{0.2, -0.3, 0.5};
    const std::vector<double> viol{0, 0, 1}, deg{0.0, 0.4, 1.0};
    const double eb = oracle::relative_error(oracle::sampled_gradient(z, viol, constraint::LossType::Binary, 10000, 5),
                                             oracle::exact_expected_gradient(z, viol));
    const double er = oracle::relative_error(oracle::sampled_gradient(z, deg, constraint::LossType::Real, 10000, 6),
                                             oracle::exact_expected_gradient(z, deg));
    d << "relative error binary " << fx(eb) << ", real " << fx(er) << " (10000 draws)";
    return eb < 0.05 && er < 0.05;
  });
}

inline CheckResult hbeta_exact() {
  return timed(5, "H_beta exactness", 5.0, [](std::ostream& d) {
    const double h = metrics::hbeta(0.8, 0.4, 1.0);
    const double e1 = std::abs(h - 0.64 / 1.2);
    auto rng = make_rng(55);
    double eq = 0.0, sym = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double m1 = uniform(rng, 1e-6, 1.0), m2 = uniform(rng, 1e-6, 1.0);
      const double b = std::exp(uniform(rng, -3.0, 3.0));
      eq = std::max(eq, std::abs(metrics::hbeta(m1, m1, b) - m1));
      sym = std::max(sym, std::abs(metrics::hbeta(m1, m2, b) - metrics::hbeta(m2, m1, 1.0 / b)));
    }
    d << "hbeta(0.8,0.4,1) = " << text::format_double(h) << ", equal-argument gap " << eq << ", symmetry gap " << sym;
    return e1 <= 1e-12 && eq <= 1e-12 && sym <= 1e-12;
  });
}

/// Aggregate row of a single-cell grid.
inline Record single_cell(const GridSpec& spec, const tasks::Task& task, const AcceptanceOptions& opt) {
  auto res = run_grid(spec, task, [&](const Cell& c, std::uint64_t seed, const RunResult& r, std::size_t, std::size_t) {
    if (opt.log)
      opt.log("  " + task.name() + " " + c.label() + " seed " + std::to_string(seed) + ": metric " +
              fx(r.main_metric) + " violation " + fx(r.violation_rate) + " (" + fx(r.wall_seconds, 1) + " s)");
  });
  if (res.cells.size() != 1) throw ContractViolation("expected a single cell");
  auto t = res.table();
  return t.rows.back();
}

inline GridSpec one_cell(const std::string& task, const std::string& loss, const std::string& strategy,
                         const std::string& mechanism, const AcceptanceOptions& opt) {
  auto g = default_grid(task);
  g.losses = {loss};
  g.strategies = {constraint::Strategy::parse(strategy)};
  g.mechanisms = {integrate::parse_mechanism(mechanism)};
  g.workers = opt.workers;
  return g;
}

struct SteChecks {
  CheckResult baseline, injection;
};

inline SteChecks ste(const AcceptanceOptions& opt) {
  auto task = tasks::make_task("ste", default_grid("ste").base.data);
  Record base;
  SteChecks out;
  out.baseline = timed(6, "STE baseline band", 600.0, [&](std::ostream& d) {
    base = single_cell(one_cell("ste", "none", "top1", "static", opt), *task, opt);
    d << "5 seeds: token accuracy " << fx(base.main_metric) << " (> 0.60), violation " << fx(base.violation_rate)
      << " (> 0.15)";
    return base.status == "ok" && base.main_metric > 0.60 && base.violation_rate > 0.15;
  });
  out.injection = timed(7, "STE constraint injection (real, sample-10, proj-both)", 1800.0, [&](std::ostream& d) {
    if (!base.has_metrics) {
      d << "no baseline";
      return false;
    }
    auto r = single_cell(one_cell("ste", "real", "sample-10", "proj-both", opt), *task, opt);
    const double reduction = 1.0 - r.violation_rate / base.violation_rate;
    d << "violation " << fx(base.violation_rate) << " -> " << fx(r.violation_rate) << " (reduction "
      << fx(100 * reduction, 1) << "% >= 30%), token accuracy " << fx(base.main_metric) << " -> "
      << fx(r.main_metric) << " (>= " << fx(base.main_metric - 0.05) << ")";
    return r.status == "ok" && reduction >= 0.30 && r.main_metric >= base.main_metric - 0.05;
  });
  return out;
}

inline CheckResult hierlabel_psl(const AcceptanceOptions& opt) {
  return timed(8, "hierlabel soft + exhaustive + static", 300.0, [&](std::ostream& d) {
    auto task = tasks::make_task("hierlabel", default_grid("hierlabel").base.data);
    auto base = single_cell(one_cell("hierlabel", "none", "top1", "static", opt), *task, opt);
    auto r = single_cell(one_cell("hierlabel", "soft", "exhaustive", "static", opt), *task, opt);
    const double reduction = base.violation_rate > 0 ? 1.0 - r.violation_rate / base.violation_rate : 0.0;
    d << "violation " << fx(base.violation_rate) << " -> " << fx(r.violation_rate) << " (reduction "
      << fx(100 * reduction, 1) << "% >= 50%), subset accuracy " << fx(base.main_metric) << " -> " << fx(r.main_metric)
      << " (within 0.03)";
    return base.status == "ok" && r.status == "ok" && reduction >= 0.5 &&
           std::abs(r.main_metric - base.main_metric) <= 0.03;
  });
}

/// Every monotone run of the full hierlabel grid: lambda starts at 0 and never decreases.
inline CheckResult monotone_trace(const AcceptanceOptions& opt) {
  return timed(9, "monotone lambda trace", 1800.0, [&](std::ostream& d) {
    auto g = default_grid("hierlabel");
    g.mechanisms = {integrate::Mechanism::Monotone};
    g.losses = {"soft", "binary", "real"};
    g.workers = opt.workers;
    auto task = tasks::make_task("hierlabel", g.base.data);
    auto res = run_grid(g, *task);
    std::size_t runs = 0, steps = 0, bad = 0;
    double last_max = 0.0;
    for (const auto& c : res.cells)
      for (const auto& r : c.runs) {
        ++runs;
        steps += r.trace.size();
        bool ok = !r.trace.empty() && r.trace.front().lambda == 0.0;
        for (std::size_t i = 1; i < r.trace.size(); ++i) ok = ok && r.trace[i].lambda >= r.trace[i - 1].lambda;
        if (!r.trace.empty()) last_max = std::max(last_max, r.trace.back().lambda);
        bad += ok ? 0 : 1;
      }
    d << runs << " runs, " << steps << " steps, " << bad << " violating traces, largest final lambda " << fx(last_max);
    return runs > 0 && bad == 0 && last_max > 0.0;
  });
}

/// CSV row with the cell-identity columns and wall_seconds blanked.
inline std::string comparable_row(Record r) {
  r.loss = r.strategy = r.mechanism = "";
  r.k = 0;
  r.wall_seconds = 0.0;
  std::ostringstream os;
  write_csv_row(os, r);
  return os.str();
}

inline CheckResult degeneration(const AcceptanceOptions& opt) {
  return timed(10, "static lambda2 = 0 equals baseline", 600.0, [&](std::ostream& d) {
    bool all = true;
    const char* sep = "";
    for (const auto& [name, loss, strategy] : {std::tuple{"ste", "real", "sample-10"},
                                               std::tuple{"hierlabel", "soft", "exhaustive"},
                                               std::tuple{"pairrel", "binary", "sample-5"}}) {
      auto g = one_cell(name, "none", "top1", "static", opt);
      g.seeds = {1, 2};
      auto task = tasks::make_task(name, g.base.data);
      auto base = run_grid(g, *task).table();
      g = one_cell(name, loss, strategy, "static", opt);
      g.seeds = {1, 2};
      g.base.integrator.lambda2 = 0.0;
      auto stat = run_grid(g, *task).table();
      bool same = base.rows.size() == stat.rows.size();
      for (std::size_t i = 0; same && i < base.rows.size(); ++i)
        same = comparable_row(base.rows[i]) == comparable_row(stat.rows[i]);
      d << sep << name << " " << loss << "/" << strategy << (same ? " identical" : " DIFFERS");
      sep = "; ";
      all = all && same;
    }
    return all;
  });
}

inline const char* kDeterminismGrid = R"(# small grid used by the determinism check
task = pairrel
seeds = [1, 2]

[train]
epochs = 4

[grid]
loss = [none, soft, real]
strategy = [top1, sample-5, exhaustive]
mechanism = [static, monotone, proj-both]
)";

inline std::string csv_without_wall(const Table& t) {
  Table copy = t;
  for (auto& r : copy.rows) r.wall_seconds = 0.0;
  std::ostringstream os;
  write_csv(os, copy);
  return os.str();
}

/// Same grid file twice: once serially, once on several workers.
inline CheckResult determinism(const AcceptanceOptions& opt) {
  return timed(11, "grid determinism", 600.0, [&](std::ostream& d) {
    auto spec = grid_from_config(ConfigFile::parse(kDeterminismGrid, "determinism.conf"));
    auto task = tasks::make_task(spec.base.task, spec.base.data);
    spec.workers = 1;
    const auto a = csv_without_wall(run_grid(spec, *task).table());
    spec.workers = std::max<std::size_t>(opt.workers, 3);
    auto task2 = tasks::make_task(spec.base.task, spec.base.data);
    const auto b = csv_without_wall(run_grid(spec, *task2).table());
    d << std::count(a.begin(), a.end(), '\n') - 1 << " rows, " << a.size() << " bytes; serial vs "
      << spec.workers << " workers " << (a == b ? "byte-identical" : "DIFFER");
    return a == b;
  });
}

}  // namespace accept

/// Runs the checks in order, reporting each result as soon as it is known.
inline std::vector<CheckResult> run_acceptance(const AcceptanceOptions& opt,
                                               const std::function<void(const CheckResult&)>& report = {}) {
  std::vector<CheckResult> out;
  auto add = [&](CheckResult r) {
    if (report) report(r);
    out.push_back(std::move(r));
  };
  add(accept::gradients());
  add(accept::boundary());
  add(accept::projection());
  add(accept::reinforce());
  add(accept::hbeta_exact());
  if (opt.training) {
    auto s = accept::ste(opt);
    add(s.baseline);
    add(s.injection);
    add(accept::hierlabel_psl(opt));
  }
  add(accept::monotone_trace(opt));
  add(accept::degeneration(opt));
  add(accept::determinism(opt));
  return out;
}

inline std::string format_check(const CheckResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " " + r.name + ": " +
         r.detail + " [" + text::format_fixed(r.seconds, 1) + " s]";
}

}  // namespace conlearn::harness
