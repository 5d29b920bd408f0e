#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "conlearn/errors.hpp"
#include "conlearn/harness/config.hpp"
#include "conlearn/harness/run.hpp"
#include "conlearn/text.hpp"

namespace conlearn::harness {

/// One CSV row: a single run (seed = "<n>") or a cell aggregate (seed = "AGG").
struct Record {
  std::string task, loss, strategy;
  std::size_t k = 0;
  std::string mechanism, logic, seed;
  bool has_metrics = false;  // false for failed runs and all-failed aggregates
  double main_metric = 0.0, violation_rate = 0.0;
  std::vector<double> hbeta;
  double lambda_final = 0.0, steps = 0.0, wall_seconds = 0.0;
  std::string status = "ok";
  bool has_std = false;  // aggregates only
  double main_metric_std = 0.0, violation_rate_std = 0.0, lambda_final_std = 0.0;
  std::vector<double> hbeta_std;

  bool is_aggregate() const { return seed == "AGG"; }
  std::string cell_label() const {
    return loss + "/" + strategy + "/" + mechanism + "/" + logic;
  }
};

struct Table {
  std::vector<double> betas;
  std::vector<Record> rows;
};

inline std::string hbeta_column(double beta) { return "hbeta_" + text::format_double(beta); }

inline std::vector<std::string> csv_header(const std::vector<double>& betas) {
  std::vector<std::string> h{"task", "loss_type", "strategy", "k", "mechanism", "logic", "seed", "main_metric",
                             "violation_rate"};
  for (double b : betas) h.push_back(hbeta_column(b));
  for (const char* s : {"lambda_final", "steps", "wall_seconds", "status", "main_metric_std", "violation_rate_std"})
    h.push_back(s);
  for (double b : betas) h.push_back(hbeta_column(b) + "_std");
  h.push_back("lambda_final_std");
  return h;
}

namespace detail {

inline std::string csv_field(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line, int n) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw InputError("csv line " + std::to_string(n) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

inline std::string num(double v) { return text::format_double(v); }

}  // namespace detail

inline void write_csv_header(std::ostream& os, const std::vector<double>& betas) {
  const auto h = csv_header(betas);
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const Record& r) {
  using detail::num;
  std::vector<std::string> f{r.task, r.loss, r.strategy, std::to_string(r.k), r.mechanism, r.logic, r.seed};
  f.push_back(r.has_metrics ? num(r.main_metric) : "");
  f.push_back(r.has_metrics ? num(r.violation_rate) : "");
  for (double h : r.hbeta) f.push_back(r.has_metrics ? num(h) : "");
  f.push_back(r.has_metrics ? num(r.lambda_final) : "");
  f.push_back(num(r.steps));
  f.push_back(num(r.wall_seconds));
  f.push_back(r.status);
  const bool s = r.has_std;
  f.push_back(s ? num(r.main_metric_std) : "");
  f.push_back(s ? num(r.violation_rate_std) : "");
  for (std::size_t i = 0; i < r.hbeta.size(); ++i) f.push_back(s ? num(r.hbeta_std.at(i)) : "");
  f.push_back(s ? num(r.lambda_final_std) : "");
  for (std::size_t i = 0; i < f.size(); ++i) os << (i ? "," : "") << detail::csv_field(f[i]);
  os << '\n';
}

inline void write_csv(std::ostream& os, const Table& t) {
  write_csv_header(os, t.betas);
  for (const auto& r : t.rows) {
    if (r.hbeta.size() != t.betas.size()) throw ContractViolation("record has the wrong number of hbeta values");
    write_csv_row(os, r);
  }
}

/// Parses a CSV produced by write_csv; the beta grid is read back from the header.
inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw InputError("csv: empty input");
  const auto header = detail::csv_split(line, 1);
  std::size_t nb = 0;
  while (9 + nb < header.size() && header[9 + nb].rfind("hbeta_", 0) == 0) {
    t.betas.push_back(text::parse_double(header[9 + nb].substr(6)));
    ++nb;
  }
  if (header != csv_header(t.betas)) throw InputError("csv: unexpected header");
  int n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto f = detail::csv_split(line, n);
    if (f.size() != header.size()) throw InputError("csv line " + std::to_string(n) + ": wrong field count");
    auto d = [&](std::size_t i) {
      try {
        return text::parse_double(f[i]);
      } catch (const InputError&) {
        throw InputError("csv line " + std::to_string(n) + ": bad number in column " + header[i]);
      }
    };
    Record r;
    r.task = f[0];
    r.loss = f[1];
    r.strategy = f[2];
    r.k = static_cast<std::size_t>(d(3));
    r.mechanism = f[4];
    r.logic = f[5];
    r.seed = f[6];
    r.has_metrics = !f[7].empty();
    std::size_t i = 7;
    if (r.has_metrics) {
      r.main_metric = d(i);
      r.violation_rate = d(i + 1);
    }
    i += 2;
    for (std::size_t b = 0; b < nb; ++b, ++i) r.hbeta.push_back(r.has_metrics ? d(i) : 0.0);
    if (r.has_metrics) r.lambda_final = d(i);
    r.steps = d(i + 1);
    r.wall_seconds = d(i + 2);
    r.status = f[i + 3];
    i += 4;
    r.has_std = !f[i].empty();
    if (r.has_std) {
      r.main_metric_std = d(i);
      r.violation_rate_std = d(i + 1);
    }
    i += 2;
    for (std::size_t b = 0; b < nb; ++b, ++i) r.hbeta_std.push_back(r.has_std ? d(i) : 0.0);
    if (r.has_std) r.lambda_final_std = d(i);
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline Record run_record(const Cell& cell, const std::string& task, std::uint64_t seed, const RunResult& res,
                         std::size_t beta_count) {
  Record r;
  r.task = task;
  r.loss = cell.loss();
  r.strategy = cell.strategy();
  r.k = cell.k();
  r.mechanism = cell.mechanism();
  r.logic = cell.logic();
  r.seed = std::to_string(seed);
  r.has_metrics = res.ok();
  r.main_metric = res.main_metric;
  r.violation_rate = res.violation_rate;
  r.hbeta = res.hbeta;
  r.hbeta.resize(beta_count, 0.0);
  r.lambda_final = res.lambda_final;
  r.steps = static_cast<double>(res.steps);
  r.wall_seconds = res.wall_seconds;
  r.status = res.status;
  return r;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population standard deviation: sqrt(mean((x - mean)^2)).
inline double population_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

/// Mean and population std over the successful runs of one cell.
inline Record aggregate(const std::vector<Record>& runs) {
  if (runs.empty()) throw ContractViolation("aggregate: no runs");
  Record a = runs.front();
  a.seed = "AGG";
  std::vector<const Record*> ok;
  std::vector<double> steps, wall;
  for (const auto& r : runs) {
    if (r.has_metrics) ok.push_back(&r);
    steps.push_back(r.steps);
    wall.push_back(r.wall_seconds);
  }
  a.steps = mean_of(steps);
  a.wall_seconds = mean_of(wall);
  const std::size_t failed = runs.size() - ok.size();
  a.status = failed == 0 ? "ok" : "failed: " + std::to_string(failed) + "/" + std::to_string(runs.size()) + " runs";
  a.has_metrics = a.has_std = !ok.empty();
  if (ok.empty()) return a;
  auto field = [&](auto get) {
    std::vector<double> v;
    for (const auto* r : ok) v.push_back(get(*r));
    return std::pair{mean_of(v), population_std(v)};
  };
  std::tie(a.main_metric, a.main_metric_std) = field([](const Record& r) { return r.main_metric; });
  std::tie(a.violation_rate, a.violation_rate_std) = field([](const Record& r) { return r.violation_rate; });
  std::tie(a.lambda_final, a.lambda_final_std) = field([](const Record& r) { return r.lambda_final; });
  a.hbeta_std.assign(a.hbeta.size(), 0.0);
  for (std::size_t b = 0; b < a.hbeta.size(); ++b)
    std::tie(a.hbeta[b], a.hbeta_std[b]) = field([b](const Record& r) { return r.hbeta[b]; });
  return a;
}

struct CellOutcome {
  Cell cell;
  std::vector<std::uint64_t> seeds;
  std::vector<RunResult> runs;  // aligned with seeds
};

struct GridResult {
  std::string task;
  std::vector<double> betas;
  std::vector<CellOutcome> cells;
  std::vector<std::string> skipped;

  bool any_failed() const {
    for (const auto& c : cells)
      for (const auto& r : c.runs)
        if (!r.ok()) return true;
    return false;
  }

  /// Run rows of each cell followed by its aggregate row, in grid order.
  Table table() const {
    Table t{betas, {}};
    for (const auto& c : cells) {
      std::vector<Record> rows;
      for (std::size_t i = 0; i < c.runs.size(); ++i)
        rows.push_back(run_record(c.cell, task, c.seeds[i], c.runs[i], betas.size()));
      auto agg = aggregate(rows);
      for (auto& r : rows) t.rows.push_back(std::move(r));
      t.rows.push_back(std::move(agg));
    }
    return t;
  }
};

/// Called after each finished run, possibly from a worker thread (calls are serialized).
using RunCallback = std::function<void(const Cell&, std::uint64_t seed, const RunResult&, std::size_t done,
                                       std::size_t total)>;

/// Runs every (cell, seed) pair on up to `workers` threads. Runs share only
/// the read-only task, so results do not depend on scheduling.
inline GridResult run_grid(const GridSpec& spec, const tasks::Task& task, const RunCallback& on_run = {}) {
  auto ex = expand(spec, task);
  if (ex.cells.empty()) throw ConfigError("grid has no runnable cells");
  GridResult out{task.name(), spec.base.betas, {}, ex.skipped};
  for (auto& c : ex.cells) out.cells.push_back({c, spec.seeds, std::vector<RunResult>(spec.seeds.size())});

  const std::size_t total = out.cells.size() * spec.seeds.size();
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < total;) {
      auto& cell = out.cells[j / spec.seeds.size()];
      const std::size_t s = j % spec.seeds.size();
      RunConfig cfg = cell.cell.cfg;
      cfg.seed = spec.seeds[s];
      cell.runs[s] = run_experiment(cfg, task);
      std::lock_guard lock(mu);
      ++done;
      if (on_run) on_run(cell.cell, cfg.seed, cell.runs[s], done, total);
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(spec.workers, total));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

/// Per-step diagnostics of one run, one line per optimizer step.
inline void write_trace(std::ostream& os, const RunResult& r) {
  os << "step,lambda,violation,orthogonality_residual,con_projected,sup_projected\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& s = r.trace[i];
    os << i << ',' << text::format_double(s.lambda) << ',' << text::format_double(s.violation) << ','
       << text::format_double(s.orthogonality_residual) << ',' << (s.con_projected ? 1 : 0) << ','
       << (s.sup_projected ? 1 : 0) << '\n';
  }
}

inline std::string trace_file_name(const Cell& c, std::uint64_t seed) {
  return c.loss() + "_" + c.strategy() + "_" + c.mechanism() + "_" + c.logic() + "_seed" + std::to_string(seed) +
         ".csv";
}

/// Writes <dir>/results.csv and, for constrained runs, <dir>/traces/<task>/*.csv.
inline std::filesystem::path write_outputs(const GridResult& g, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto csv = dir / "results.csv";
  {
    std::ofstream f(csv);
    if (!f) throw InputError("cannot write " + csv.string());
    write_csv(f, g.table());
  }
  const auto tdir = dir / "traces" / g.task;
  for (const auto& c : g.cells) {
    if (!c.cell.cfg.loss) continue;
    fs::create_directories(tdir);
    for (std::size_t i = 0; i < c.runs.size(); ++i) {
      std::ofstream f(tdir / trace_file_name(c.cell, c.seeds[i]));
      write_trace(f, c.runs[i]);
    }
  }
  return csv;
}

/// Rows eligible for ranking and plotting: aggregates when the table has any,
/// otherwise the individual runs; rows without metrics are dropped.
inline std::vector<Record> summary_rows(const Table& t, const std::string& task) {
  bool any_agg = false;
  for (const auto& r : t.rows) any_agg |= r.task == task && r.is_aggregate();
  std::vector<Record> out;
  for (const auto& r : t.rows)
    if (r.task == task && r.is_aggregate() == any_agg && r.has_metrics) out.push_back(r);
  return out;
}

inline std::vector<std::string> tasks_in(const Table& t) {
  std::vector<std::string> out;
  for (const auto& r : t.rows)
    if (std::find(out.begin(), out.end(), r.task) == out.end()) out.push_back(r.task);
  return out;
}

/// The `n` best rows of one mechanism by H_beta (beta index `b`); ties break on
/// the cell label, then the seed, so the ranking depends only on the CSV.
inline std::vector<Record> top_by_hbeta(const Table& t, const std::string& task, const std::string& mechanism,
                                        std::size_t b, std::size_t n = 5) {
  if (b >= t.betas.size()) throw ContractViolation("top_by_hbeta: beta index out of range");
  std::vector<Record> rows;
  for (auto& r : summary_rows(t, task))
    if (r.mechanism == mechanism) rows.push_back(r);
  std::stable_sort(rows.begin(), rows.end(), [b](const Record& x, const Record& y) {
    if (x.hbeta[b] != y.hbeta[b]) return x.hbeta[b] > y.hbeta[b];
    if (x.cell_label() != y.cell_label()) return x.cell_label() < y.cell_label();
    return x.seed < y.seed;
  });
  if (rows.size() > n) rows.resize(n);
  return rows;
}

/// Mechanisms present for a task, in canonical order (baseline first).
inline std::vector<std::string> mechanisms_in(const std::vector<Record>& rows) {
  std::vector<std::string> order{"none"};
  for (auto m : all_mechanisms()) order.push_back(integrate::to_string(m));
  for (const auto& r : rows)
    if (std::find(order.begin(), order.end(), r.mechanism) == order.end()) order.push_back(r.mechanism);
  std::vector<std::string> out;
  for (const auto& m : order)
    for (const auto& r : rows)
      if (r.mechanism == m) {
        out.push_back(m);
        break;
      }
  return out;
}

/// CSV of the top-n cells per (task, beta, mechanism).
inline void write_top(std::ostream& os, const Table& t, std::size_t n = 5) {
  os << "task,beta,mechanism,rank,loss_type,strategy,k,logic,seed,hbeta,main_metric,violation_rate\n";
  for (const auto& task : tasks_in(t))
    for (std::size_t b = 0; b < t.betas.size(); ++b)
      for (const auto& m : mechanisms_in(summary_rows(t, task))) {
        const auto top = top_by_hbeta(t, task, m, b, n);
        for (std::size_t i = 0; i < top.size(); ++i) {
          const auto& r = top[i];
          os << task << ',' << text::format_double(t.betas[b]) << ',' << m << ',' << i + 1 << ',' << r.loss << ','
             << r.strategy << ',' << r.k << ',' << r.logic << ',' << r.seed << ',' << text::format_double(r.hbeta[b])
             << ',' << text::format_double(r.main_metric) << ',' << text::format_double(r.violation_rate) << '\n';
        }
      }
}

}  // namespace conlearn::harness
