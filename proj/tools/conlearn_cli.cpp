#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "conlearn/harness/acceptance.hpp"
#include "conlearn/harness/config.hpp"
#include "conlearn/harness/grid.hpp"
#include "conlearn/harness/plot.hpp"
#include "conlearn/tasks/registry.hpp"

namespace fs = std::filesystem;
using namespace conlearn;
using namespace conlearn::harness;

namespace {

constexpr int kRunFailed = 1;
constexpr int kUsageError = 2;

struct Overrides {
  std::string config, task, out_dir;
  std::vector<std::string> loss, strategy, mechanism;
  std::vector<std::size_t> k;
  std::vector<std::uint64_t> seeds;
  std::size_t workers = 0;
};

void add_override_flags(CLI::App* app, Overrides& o) {
  app->add_option("--task", o.task, "task: ste, hierlabel, bio, pairrel");
  app->add_option("--loss", o.loss, "loss types (none, soft, binary, real)")->delimiter(',');
  app->add_option("--strategy", o.strategy, "strategies (top1, sample-K, sampling, exhaustive)")->delimiter(',');
  app->add_option("--k", o.k, "sample counts for sampling strategies")->delimiter(',')->check(CLI::PositiveNumber);
  app->add_option("--mechanism", o.mechanism, "mechanisms (static, monotone, proj-sup, proj-con, proj-both)")
      ->delimiter(',');
  app->add_option("--seeds", o.seeds, "seeds")->delimiter(',');
  app->add_option("--out-dir", o.out_dir, "output directory (overrides CONLEARN_OUT_DIR and output.dir)");
  app->add_option("--workers", o.workers, "maximum concurrent runs")->check(CLI::PositiveNumber);
}

std::vector<constraint::Strategy> resolve_strategies(const std::vector<std::string>& names,
                                                     const std::vector<std::size_t>& ks,
                                                     const std::vector<constraint::Strategy>& current) {
  std::vector<constraint::Strategy> base;
  bool sampling = false;
  if (names.empty()) {
    base = current;
  } else {
    for (const auto& n : names) {
      if (n == "sampling") {
        if (ks.empty()) throw ConfigError("strategy 'sampling' needs --k");
        base.push_back(constraint::Strategy::sampling(ks.front()));
      } else {
        base.push_back(constraint::Strategy::parse(n));
      }
    }
  }
  if (ks.empty()) return base;
  std::vector<constraint::Strategy> out;
  auto push = [&](const constraint::Strategy& s) {
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  };
  for (const auto& s : base) {
    if (s.kind != constraint::Strategy::Kind::Sampling) {
      push(s);
      continue;
    }
    sampling = true;
    for (auto k : ks) push(constraint::Strategy::sampling(k));
  }
  if (!sampling) throw ConfigError("--k given but no sampling strategy is selected");
  return out;
}

GridSpec build_spec(const Overrides& o) {
  GridSpec g;
  if (!o.config.empty()) {
    g = grid_from_config(ConfigFile::load(o.config), o.task);
  } else {
    if (o.task.empty()) throw ConfigError("give a config file or --task");
    if (!tasks::is_task(o.task)) throw ConfigError("unknown task '" + o.task + "'");
    g = default_grid(o.task);
  }
  if (!o.loss.empty()) {
    for (const auto& l : o.loss)
      if (l != "none") constraint::parse_loss_type(l);
    g.losses = o.loss;
  }
  g.strategies = resolve_strategies(o.strategy, o.k, g.strategies);
  if (!o.mechanism.empty()) {
    g.mechanisms.clear();
    for (const auto& m : o.mechanism) g.mechanisms.push_back(integrate::parse_mechanism(m));
  }
  if (!o.seeds.empty()) g.seeds = o.seeds;
  if (o.workers) g.workers = o.workers;
  if (!o.out_dir.empty()) {
    g.out_dir = o.out_dir;
  } else if (const char* env = std::getenv("CONLEARN_OUT_DIR"); env && *env) {
    g.out_dir = env;
  }
  return g;
}

std::string fx(double v) { return text::format_fixed(v, 4); }

int execute(const GridSpec& spec, bool single) {
  auto task = tasks::make_task(spec.base.task, spec.base.data);
  const auto ex = expand(spec, *task);
  for (const auto& s : ex.skipped) std::cerr << "skipped " << s << '\n';
  if (single && ex.cells.size() != 1)
    throw ConfigError("run expects exactly one cell but the settings give " + std::to_string(ex.cells.size()) +
                      "; narrow --loss/--strategy/--mechanism or use grid");
  std::cerr << spec.base.task << ": " << ex.cells.size() << " cells x " << spec.seeds.size() << " seeds on "
            << spec.workers << " worker(s)\n";
  auto res = run_grid(spec, *task, [](const Cell& c, std::uint64_t seed, const RunResult& r, std::size_t done,
                                      std::size_t total) {
    std::cerr << "[" << done << "/" << total << "] " << c.label() << " seed " << seed << ": metric "
              << fx(r.main_metric) << " violation " << fx(r.violation_rate) << " " << r.status << " ("
              << text::format_fixed(r.wall_seconds, 1) << " s)\n";
  });
  const auto csv = write_outputs(res, spec.out_dir);
  for (const auto& r : res.table().rows)
    if (r.is_aggregate())
      std::cout << r.cell_label() << ": metric " << fx(r.main_metric) << " +- " << fx(r.main_metric_std)
                << ", violation " << fx(r.violation_rate) << " +- " << fx(r.violation_rate_std) << ", " << r.status
                << '\n';
  std::cout << "wrote " << csv.string() << '\n';
  if (res.any_failed()) {
    std::cerr << "some runs failed; see the status column\n";
    return kRunFailed;
  }
  return 0;
}

int plot(const std::string& csv_path, std::string out_dir) {
  std::ifstream f(csv_path);
  if (!f) throw InputError("cannot open " + csv_path);
  const auto table = read_csv(f);
  if (out_dir.empty()) {
    const char* env = std::getenv("CONLEARN_OUT_DIR");
    out_dir = env && *env ? std::string(env) : fs::path(csv_path).parent_path().string();
    if (out_dir.empty()) out_dir = ".";
  }
  const auto files = emit_plots(table, out_dir);
  if (files.empty()) {
    std::cerr << "warning: no plottable rows in " << csv_path << "; no files written\n";
    return 0;
  }
  const auto top = fs::path(out_dir) / "top5.csv";
  std::ofstream tf(top);
  write_top(tf, table);
  for (const auto& p : files) std::cout << "wrote " << p.string() << '\n';
  std::cout << "wrote " << top.string() << '\n';
  return 0;
}

int selftest(bool full, std::size_t workers) {
  AcceptanceOptions opt;
  opt.training = full;
  opt.workers = workers;
  bool ok = true;
  run_acceptance(opt, [&](const CheckResult& r) {
    std::cout << format_check(r) << std::endl;
    ok = ok && r.passed;
  });
  return ok ? 0 : kRunFailed;
}

int export_data(const std::string& task_name, const std::string& out_dir) {
  auto g = default_grid(task_name);
  auto task = tasks::make_task(task_name, g.base.data);
  fs::create_directories(out_dir);
  std::ofstream tr(fs::path(out_dir) / (task_name + ".train.tsv"));
  std::ofstream te(fs::path(out_dir) / (task_name + ".test.tsv"));
  std::ofstream un(fs::path(out_dir) / (task_name + ".unlabeled.tsv"));
  task->write_data(tr, te, un);
  std::cout << "wrote " << task_name << ".{train,test,unlabeled}.tsv to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-injection experiment harness"};
  app.require_subcommand(1);

  Overrides run_o, grid_o;
  auto* run = app.add_subcommand("run", "train and evaluate one cell over its seeds");
  run->add_option("config", run_o.config, "config file (optional with --task)")->check(CLI::ExistingFile);
  add_override_flags(run, run_o);

  auto* grid = app.add_subcommand("grid", "run every cell of a grid file");
  grid->add_option("config", grid_o.config, "grid file")->required()->check(CLI::ExistingFile);
  add_override_flags(grid, grid_o);

  std::string csv, plot_dir;
  auto* pl = app.add_subcommand("plot", "draw SVG bar charts and the top-5 table from a results CSV");
  pl->add_option("csv", csv, "results CSV")->required()->check(CLI::ExistingFile);
  pl->add_option("--out-dir", plot_dir, "output directory (default: next to the CSV)");

  bool full = false;
  std::size_t st_workers = 1;
  auto* st = app.add_subcommand("selftest", "run the invariant suite");
  st->add_flag("--full", full, "also run the training-based checks (minutes)");
  st->add_option("--workers", st_workers, "maximum concurrent runs")->check(CLI::PositiveNumber);

  std::string data_task, data_dir = ".";
  auto* data = app.add_subcommand("export-data", "write a task's generated datasets as TSV");
  data->add_option("--task", data_task, "task")->required();
  data->add_option("--out-dir", data_dir, "output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return execute(build_spec(run_o), true);
    if (grid->parsed()) return execute(build_spec(grid_o), false);
    if (pl->parsed()) return plot(csv, plot_dir);
    if (st->parsed()) return selftest(full, st_workers);
    if (data->parsed()) return export_data(data_task, data_dir);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return 0;
}
