#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "conlearn/harness/config.hpp"
#include "conlearn/harness/grid.hpp"
#include "conlearn/harness/plot.hpp"

using namespace conlearn;
using namespace conlearn::harness;
namespace fs = std::filesystem;

namespace {

const char* kGrid = R"(# comment line
task = pairrel
seeds = [4, 7, 9]   # trailing comment

[train]
epochs = 2
lr = 0.02

[grid]
loss = [none, "real"]
strategy = [sample-3]
mechanism = [proj-both]

[output]
betas = [0.5, 2]
)";

GridSpec small_grid() { return grid_from_config(ConfigFile::parse(kGrid, "small.conf")); }

const tasks::Task& pairrel_task() {
  static auto t = tasks::make_task("pairrel", default_grid("pairrel").base.data);
  return *t;
}

std::string error_of(const std::string& text) {
  try {
    grid_from_config(ConfigFile::parse(text, "t.conf"));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

Record make_record(std::string seed, double m, double v, std::vector<double> h) {
  Record r;
  r.task = "ste";
  r.loss = "real";
  r.strategy = "sample-10";
  r.k = 10;
  r.mechanism = "proj-both";
  r.logic = "goedel-s";
  r.seed = std::move(seed);
  r.has_metrics = true;
  r.main_metric = m;
  r.violation_rate = v;
  r.hbeta = std::move(h);
  r.lambda_final = 0.02;
  r.steps = 94;
  r.wall_seconds = 1.5;
  return r;
}

}  // namespace

TEST(Config, ParsesSectionsListsAndQuotes) {
  auto cf = ConfigFile::parse(kGrid, "small.conf");
  EXPECT_EQ(cf.at("task").items, std::vector<std::string>{"pairrel"});
  EXPECT_TRUE(cf.at("seeds").is_list);
  EXPECT_EQ(cf.at("seeds").items, (std::vector<std::string>{"4", "7", "9"}));
  EXPECT_EQ(cf.at("grid.loss").items, (std::vector<std::string>{"none", "real"}));
  EXPECT_EQ(cf.at("train.lr").line, 7);
}

TEST(Config, BuildsGridOverTaskDefaults) {
  auto g = small_grid();
  EXPECT_EQ(g.base.task, "pairrel");
  EXPECT_EQ(g.seeds, (std::vector<std::uint64_t>{4, 7, 9}));
  EXPECT_EQ(g.base.epochs, 2u);
  EXPECT_EQ(g.base.lr, 0.02);
  EXPECT_EQ(g.base.batch_size, default_grid("pairrel").base.batch_size);
  EXPECT_EQ(g.base.betas, (std::vector<double>{0.5, 2.0}));
  ASSERT_EQ(g.strategies.size(), 1u);
  EXPECT_EQ(g.strategies[0], constraint::Strategy::sampling(3));
}

TEST(Config, ErrorsNameFileAndLine) {
  EXPECT_NE(error_of("task = ste\ntask = bio\n").find("t.conf:2: duplicate key 'task'"), std::string::npos);
  EXPECT_NE(error_of("task = ste\n[train]\nepoch = 3\n").find("t.conf:3: unknown key 'train.epoch'"), std::string::npos);
  EXPECT_NE(error_of("task = ste\n[train]\nepochs = many\n").find("t.conf:3"), std::string::npos);
  EXPECT_NE(error_of("task = ste\n[grid]\nloss = [soft, bogus]\n").find("t.conf:3"), std::string::npos);
  EXPECT_NE(error_of("task = ste\nseeds = [1, 2\n").find("unterminated list"), std::string::npos);
  EXPECT_NE(error_of("[train\n").find("unterminated section"), std::string::npos);
  EXPECT_NE(error_of("task\n").find("expected 'key = value'"), std::string::npos);
  EXPECT_NE(error_of("seeds = [1]\n").find("missing key 'task'"), std::string::npos);
  EXPECT_NE(error_of("task = chess\n").find("unknown task"), std::string::npos);
  EXPECT_NE(error_of("task = ste\n[train]\nlr = [1, 2]\n").find("single value"), std::string::npos);
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& task : tasks::task_names()) {
    const auto path = fs::path(CONLEARN_SOURCE_DIR) / "configs" / (task + ".conf");
    SCOPED_TRACE(path.string());
    auto g = grid_from_config(ConfigFile::load(path.string()));
    auto d = default_grid(task);
    EXPECT_EQ(g.base.task, task);
    EXPECT_EQ(g.base.epochs, d.base.epochs);
    EXPECT_EQ(g.base.lr, d.base.lr);
    EXPECT_EQ(g.base.integrator.lambda2, d.base.integrator.lambda2);
    EXPECT_EQ(g.seeds.size(), 5u);
    EXPECT_EQ(g.base.betas, (std::vector<double>{0.3, 1.0, 3.0}));
  }
}

TEST(Expand, SteGridHasFortyConstrainedCells) {
  auto g = default_grid("ste");
  g.losses = {"soft", "binary", "real"};
  g.strategies.push_back(constraint::Strategy::exhaustive());
  auto task = tasks::make_task("ste", {100, 50, 0, false});
  auto ex = expand(g, *task);
  EXPECT_EQ(ex.cells.size(), 40u);
  EXPECT_EQ(ex.skipped.size(), 3u);  // soft, binary/exhaustive, real/exhaustive
}

TEST(Expand, SoftTasksGetSixtyFiveCells) {
  auto g = default_grid("pairrel");
  g.losses = {"soft", "binary", "real"};
  auto ex = expand(g, pairrel_task());
  EXPECT_EQ(ex.cells.size(), 0u + 5 * 5 + 4 * 5 + 4 * 5);
  EXPECT_EQ(ex.skipped.size(), 2u);
}

TEST(Expand, BioSkipsExhaustive) {
  auto g = default_grid("bio");
  g.strategies.push_back(constraint::Strategy::exhaustive());
  auto task = tasks::make_task("bio", {40, 20, 0, false});
  auto ex = expand(g, *task);
  ASSERT_FALSE(ex.skipped.empty());
  for (const auto& c : ex.cells) EXPECT_NE(c.strategy(), "exhaustive");
}

TEST(Run, InvalidConfigRejectedBeforeTraining) {
  auto task = tasks::make_task("ste", {100, 50, 0, false});
  RunConfig c;
  c.task = "ste";
  c.loss = constraint::LossType::Soft;
  EXPECT_THROW(run_experiment(c, *task), ConfigError);
  c.loss = constraint::LossType::Real;
  c.strategy = constraint::Strategy::exhaustive();
  EXPECT_THROW(run_experiment(c, *task), ConfigError);
  c.strategy = constraint::Strategy::top1();
  c.lr = 0.0;
  EXPECT_THROW(run_experiment(c, *task), ConfigError);
  c.lr = 0.01;
  c.task = "pairrel";
  EXPECT_THROW(run_experiment(c, *task), ConfigError);
}

TEST(Grid, TwoCellsThreeSeedsGiveSixRunRowsAndTwoAggregates) {
  auto res = run_grid(small_grid(), pairrel_task());
  auto t = res.table();
  ASSERT_EQ(t.rows.size(), 8u);
  EXPECT_FALSE(res.any_failed());
  std::size_t agg = 0;
  for (const auto& r : t.rows) agg += r.is_aggregate();
  EXPECT_EQ(agg, 2u);
  EXPECT_EQ(t.rows[0].loss, "none");
  EXPECT_EQ(t.rows[0].strategy, "none");
  EXPECT_EQ(t.rows[0].mechanism, "none");
  EXPECT_EQ(t.rows[0].lambda_final, 0.0);
  EXPECT_EQ(t.rows[4].loss, "real");
  EXPECT_EQ(t.rows[4].k, 3u);
  EXPECT_EQ(t.rows[4].lambda_final, 1.0);

  // Aggregates are recomputable from the run rows.
  for (std::size_t c = 0; c < 2; ++c) {
    const auto& a = t.rows[4 * c + 3];
    double mean = 0.0, h = 0.0;
    for (std::size_t s = 0; s < 3; ++s) {
      mean += t.rows[4 * c + s].main_metric / 3.0;
      h += t.rows[4 * c + s].hbeta[1] / 3.0;
    }
    EXPECT_NEAR(a.main_metric, mean, 1e-12);
    EXPECT_NEAR(a.hbeta[1], h, 1e-12);
    double var = 0.0;
    for (std::size_t s = 0; s < 3; ++s) var += std::pow(t.rows[4 * c + s].main_metric - mean, 2) / 3.0;
    EXPECT_NEAR(a.main_metric_std, std::sqrt(var), 1e-12);
  }
}

TEST(Grid, ParallelWorkersGiveIdenticalRows) {
  auto spec = small_grid();
  auto serial = run_grid(spec, pairrel_task()).table();
  spec.workers = 4;
  auto parallel = run_grid(spec, pairrel_task()).table();
  ASSERT_EQ(serial.rows.size(), parallel.rows.size());
  for (auto* t : {&serial, &parallel})
    for (auto& r : t->rows) r.wall_seconds = 0;
  std::ostringstream a, b;
  write_csv(a, serial);
  write_csv(b, parallel);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Grid, MonotoneTraceStartsAtZero) {
  auto spec = small_grid();
  spec.losses = {"real"};
  spec.mechanisms = {integrate::Mechanism::Monotone};
  spec.seeds = {1};
  auto res = run_grid(spec, pairrel_task());
  const auto& tr = res.cells.at(0).runs.at(0).trace;
  ASSERT_FALSE(tr.empty());
  EXPECT_EQ(tr.front().lambda, 0.0);
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GE(tr[i].lambda, tr[i - 1].lambda);
  EXPECT_EQ(res.table().rows[0].lambda_final, res.cells[0].runs[0].lambda_final);
}

TEST(Csv, HeaderFollowsSchema) {
  std::ostringstream os;
  write_csv_header(os, {0.3, 1.0, 3.0});
  EXPECT_EQ(os.str(),
            "task,loss_type,strategy,k,mechanism,logic,seed,main_metric,violation_rate,hbeta_0.3,hbeta_1,hbeta_3,"
            "lambda_final,steps,wall_seconds,status,main_metric_std,violation_rate_std,hbeta_0.3_std,hbeta_1_std,"
            "hbeta_3_std,lambda_final_std\n");
}

TEST(Csv, RoundTripsIncludingFailuresAndQuotes) {
  Table t{{0.3, 1.0}, {}};
  t.rows.push_back(make_record("1", 0.75, 0.25, {0.7, 0.75}));
  auto bad = make_record("2", 0, 0, {0, 0});
  bad.has_metrics = false;
  bad.status = "failed: non-finite value in \"tanh\", step 3";
  t.rows.push_back(bad);
  t.rows.push_back(aggregate({t.rows[0], t.rows[1]}));
  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  auto back = read_csv(is);
  std::ostringstream os2;
  write_csv(os2, back);
  EXPECT_EQ(os.str(), os2.str());
  EXPECT_EQ(back.rows[1].status, bad.status);
  EXPECT_EQ(back.rows[2].status, "failed: 1/2 runs");
  EXPECT_EQ(back.rows[2].main_metric, 0.75);
  EXPECT_EQ(back.rows[2].main_metric_std, 0.0);
}

TEST(Csv, MalformedInputRejected) {
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), InputError);
  std::istringstream wrong("a,b,c\n");
  EXPECT_THROW(read_csv(wrong), InputError);
}

TEST(Aggregate, PopulationStd) {
  auto a = aggregate({make_record("1", 0.5, 0.1, {0.1}), make_record("2", 0.7, 0.3, {0.3})});
  EXPECT_NEAR(a.main_metric, 0.6, 1e-15);
  EXPECT_NEAR(a.main_metric_std, 0.1, 1e-15);
  EXPECT_NEAR(a.hbeta_std[0], 0.1, 1e-15);
  EXPECT_EQ(a.seed, "AGG");
}

TEST(Top, RankingIsReproducibleFromCsv) {
  Table t{{1.0}, {}};
  const double hs[] = {0.3, 0.9, 0.5, 0.9, 0.1, 0.7, 0.8};
  for (int i = 0; i < 7; ++i) {
    auto r = make_record("AGG", 0.5, 0.5, {hs[i]});
    r.strategy = "sample-" + std::to_string(i);
    t.rows.push_back(r);
  }
  auto other = make_record("AGG", 0.5, 0.5, {0.99});
  other.mechanism = "static";
  t.rows.push_back(other);
  auto top = top_by_hbeta(t, "ste", "proj-both", 0);
  ASSERT_EQ(top.size(), 5u);
  EXPECT_EQ(top[0].strategy, "sample-1");  // tie at 0.9 broken by label
  EXPECT_EQ(top[1].strategy, "sample-3");
  EXPECT_EQ(top[2].strategy, "sample-6");
  EXPECT_EQ(top[3].strategy, "sample-5");
  EXPECT_EQ(top[4].strategy, "sample-2");

  std::ostringstream os;
  write_csv(os, t);
  std::istringstream is(os.str());
  auto again = top_by_hbeta(read_csv(is), "ste", "proj-both", 0);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(again[i].strategy, top[i].strategy);
}

class PlotTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("conlearn_plot_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST_F(PlotTest, OneFilePerBetaWithExactHeights) {
  Table t{{0.3, 1.0, 3.0}, {}};
  t.rows.push_back(make_record("AGG", 0.8, 0.2, {0.61, 0.8, 0.123456789}));
  auto base = make_record("AGG", 0.7, 0.5, {0.6, 0.58, 0.52});
  base.loss = base.strategy = base.mechanism = "none";
  t.rows.push_back(base);
  auto soft = make_record("AGG", 0.7, 0.1, {0.65, 0.7, 0.75});
  soft.loss = "soft";
  t.rows.push_back(soft);
  auto files = emit_plots(t, dir);
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[2].filename(), "ste_hbeta_3.svg");
  const auto svg = slurp(files[2]);
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("data-value=\"0.123456789\""), std::string::npos);
  std::regex bar("class=\"bar\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), bar), std::sregex_iterator()), 3);
  // The baseline group comes first, then the mechanisms in canonical order.
  EXPECT_LT(svg.find("data-mechanism=\"none\""), svg.find("data-mechanism=\"proj-both\""));
}

TEST_F(PlotTest, SingleRecordSingleBarOnUnitAxis) {
  Table t{{1.0}, {make_record("3", 0.5, 0.5, {0.5})}};
  auto files = emit_plots(t, dir);
  ASSERT_EQ(files.size(), 1u);
  const auto svg = slurp(files[0]);
  std::regex bar("class=\"bar\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(svg.begin(), svg.end(), bar), std::sregex_iterator()), 1);
  EXPECT_NE(svg.find(">0.0</text>"), std::string::npos);
  EXPECT_NE(svg.find(">1.0</text>"), std::string::npos);
  EXPECT_NE(svg.find("height=\"150\""), std::string::npos);  // 0.5 of a 300 px axis
}

TEST_F(PlotTest, EmptyInputWritesNothing) {
  Table t{{0.3, 1.0, 3.0}, {}};
  EXPECT_TRUE(emit_plots(t, dir).empty());
  EXPECT_FALSE(fs::exists(dir));
  auto failed = make_record("1", 0, 0, {0, 0, 0});
  failed.has_metrics = false;
  t.rows.push_back(failed);
  EXPECT_TRUE(emit_plots(t, dir).empty());
}

TEST_F(PlotTest, OutputsWriteCsvAndTraces) {
  auto spec = small_grid();
  spec.seeds = {1};
  auto res = run_grid(spec, pairrel_task());
  const auto csv = write_outputs(res, dir);
  std::ifstream f(csv);
  auto t = read_csv(f);
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_TRUE(fs::exists(dir / "traces" / "pairrel" / "real_sample-3_proj-both_goedel-s_seed1.csv"));
}
