#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "conlearn/constraint/loss.hpp"
#include "conlearn/harness/run.hpp"
#include "conlearn/tasks/registry.hpp"

namespace {

using namespace conlearn;
using namespace conlearn::tasks;
using ad::Graph;
using ad::Tensor;

std::size_t count_b(std::string_view s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), 'b')); }

// ---- STE ------------------------------------------------------------------

TEST(Ste, TransduceExamples) {
  EXPECT_EQ(ste_transduce("azbzbz"), "zabbbbbb");
  EXPECT_EQ(ste_transduce(""), "");
  EXPECT_EQ(ste_transduce("bz"), "bbb");
  EXPECT_EQ(ste_transduce("az"), "za");
}

TEST(Ste, TransduceRejectsMalformed) {
  EXPECT_THROW(ste_transduce("a"), InputError);
  EXPECT_THROW(ste_transduce("azb"), InputError);
  EXPECT_THROW(ste_transduce("zz"), InputError);
  EXPECT_THROW(ste_transduce("azba"), InputError);
}

TEST(Ste, ViolationExamples) {
  EXPECT_EQ(ste_violation("azbz", "zabbb"), 0.0);
  EXPECT_NEAR(ste_violation("azbz", "zab"), 4.0 / 7.0, 1e-15);
  EXPECT_EQ(ste_violation("bzbz", "bbbbbb"), 0.0);
  EXPECT_EQ(ste_violation("bzbzbz", ""), 1.0);  // clamped
  EXPECT_EQ(ste_violation("", ""), 0.0);
}

TEST(Ste, GeneratedPairsSatisfyTransducerAndBounds) {
  auto rng = make_rng(5);
  auto train = gen_ste(true, 3000, rng);
  auto test = gen_ste(false, 3000, rng);
  std::set<std::size_t> train_lens, test_lens;
  for (const auto* d : {&train, &test})
    for (std::size_t i = 0; i < d->size(); ++i) {
      const auto& x = d->inputs[i];
      const auto& y = d->outputs[i];
      EXPECT_EQ(count_b(y), 3 * count_b(x));
      const std::size_t az = (x.size() / 2) - count_b(x);
      EXPECT_EQ(y.size(), 2 * az + 3 * count_b(x));
      EXPECT_EQ(ste_violation(x, y), 0.0);
      (d == &train ? train_lens : test_lens).insert(x.size());
    }
  EXPECT_EQ(train_lens, (std::set<std::size_t>{6, 8, 10, 12}));
  EXPECT_EQ(test_lens, (std::set<std::size_t>{6, 8, 10, 12, 14, 16}));
}

TEST(Ste, GenerationIsDeterministic) {
  auto r1 = make_rng(77), r2 = make_rng(77);
  auto a = gen_ste(true, 200, r1);
  auto b = gen_ste(true, 200, r2);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.outputs, b.outputs);
  EXPECT_THROW(gen_ste(true, 0, r1), ContractViolation);
}

TEST(Ste, PoolDisjointFromLabeled) {
  auto rng = make_rng(3);
  auto train = gen_ste(true, 2000, rng);
  auto pool = gen_ste_pool(500, train.inputs, rng);
  const std::set<std::string> seen(train.inputs.begin(), train.inputs.end());
  for (const auto& s : pool) EXPECT_FALSE(seen.contains(s)) << s;
}

TEST(Ste, TaskDegreeMatchesStringDegree) {
  TaskOptions opt;
  opt.train = 50;
  opt.test = 10;
  SteTask task(opt);
  const auto& v = task.vocab();
  const auto& spec = task.specs().at(0);
  for (auto [x, y] : std::vector<std::pair<std::string, std::string>>{
           {"azbz", "zab"}, {"azbz", "zabbb"}, {"bzbzbz", "b"}, {"azaz", "zaza"}}) {
    EXPECT_DOUBLE_EQ(constraint::violation_degree(spec, v.encode_chars(x), v.encode_chars(y)), ste_violation(x, y));
  }
  EXPECT_FALSE(task.supports_soft());
}

TEST(Ste, DataRoundTrip) {
  auto rng = make_rng(8);
  auto d = gen_ste(true, 40, rng);
  std::stringstream ss;
  write_ste(ss, d);
  auto back = read_ste(ss);
  EXPECT_EQ(back.inputs, d.inputs);
  EXPECT_EQ(back.outputs, d.outputs);
  std::stringstream bad("azbz zabbb\n");
  EXPECT_THROW(read_ste(bad), InputError);
}

TEST(Ste, TrainedModelTransducesReferenceExample) {
  TaskOptions opt;
  opt.train = 2000;
  opt.test = 50;
  opt.unlabeled = 0;
  opt.unlabeled_set = true;
  SteTask task(opt);
  harness::RunConfig cfg;
  cfg.task = "ste";
  cfg.epochs = 6;
  cfg.batch_size = 32;
  cfg.lr = 0.005;
  cfg.seed = 1;
  ad::ParamSet trained;
  auto res = harness::run_experiment(cfg, task, {}, &trained);
  ASSERT_TRUE(res.ok()) << res.status;
  EXPECT_EQ(task.transduce(trained, "azbzbz"), "zabbbbbb");
}

// ---- hierarchical multilabel ---------------------------------------------

TEST(HierLabel, GoldSatisfiesEveryRule) {
  TaskOptions opt;
  HierLabelTask task(opt);
  const std::vector<std::vector<int>> none(task.train().size());
  EXPECT_EQ(metrics::violation_rate(task.specs(), none, task.train().outputs), 0.0);
  EXPECT_EQ(task.specs().size(), 4u);
  std::size_t children = 0;
  for (const auto& y : task.train().outputs) {
    EXPECT_EQ(std::count(y.begin(), y.begin() + kHierParents, 1), 1);
    children += static_cast<std::size_t>(std::count(y.begin() + kHierParents, y.end(), 1));
  }
  EXPECT_GT(children, task.train().size() / 4);
}

TEST(HierLabel, ChildWithoutParentViolates) {
  auto specs = hierlabel_specs();
  std::vector<int> y(kHierLabels, 0);
  y[hier_label_index("science_fiction")] = 1;
  bool any = false;
  for (const auto& s : specs) any = any || constraint::violates(s, {}, y);
  EXPECT_TRUE(any);
  y[hier_label_index("fiction")] = 1;
  for (const auto& s : specs) EXPECT_FALSE(constraint::violates(s, {}, y));
  EXPECT_THROW(hier_label_index("poetry"), InputError);
}

TEST(HierLabel, ExhaustiveIsLegalAndBindsTwoAtoms) {
  TaskOptions opt;
  opt.train = 20;
  opt.test = 10;
  HierLabelTask task(opt);
  auto rng = make_rng(1);
  auto params = task.init_params(rng);
  Graph g;
  auto b = g.bind(params);
  std::vector<std::size_t> idx{0, 1, 2};
  auto src = task.constraint_source(g, b, idx);
  auto res = src->explore(g, constraint::Strategy::exhaustive(), rng);
  ASSERT_EQ(res.size(), 3u);
  EXPECT_EQ(res[0].candidates.size(), 256u);
  for (const auto& spec : task.specs()) {
    const auto& gs = spec.symbolic->groundings(src->positions(0));
    ASSERT_EQ(gs.size(), 1u);
    EXPECT_EQ(gs[0].atoms().size(), 2u);
  }
  auto lv = constraint::constraint_loss(g, *src, task.specs(), constraint::LossType::Soft,
                                        constraint::Strategy::exhaustive(), {}, rng);
  EXPECT_GE(lv.violation, 0.0);
}

TEST(HierLabel, DeterministicAndRoundTrip) {
  TaskOptions opt;
  opt.train = 30;
  opt.test = 10;
  HierLabelTask a(opt), b(opt);
  EXPECT_EQ(a.train().inputs, b.train().inputs);
  EXPECT_EQ(a.train().outputs, b.train().outputs);
  std::stringstream ss;
  write_hierlabel(ss, a.train());
  auto back = read_hierlabel(ss, HierGeometry{}.dim);
  EXPECT_EQ(back.inputs, a.train().inputs);
  EXPECT_EQ(back.outputs, a.train().outputs);
  opt.data_seed = 99;
  HierLabelTask c(opt);
  EXPECT_NE(c.train().inputs, a.train().inputs);
}

// ---- BIO ------------------------------------------------------------------

std::vector<int> tags(const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& n : names) out.push_back(bio_tag_id(n));
  return out;
}

TEST(Bio, DegreeExamples) {
  auto spec = bio_spec(12);
  EXPECT_DOUBLE_EQ(constraint::violation_degree(spec, {}, tags({"B1", "I1", "B1", "O"})), 0.25);
  EXPECT_EQ(constraint::violation_degree(spec, {}, tags({"B0", "B1", "B2", "B3"})), 0.0);
  EXPECT_DOUBLE_EQ(constraint::violation_degree(spec, {}, tags({"B0", "B0", "B0", "B2", "B2", "O"})), 3.0 / 6.0);
}

TEST(Bio, SymbolicFormAgreesWithDegreeOnViolation) {
  auto spec = bio_spec(8);
  constraint::ConstraintSpec symbolic_only{spec.name, spec.symbolic, {}};
  auto rng = make_rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const int len = uniform_int(rng, 1, 8);
    std::vector<int> y;
    for (int i = 0; i < len; ++i) y.push_back(uniform_int(rng, 0, kBioTags - 1));
    EXPECT_EQ(constraint::violates(spec, {}, y), constraint::violates(symbolic_only, {}, y));
  }
  EXPECT_EQ(spec.symbolic->groundings(5).size(), 4u * 5u);
  EXPECT_THROW(spec.symbolic->groundings(9), ContractViolation);
  auto ref = BioGroundings::resolve("B2(7)");
  EXPECT_EQ(ref.position, 7u);
  EXPECT_EQ(ref.cls, static_cast<std::size_t>(bio_begin(2)));
  EXPECT_THROW(BioGroundings::resolve("I2(7)"), ContractViolation);
}

TEST(Bio, GoldSequencesAreValid) {
  TaskOptions opt;
  opt.train = 2000;
  opt.test = 10;
  BioTask task(opt);
  const auto& d = task.train();
  EXPECT_EQ(metrics::violation_rate(task.specs(), d.inputs, d.outputs), 0.0);
  for (std::size_t n = 0; n < d.size(); ++n) {
    const auto& y = d.outputs[n];
    ASSERT_EQ(y.size(), d.inputs[n].size());
    EXPECT_GE(y.size(), 6u);
    EXPECT_LE(y.size(), 12u);
    for (std::size_t t = 0; t < y.size(); ++t) {
      if (y[t] != 0 && (y[t] - 1) % 2 == 1) {  // I_X continues a B_X or I_X of the same role
        ASSERT_GT(t, 0u);
        EXPECT_EQ((y[t - 1] - 1) / 2, (y[t] - 1) / 2);
        EXPECT_NE(y[t - 1], 0);
      }
    }
  }
  // default pool: 3% of the labeled set
  EXPECT_EQ(task.pool_size(), 2000u + 60u);
}

TEST(Bio, DeterministicAndRoundTrip) {
  TaskOptions opt;
  opt.train = 50;
  opt.test = 10;
  BioTask a(opt), b(opt);
  EXPECT_EQ(a.train().inputs, b.train().inputs);
  EXPECT_EQ(a.train().outputs, b.train().outputs);
  std::stringstream ss;
  write_bio(ss, a.train(), a.vocab());
  auto back = read_bio(ss, a.vocab());
  EXPECT_EQ(back.inputs, a.train().inputs);
  EXPECT_EQ(back.outputs, a.train().outputs);
}

TEST(Bio, ExhaustiveExceedsCapacity) {
  TaskOptions opt;
  opt.train = 10;
  opt.test = 10;
  BioTask task(opt);
  auto rng = make_rng(2);
  auto params = task.init_params(rng);
  Graph g;
  auto b = g.bind(params);
  std::vector<std::size_t> idx{0};
  auto src = task.constraint_source(g, b, idx);
  EXPECT_THROW(src->explore(g, constraint::Strategy::exhaustive(), rng), CapacityError);
}

// ---- pairwise relations ---------------------------------------------------

TEST(PairRel, GoldSatisfiesRules) {
  TaskOptions opt;
  opt.train = 3000;
  opt.test = 10;
  PairRelTask task(opt);
  const auto& d = task.train();
  const std::vector<std::vector<int>> none(d.size());
  EXPECT_EQ(metrics::violation_rate(task.specs(), none, d.outputs), 0.0);
  std::size_t con = 0;
  for (const auto& y : d.outputs) {
    EXPECT_EQ(y[0] == kCon, y[1] == kCon);
    if (y[0] == kEnt) {
      EXPECT_EQ(y[1], kNeu);
    }
    if (y[0] == kNeu) {
      EXPECT_EQ(y[1], kEnt);
    }
    con += y[0] == kCon;
  }
  EXPECT_GT(con, d.size() / 5);
  EXPECT_LT(con, d.size() / 2);
}

TEST(PairRel, R3GroundingExample) {
  auto specs = pairrel_specs();
  ASSERT_EQ(specs.size(), 3u);
  const auto& r3 = specs[1];
  const auto& gs = r3.symbolic->groundings(2);
  ASSERT_EQ(gs.size(), 2u);
  logic::Assignment a{{"ent(a,b)", 0.8}, {"con(b,a)", 0.5}};
  logic::LogicKind goedel{logic::TNorm::Goedel, logic::ImplicationMode::SImplication};
  EXPECT_DOUBLE_EQ(logic::eval_soft(gs[0], a, goedel), 0.5);

  // Through the loss: forward row (0.8, 0.1, 0.1), reverse row (0.25, 0.5, 0.25).
  Graph g;
  models::FactoredOutput out{g.constant(Tensor::matrix(2, 3, {0.8, 0.1, 0.1, 0.25, 0.5, 0.25})), 3, {{0, 1}}};
  constraint::FactoredSource src(g, out);
  auto rng = make_rng(0);
  auto res = src.explore(g, constraint::Strategy::exhaustive(), rng);
  auto lv = constraint::psl_loss(g, res[0], src, 0, r3, goedel);
  // grounding (a,b): 1 - max(0.2, 0.5) = 0.5; grounding (b,a): 1 - max(0.75, 0.9) = 0.1
  EXPECT_NEAR(g.scalar_value(lv.loss), (0.5 + 0.1) / 2, 1e-12);
}

TEST(PairRel, ConstraintLossesSumOverRules) {
  TaskOptions opt;
  opt.train = 20;
  opt.test = 10;
  PairRelTask task(opt);
  auto rng = make_rng(4);
  auto params = task.init_params(rng);
  std::vector<std::size_t> idx{0, 5, 9};
  const auto strat = constraint::Strategy::exhaustive();
  double total = 0.0, separate = 0.0;
  {
    Graph g;
    auto b = g.bind(params);
    auto src = task.constraint_source(g, b, idx);
    total = g.scalar_value(
        constraint::constraint_loss(g, *src, task.specs(), constraint::LossType::Soft, strat, {}, rng).loss);
  }
  for (const auto& spec : task.specs()) {
    Graph g;
    auto b = g.bind(params);
    auto src = task.constraint_source(g, b, idx);
    separate += g.scalar_value(constraint::constraint_loss(g, *src, {spec}, constraint::LossType::Soft, strat, {}, rng).loss);
  }
  EXPECT_NEAR(total, separate, 1e-12);
  EXPECT_GT(total, 0.0);
}

TEST(PairRel, DeterministicAndRoundTrip) {
  TaskOptions opt;
  opt.train = 25;
  opt.test = 10;
  PairRelTask a(opt), b(opt);
  EXPECT_EQ(a.train().inputs, b.train().inputs);
  std::stringstream ss;
  write_pairrel(ss, a.train());
  auto back = read_pairrel(ss, a.geometry().dim);
  EXPECT_EQ(back.inputs, a.train().inputs);
  EXPECT_EQ(back.outputs, a.train().outputs);
}

// ---- registry -------------------------------------------------------------

TEST(Registry, EveryTaskBuildsAndEvaluates) {
  TaskOptions opt;
  opt.train = 20;
  opt.test = 8;
  opt.unlabeled = 5;
  opt.unlabeled_set = true;
  for (const auto& name : task_names()) {
    auto task = make_task(name, opt);
    EXPECT_EQ(task->name(), name);
    EXPECT_EQ(task->train_size(), 20u);
    EXPECT_EQ(task->pool_size(), 25u);
    auto rng = make_rng(1);
    auto ev = task->evaluate(task->init_params(rng));
    EXPECT_EQ(ev.examples, 8u);
    EXPECT_GE(ev.main_metric, 0.0);
    EXPECT_LE(ev.main_metric, 1.0);
    std::stringstream tr, te, un;
    task->write_data(tr, te, un);
    EXPECT_FALSE(tr.str().empty());
  }
  EXPECT_THROW(make_task("snli", opt), ConfigError);
}

TEST(Registry, MetricKinds) {
  TaskOptions opt;
  opt.train = 5;
  opt.test = 5;
  EXPECT_EQ(make_task("ste", opt)->metric(), metrics::MetricKind::TokenAccuracy);
  EXPECT_EQ(make_task("hierlabel", opt)->metric(), metrics::MetricKind::Accuracy);
  EXPECT_EQ(make_task("bio", opt)->metric(), metrics::MetricKind::F1);
  EXPECT_EQ(make_task("pairrel", opt)->metric(), metrics::MetricKind::Accuracy);
}

}  // namespace
