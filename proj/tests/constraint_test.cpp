#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "conlearn/constraint/loss.hpp"
#include "conlearn/models/mlp.hpp"
#include "conlearn/softlogic/parser.hpp"
#include "conlearn/oracle/reinforce.hpp"

namespace {

using namespace conlearn;
using namespace conlearn::constraint;
using ad::Graph;
using ad::Tensor;

FactoredSource one_row(Graph& g, std::vector<double> probs) {
  const auto n = probs.size();
  return FactoredSource(g, {g.constant(Tensor::matrix(1, n, std::move(probs))), n, {{0}}});
}

// Single-rule symbolic spec over atoms named L(i) meaning "position i has class 1".
ConstraintSpec rule_spec(const std::string& name, const std::vector<std::string>& texts) {
  auto gs = std::make_shared<std::vector<logic::Formula>>();
  for (const auto& t : texts) gs->push_back(logic::parse_formula(t));
  ConstraintSpec s;
  s.name = name;
  s.symbolic = SymbolicRule{[gs](std::size_t) -> const std::vector<logic::Formula>& { return *gs; },
                            [](const std::string& key) {
                              // L(i) -> position i, class 1
                              return AtomRef{std::stoul(key.substr(2, key.size() - 3)), 1};
                            }};
  return s;
}

// (1-p, p) rows from a vector of on-probabilities; one example covering all rows.
struct BinaryOutputs {
  ad::Var on;
  models::FactoredOutput out;
};

BinaryOutputs binary_outputs(Graph& g, ad::Var on) {
  const auto n = g.value(on).size();
  models::FactoredOutput out{models::Mlp::binary_rows(g, on), 2, {{}}};
  for (std::size_t i = 0; i < n; ++i) out.rows[0].push_back(i);
  return {on, out};
}

// ---- explore

TEST(Explore, Top1PicksArgmax) {
  Graph g;
  auto src = one_row(g, {0.2, 0.5, 0.3});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::top1(), rng);
  ASSERT_EQ(res.size(), 1u);
  ASSERT_EQ(res[0].candidates.size(), 1u);
  EXPECT_EQ(res[0].candidates[0].output, (Output{1}));
  EXPECT_NEAR(g.scalar_value(*res[0].candidates[0].log_prob), std::log(0.5), 1e-15);
}

TEST(Explore, ExhaustiveEnumeratesAndNormalizes) {
  Graph g;
  auto src = one_row(g, {0.2, 0.5, 0.3});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  ASSERT_EQ(res[0].candidates.size(), 3u);
  double s = 0.0;
  for (const auto& c : res[0].candidates) {
    EXPECT_FALSE(c.log_prob.has_value());
    s += c.prob;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Explore, ExhaustiveOverEightBinaryLabels) {
  Graph g;
  auto on = g.constant(Tensor::vector({0.1, 0.9, 0.3, 0.7, 0.5, 0.2, 0.8, 0.6}));
  auto bo = binary_outputs(g, on);
  FactoredSource src(g, bo.out);
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  ASSERT_EQ(res[0].candidates.size(), 256u);
  double s = 0.0;
  for (const auto& c : res[0].candidates) s += c.prob;
  EXPECT_NEAR(s, 1.0, 1e-6);
}

TEST(Explore, ExhaustiveOverCapIsCapacityError) {
  Graph g;
  // 9 classes over 5 positions: 59049 outcomes
  std::vector<double> p(45, 1.0 / 9.0);
  FactoredSource src(g, {g.constant(Tensor::matrix(5, 9, p)), 9, {{0, 1, 2, 3, 4}}});
  auto rng = make_rng(1);
  EXPECT_THROW(src.explore(g, Strategy::exhaustive(), rng), CapacityError);
}

TEST(Explore, SamplingIsReproducibleAndSized) {
  auto draw = [] {
    Graph g;
    auto src = one_row(g, {0.2, 0.5, 0.3});
    auto rng = make_rng(42);
    std::vector<Output> outs;
    auto res = src.explore(g, Strategy::sampling(10), rng);
    for (const auto& c : res[0].candidates) outs.push_back(c.output);
    return outs;
  };
  auto a = draw();
  EXPECT_EQ(a.size(), 10u);
  EXPECT_EQ(a, draw());
}

TEST(Strategy, ParseAndName) {
  EXPECT_EQ(Strategy::parse("top1"), Strategy::top1());
  EXPECT_EQ(Strategy::parse("sample-10"), Strategy::sampling(10));
  EXPECT_EQ(Strategy::parse("exhaustive"), Strategy::exhaustive());
  EXPECT_EQ(Strategy::sampling(3).name(), "sample-3");
  EXPECT_THROW(Strategy::parse("sample-0"), ConfigError);
  EXPECT_THROW(Strategy::parse("sample-x"), ConfigError);
  EXPECT_THROW(Strategy::parse("beam"), ConfigError);
}

// ---- reinforce

TEST(Reinforce, NoViolationGivesZeroValueAndGradient) {
  Graph g;
  auto z = g.leaf("z", Tensor::matrix(1, 3, {0.1, 0.4, -0.2}));
  FactoredSource src(g, oracle::single_row(g.softmax(z), 3));
  auto rng = make_rng(3);
  auto lv = constraint_loss(g, src, {oracle::table_spec({0, 0, 0})}, LossType::Binary, Strategy::sampling(1), {}, rng);
  EXPECT_EQ(g.scalar_value(lv.loss), 0.0);
  EXPECT_EQ(lv.violation, 0.0);
  auto grads = g.backward(lv.loss);
  for (double v : grads["z"].data) EXPECT_EQ(v, 0.0);
}

TEST(Reinforce, SingleViolatingCandidateIsItsLogProb) {
  Graph g;
  const double p = std::exp(-1.2);
  auto src = one_row(g, {p, (1 - p) / 3, (1 - p) / 3, (1 - p) / 3});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::top1(), rng);
  ASSERT_EQ(res[0].candidates[0].output, (Output{0}));
  auto lv = reinforce_loss(g, res[0], oracle::table_spec({1, 0, 0, 0}), LossType::Binary, {});
  EXPECT_NEAR(g.scalar_value(lv.loss), -1.2, 1e-12);
  EXPECT_EQ(lv.violation, 1.0);
}

TEST(Reinforce, MinimizingPushesViolatingProbabilityDown) {
  Graph g;
  auto z = g.leaf("z", Tensor::matrix(1, 3, {0.0, 0.0, 0.0}));
  FactoredSource src(g, oracle::single_row(g.softmax(z), 3));
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::top1(), rng);  // class 0 on ties
  auto lv = reinforce_loss(g, res[0], oracle::table_spec({1, 0, 0}), LossType::Binary, {});
  auto grad = g.backward(lv.loss)["z"].data;
  EXPECT_GT(grad[0], 0.0);  // descent lowers z0
  EXPECT_LT(grad[1], 0.0);
}

TEST(Reinforce, BinaryEqualsRealForZeroOneDegrees) {
  auto loss_of = [](LossType t) {
    Graph g;
    auto z = g.leaf("z", Tensor::matrix(1, 3, {0.3, -0.1, 0.2}));
    FactoredSource src(g, oracle::single_row(g.softmax(z), 3));
    auto rng = make_rng(8);
    auto lv = constraint_loss(g, src, {oracle::table_spec({0, 1, 1})}, t, Strategy::sampling(50), {}, rng);
    return std::make_pair(g.scalar_value(lv.loss), g.backward(lv.loss)["z"].data);
  };
  EXPECT_EQ(loss_of(LossType::Binary), loss_of(LossType::Real));
}

TEST(Reinforce, ExhaustiveCandidatesRejected) {
  Graph g;
  auto src = one_row(g, {0.2, 0.5, 0.3});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  EXPECT_THROW(reinforce_loss(g, res[0], oracle::table_spec({1, 0, 0}), LossType::Binary, {}), ContractViolation);
}

TEST(Reinforce, BinaryGradientMatchesExactExpectation) {
  const std::vector<double> z{0.2, -0.3, 0.5};
  const std::vector<double> viol{0, 0, 1};
  auto est = oracle::sampled_gradient(z, viol, LossType::Binary, 10000, 5);
  EXPECT_LT(oracle::relative_error(est, oracle::exact_expected_gradient(z, viol)), 0.05);
}

TEST(Reinforce, RealGradientMatchesExactExpectation) {
  const std::vector<double> z{0.2, -0.3, 0.5};
  const std::vector<double> deg{0.0, 0.4, 1.0};
  auto est = oracle::sampled_gradient(z, deg, LossType::Real, 10000, 6);
  EXPECT_LT(oracle::relative_error(est, oracle::exact_expected_gradient(z, deg)), 0.05);
}

TEST(ConstraintLoss, ExhaustiveWithReinforceIsConfigError) {
  Graph g;
  auto src = one_row(g, {0.2, 0.5, 0.3});
  auto rng = make_rng(1);
  EXPECT_THROW(constraint_loss(g, src, {oracle::table_spec({1, 0, 0})}, LossType::Real, Strategy::exhaustive(), {}, rng),
               ConfigError);
  EXPECT_THROW(constraint_loss(g, src, {oracle::table_spec({1, 0, 0})}, LossType::Soft, Strategy::top1(), {}, rng),
               ConfigError);
}

// ---- psl

const logic::LogicKind kLuk{logic::TNorm::Lukasiewicz, logic::ImplicationMode::Residuated};

TEST(Psl, HierarchyRuleValueAndGradient) {
  Graph g;
  auto on = g.leaf("p", Tensor::vector({0.9, 0.6}));  // P_s (child), P_f (parent)
  auto bo = binary_outputs(g, on);
  FactoredSource src(g, bo.out);
  auto spec = rule_spec("sf=>f", {"L(0) => L(1)"});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  auto lv = psl_loss(g, res[0], src, 0, spec, kLuk);
  EXPECT_NEAR(g.scalar_value(lv.loss), 0.3, 1e-12);
  auto grad = g.backward(lv.loss)["p"].data;
  EXPECT_NEAR(grad[0], 1.0, 1e-12);
  EXPECT_NEAR(grad[1], -1.0, 1e-12);
}

TEST(Psl, SatisfiedWithSlackIsZero) {
  Graph g;
  auto bo = binary_outputs(g, g.constant(Tensor::vector({0.4, 0.7})));
  FactoredSource src(g, bo.out);
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  EXPECT_EQ(g.scalar_value(psl_loss(g, res[0], src, 0, rule_spec("r", {"L(0) => L(1)"}), kLuk).loss), 0.0);
}

TEST(Psl, ProgrammaticSpecRejected) {
  Graph g;
  auto src = one_row(g, {0.2, 0.5, 0.3});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::top1(), rng);
  EXPECT_THROW(psl_loss(g, res[0], src, 0, oracle::table_spec({1, 0, 0}), {}), ContractViolation);
}

TEST(Psl, ExhaustiveDispatchEqualsDirectEvaluation) {
  Graph g;
  auto on = g.constant(Tensor::vector({0.9, 0.6, 0.2, 0.7, 0.55, 0.1, 0.3, 0.8}));
  auto bo = binary_outputs(g, on);
  FactoredSource src(g, bo.out);
  std::vector<ConstraintSpec> specs{rule_spec("r", {"L(4) => L(0)", "L(5) => L(1)", "L(6) => L(2)", "L(7) => L(3)"})};
  auto rng = make_rng(1);
  auto lv = constraint_loss(g, src, specs, LossType::Soft, Strategy::exhaustive(), {}, rng);
  const auto& p = g.value(on).data;
  double direct = 0.0;
  for (int c = 0; c < 4; ++c) direct += 1.0 - std::max(1.0 - p[4 + c], p[c]);
  EXPECT_NEAR(g.scalar_value(lv.loss), direct / 4.0, 1e-15);
}

TEST(Psl, CandidatesSelectActiveGroundings) {
  Graph g;
  auto bo = binary_outputs(g, g.constant(Tensor::vector({0.9, 0.6, 0.2, 0.1})));
  FactoredSource src(g, bo.out);
  auto spec = rule_spec("r", {"L(0) => L(1)", "L(2) => L(3)"});
  auto rng = make_rng(1);
  // top1 = [1, 1, 0, 0]: only the first grounding's antecedent holds
  auto res = src.explore(g, Strategy::top1(), rng);
  auto lv = psl_loss(g, res[0], src, 0, spec, kLuk);
  EXPECT_NEAR(g.scalar_value(lv.loss), 0.3 / 2.0, 1e-12);
}

TEST(Psl, LossWithinUnitIntervalOnRandomInputs) {
  auto rng = make_rng(77);
  auto spec = rule_spec("r", {"L(0) => L(1)", "L(1) => !L(2)", "L(0) & L(2)", "L(3) | !L(0)"});
  for (int trial = 0; trial < 200; ++trial) {
    Graph g;
    std::vector<double> p(4);
    for (auto& v : p) v = uniform01(rng);
    auto bo = binary_outputs(g, g.constant(Tensor::vector(p)));
    FactoredSource src(g, bo.out);
    for (auto strat : {Strategy::exhaustive(), Strategy::top1(), Strategy::sampling(4)}) {
      auto res = src.explore(g, strat, rng);
      const double v = g.scalar_value(psl_loss(g, res[0], src, 0, spec, {}).loss);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

// Pairwise relation atoms: ent/con/neu at position 0 (forward) and 1 (reverse).
ConstraintSpec pair_spec(const std::string& text) {
  auto gs = std::make_shared<std::vector<logic::Formula>>(std::vector{logic::parse_formula(text)});
  ConstraintSpec s;
  s.name = text;
  s.symbolic = SymbolicRule{[gs](std::size_t) -> const std::vector<logic::Formula>& { return *gs; },
                            [](const std::string& key) {
                              static const std::map<std::string, std::size_t> cls{{"ent", 0}, {"con", 1}, {"neu", 2}};
                              return AtomRef{key.back() == 'f' ? 0u : 1u, cls.at(key.substr(0, 3))};
                            }};
  return s;
}

TEST(Psl, PairRuleGoedelSImplication) {
  Graph g;
  // forward [ent .8, con .1, neu .1]; reverse [ent .3, con .5, neu .2]
  FactoredSource src(g, {g.constant(Tensor::matrix(2, 3, {0.8, 0.1, 0.1, 0.3, 0.5, 0.2})), 3, {{0, 1}}});
  auto rng = make_rng(1);
  auto res = src.explore(g, Strategy::exhaustive(), rng);
  auto lv = psl_loss(g, res[0], src, 0, pair_spec("ent_f => !con_r"), {});
  EXPECT_NEAR(g.scalar_value(lv.loss), 0.5, 1e-12);
}

TEST(ConstraintLoss, MultipleSpecsAdd) {
  Graph g;
  FactoredSource src(g, {g.constant(Tensor::matrix(2, 3, {0.6, 0.3, 0.1, 0.2, 0.5, 0.3})), 3, {{0, 1}}});
  auto r2 = pair_spec("con_f => con_r");
  auto r3 = pair_spec("ent_f => !con_r");
  auto run = [&](std::vector<ConstraintSpec> specs) {
    auto rng = make_rng(1);
    return g.scalar_value(constraint_loss(g, src, specs, LossType::Soft, Strategy::exhaustive(), {}, rng).loss);
  };
  const double both = run({r2, r3});
  EXPECT_NEAR(both, run({r2}) + run({r3}), 1e-15);
  // independent evaluation: 1 - max(1 - .3, .5) and 1 - max(1 - .6, 1 - .5)
  EXPECT_NEAR(both, (1 - 0.7) + (1 - 0.5), 1e-12);
}

// ---- degree

TEST(Degree, SymbolicFractionOfViolatedGroundings) {
  auto spec = rule_spec("r", {"L(0) => L(1)", "L(2) => L(3)"});
  EXPECT_EQ(violation_degree(spec, {}, Output{1, 0, 0, 0}), 0.5);
  EXPECT_EQ(violation_degree(spec, {}, Output{1, 1, 1, 1}), 0.0);
  EXPECT_THROW(violation_degree(spec, {}, Output{1}), ContractViolation);
}

TEST(Degree, OutOfRangeDegreeRejected) {
  EXPECT_THROW(violation_degree(oracle::table_spec({1.5}), {}, Output{0}), ContractViolation);
}

}  // namespace
