#include <gtest/gtest.h>

#include <cmath>

#include "conlearn/autodiff/graph.hpp"
#include "conlearn/autodiff/optim.hpp"
#include "conlearn/autodiff/params.hpp"
#include "conlearn/oracle/gradcheck.hpp"

namespace {

using namespace conlearn;
using ad::Graph;
using ad::ParamSet;
using ad::Tensor;

TEST(Backward, SumGivesOnes) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({0.3, -1.0, 2.0}));
  auto grads = g.backward(g.sum(p));
  EXPECT_EQ(grads["p"].data, (std::vector<double>{1.0, 1.0, 1.0}));
}

TEST(Backward, SquaredSumGivesTwiceInput) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1.0, 2.0, 3.0}));
  auto grads = g.backward(g.sum(g.mul(p, p)));
  EXPECT_EQ(grads["p"].data, (std::vector<double>{2.0, 4.0, 6.0}));
}

TEST(Backward, RejectsNonScalarLoss) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1.0, 2.0}));
  EXPECT_THROW(g.backward(p), ContractViolation);
}

TEST(Backward, LeavesValuesUntouched) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1.0, 2.0}));
  auto loss = g.sum(g.exp(p));
  const Tensor before = g.value(loss);
  g.backward(loss);
  g.backward(loss);
  EXPECT_EQ(g.value(loss), before);
  EXPECT_EQ(g.value(p).data, (std::vector<double>{1.0, 2.0}));
}

TEST(Backward, RepeatedBackwardZeroesAdjoints) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1.0, 2.0}));
  auto loss = g.sum(g.mul(p, p));
  auto first = g.backward(loss);
  auto second = g.backward(loss);
  EXPECT_EQ(first, second);
}

TEST(Backward, UnusedLeafGetsZeroGradient) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1.0}));
  g.leaf("unused", Tensor::vector({5.0, 6.0}));
  auto grads = g.backward(g.sum(p));
  EXPECT_EQ(grads["unused"].data, (std::vector<double>{0.0, 0.0}));
}

TEST(Backward, NonFiniteValueNamesTheNode) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({1000.0}));
  try {
    g.exp(p);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("exp"), std::string::npos);
  }
}

TEST(Log, ClampsZeroInput) {
  Graph g;
  auto p = g.leaf("p", Tensor::vector({0.0, 1.0}));
  auto l = g.log(p);
  EXPECT_DOUBLE_EQ(g.value(l)[0], std::log(1e-12));
  auto grads = g.backward(g.sum(l));
  EXPECT_EQ(grads["p"][0], 0.0);
  EXPECT_EQ(grads["p"][1], 1.0);
}

TEST(MinMax, TiesRouteGradientToFirstArgument) {
  Graph g;
  auto a = g.leaf("a", Tensor::vector({0.5}));
  auto b = g.leaf("b", Tensor::vector({0.5}));
  auto grads = g.backward(g.sum(g.minimum(a, b)));
  EXPECT_EQ(grads["a"][0], 1.0);
  EXPECT_EQ(grads["b"][0], 0.0);
  Graph h;
  auto c = h.leaf("c", Tensor::vector({0.5}));
  auto d = h.leaf("d", Tensor::vector({0.5}));
  auto grads2 = h.backward(h.sum(h.maximum(c, d)));
  EXPECT_EQ(grads2["c"][0], 1.0);
  EXPECT_EQ(grads2["d"][0], 0.0);
}

TEST(Softmax, LogLikelihoodGradientIsProbMinusOneHot) {
  Rng rng = make_rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 2, 9));
    const auto target = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(n) - 1));
    Graph g;
    auto logits = g.leaf("z", oracle::random_tensor(rng, {n}, -3, 3));
    auto probs = g.softmax(logits);
    auto nll = g.scale(g.log(g.element(probs, target)), -1.0);
    auto grads = g.backward(nll);
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = g.value(probs)[j] - (j == target ? 1.0 : 0.0);
      EXPECT_NEAR(grads["z"][j], expected, 1e-10);
    }
  }
}

TEST(GradCheck, EveryOpMatchesFiniteDifferences) {
  Rng rng = make_rng(2024);
  for (const auto& op : oracle::op_catalog()) {
    for (int trial = 0; trial < 20; ++trial) {
      auto [inputs, build] = op.make(rng);
      auto r = oracle::gradcheck(build, inputs);
      EXPECT_LT(r.max_relative_error, 1e-4) << op.name << " trial " << trial;
    }
  }
}

TEST(Shapes, ElementwiseMismatchThrows) {
  Graph g;
  auto a = g.leaf("a", Tensor::vector({1, 2}));
  auto b = g.leaf("b", Tensor::vector({1, 2, 3}));
  EXPECT_THROW(g.add(a, b), ContractViolation);
  EXPECT_THROW(g.matmul(a, b), ContractViolation);
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor(ad::Shape{}), ContractViolation);
  EXPECT_THROW(Tensor(ad::Shape{2, 0}), ContractViolation);
  EXPECT_THROW(Tensor(ad::Shape{2}, std::vector<double>{1, 2, 3}), ContractViolation);
}

TEST(Flatten, ConcatenatesInIterationOrder) {
  ParamSet grads;
  grads.add("a", Tensor::vector({1, 2}));
  grads.add("b", Tensor::matrix(1, 2, {3, 4}));
  EXPECT_EQ(ad::flatten(grads), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Flatten, EmptySetGivesEmptyVector) {
  EXPECT_TRUE(ad::flatten(ParamSet{}).empty());
  EXPECT_TRUE(ad::unflatten({}, ParamSet{}).empty());
}

TEST(Flatten, RoundTripOnRandomGradients) {
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    ParamSet g;
    const int count = uniform_int(rng, 1, 5);
    for (int i = 0; i < count; ++i) {
      ad::Shape s{static_cast<std::size_t>(uniform_int(rng, 1, 4))};
      if (uniform01(rng) < 0.5) s.push_back(static_cast<std::size_t>(uniform_int(rng, 1, 4)));
      g.add("p" + std::to_string(i), oracle::random_tensor(rng, s, -5, 5));
    }
    EXPECT_EQ(ad::unflatten(ad::flatten(g), g), g);
  }
}

TEST(Flatten, LengthMismatchThrows) {
  ParamSet t;
  t.add("a", Tensor::vector({1, 2}));
  EXPECT_THROW(ad::unflatten({1.0}, t), ContractViolation);
}

TEST(ParamSetTest, DuplicateNameRejected) {
  ParamSet p;
  p.add("w", Tensor::vector({1}));
  EXPECT_THROW(p.add("w", Tensor::vector({2})), ContractViolation);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParamSet p;
  p.add("w", Tensor::vector({0.25, -3.0}));
  const ParamSet before = p;
  ad::AdamState st(p, {0.1});
  ad::adam_step(p, p.zeros_like(), st);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamSet p;
  p.add("w", Tensor::vector({0.0}));
  ParamSet g;
  g.add("w", Tensor::vector({1.0}));
  ad::AdamState st(p, {0.1});
  ad::adam_step(p, g, st);
  // m_hat = v_hat = 1 at t=1, so the step is lr / (1 + eps).
  EXPECT_NEAR(p["w"][0], -0.1, 1e-8);
}

TEST(Adam, TwoStepsAreBitReproducible) {
  auto run = [] {
    ParamSet p;
    p.add("w", Tensor::vector({0.3, -0.7, 1.1}));
    ParamSet g1;
    g1.add("w", Tensor::vector({0.2, -1.3, 0.01}));
    ParamSet g2;
    g2.add("w", Tensor::vector({-0.5, 0.9, 3.0}));
    ad::AdamState st(p, {0.05});
    ad::adam_step(p, g1, st);
    ad::adam_step(p, g2, st);
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ShapeMismatchThrows) {
  ParamSet p;
  p.add("w", Tensor::vector({0.0, 1.0}));
  ParamSet g;
  g.add("w", Tensor::vector({1.0}));
  ad::AdamState st(p, {});
  EXPECT_THROW(ad::adam_step(p, g, st), ContractViolation);
}

}  // namespace
