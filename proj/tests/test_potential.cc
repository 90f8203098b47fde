#include <doctest.h>

#include <cmath>
#include <random>

#include "lgt/dynamics.hpp"
#include "lgt/error.hpp"
#include "lgt/harness.hpp"
#include "lgt/potential.hpp"
#include "oracles.hpp"

using namespace lgt;

namespace {

// Indicator of the path to a random leaf.
NodeValues RandomPath(const EvolvingTree& t, std::mt19937_64& rng) {
  const auto leaves = t.Leaves();
  NodeValues y(t.id_capacity(), 0.0);
  NodeId u = leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)];
  for (; u != t.root(); u = t.parent(u)) y[u] = 1.0;
  return y;
}

}  // namespace

TEST_CASE("fresh tree potential is 2(2k-1) eps") {
  for (int k = 2; k <= 5; ++k) {
    for (double eps : {1.0, 0.25}) {
      const auto t = EvolvingTree::NewGame(k, eps);
      NodeValues y(t.id_capacity(), 0.0);
      y[1] = 1.0;
      const auto p = EvalPotential(t, InitState(t), y);
      CHECK(p.P == doctest::Approx(2.0 * (2 * k - 1) * eps).epsilon(1e-14));
    }
  }
  const auto t = EvolvingTree::NewGame(2, 1.0);
  NodeValues y(t.id_capacity(), 0.0);
  y[1] = 1.0;
  CHECK(EvalPotential(t, InitState(t), y).P == doctest::Approx(6.0));
}

TEST_CASE("subtrees off the optimal path contribute only their depth terms") {
  auto t = EvolvingTree::NewGame(3, 1.0);
  const auto kids = t.Fork(1, 2);
  t.SetWeight(kids[1], 2.0);
  FractionalState x;
  x.mass = {0.0, 1.0, 0.3, 0.7};
  const NodeValues y = {0.0, 1.0, 1.0, 0.0};
  const NodeValues w = RevisedWeights(t), d = ShiftVector(t);
  const double k = 3.0;
  // Hand evaluation: c_r and a carry log terms, b only its (2k - h) x term.
  double expected = 2 * w[1] * (4 * k * std::log((1 + d[1]) / (1 + d[1])) + (2 * k - 1) * 1.0);
  expected += 2 * w[kids[0]] * (4 * k * std::log((1 + d[kids[0]]) / (0.3 + d[kids[0]])) + (2 * k - 2) * 0.3);
  expected += 2 * w[kids[1]] * ((2 * k - 2) * 0.7);
  CHECK(EvalPotential(t, x, y).P == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("property: P = 4kD - 2 Psi and P >= 0 on random states") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + trial % 4;
    const auto t = oracle::RandomTree(rng, k, 30);
    const auto x = oracle::RandomState(t, rng);
    const auto y = RandomPath(t, rng);
    const auto p = EvalPotential(t, x, y);
    CHECK(std::abs(p.P - (4.0 * k * p.D - 2.0 * p.Psi)) <= 1e-9 * (1.0 + std::abs(p.P)));
    CHECK(p.P >= 0.0);
  }
}

TEST_CASE("lineage: single path game tracks the only leaf") {
  AdversaryScript s{3, 1.0, {ScriptStep::Grow(1, 1.0), ScriptStep::Grow(1, 0.5)}};
  const auto play = LineageY(s);
  CHECK(play.final_leaf == 1);
  CHECK(play.lineage == std::vector<NodeId>{1});
  const auto t = EvolvingTree::NewGame(3, 1.0);
  CHECK(play.Indicator(t)[1] == 1.0);
}

TEST_CASE("lineage: fork then delete the heavier branch follows the survivor") {
  AdversaryScript s{3, 1.0, {ScriptStep::Fork(1, 2), ScriptStep::Grow(3, 2.0), ScriptStep::Delete(3)}};
  const auto play = LineageY(s);
  CHECK(play.final_leaf == 2);
  CHECK(play.lineage == std::vector<NodeId>{2, 1});
  const auto trace = RunScript(s, IntegratorConfig{});
  CHECK(play.LeafIn(trace.records[0].tree_before) == 1);
  CHECK(play.LeafIn(trace.records[1].tree_before) == 2);
  CHECK(play.LeafIn(trace.final_tree) == 2);
}

TEST_CASE("lineage: two surviving leaves at distance 3 and 5 picks the lighter one") {
  AdversaryScript s{3, 1.0, {ScriptStep::Grow(1, 1.0), ScriptStep::Fork(1, 2), ScriptStep::Grow(2, 2.0),
                             ScriptStep::Grow(3, 4.0)}};
  const auto play = LineageY(s);
  CHECK(play.final_leaf == 2);
  CHECK(OptDistance(ValidateScript(s)) == 3.0);
}

TEST_CASE("growth of an empty leaf costs nothing and does not raise the potential") {
  auto t = EvolvingTree::NewGame(3, 1.0);
  const auto kids = t.Fork(1, 2);
  FractionalState x;
  x.mass = {0.0, 1.0, 0.0, 1.0};
  const NodeValues y = {0.0, 1.0, 0.0, 1.0};
  const double before = EvalPotential(t, x, y).P;
  auto grown = t;
  const auto g = IntegrateGrowth(grown, x, kids[0], 1.0, IntegratorConfig{});
  CHECK(g.cost.total() == 0.0);
  CHECK(EvalPotential(grown, g.x, y).P <= before + 1e-12);
}

TEST_CASE("certificate: unit growth on the optimal leaf stays below its allowance") {
  AdversaryScript s{2, 1.0, {ScriptStep::Fork(1, 2), ScriptStep::Grow(2, 1.0)}};
  const auto trace = RunScript(s, IntegratorConfig{});
  const auto rep = BuildCertificateReport(trace, LineageY(s));
  bool found = false;
  for (const auto& e : rep.entries) {
    if (e.record == 1 && e.inequality.rfind("growth", 0) == 0) {
      found = true;
      // Leaf 3 is the final optimal leaf, so y on the growing leaf is 0.
      CHECK(e.rhs == 0.0);
      CHECK(e.ok());
    }
  }
  CHECK(found);

  AdversaryScript s2{2, 1.0, {ScriptStep::Fork(1, 2), ScriptStep::Grow(2, 1.0), ScriptStep::Grow(3, 2.0)}};
  const auto trace2 = RunScript(s2, IntegratorConfig{});
  const auto rep2 = BuildCertificateReport(trace2, LineageY(s2));
  CHECK(rep2.passed());
  for (const auto& e : rep2.entries) {
    if (e.record == 1 && e.inequality.rfind("growth", 0) == 0) {
      CHECK(e.rhs == doctest::Approx(GrowthFactor(2, trace2.final_tree.max_degree_seen())));
    }
  }
}

TEST_CASE("certificate: merges never raise the potential on random games") {
  int merges = 0;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto script = GenRandomScript(2 + seed % 4, 50, seed);
    const auto trace = RunScript(script, IntegratorConfig{});
    const auto rep = BuildCertificateReport(trace, LineageY(script));
    for (const auto& e : rep.entries) {
      if (e.inequality.rfind("merge", 0) == 0) {
        ++merges;
        CHECK(e.lhs <= 1e-9);
      }
    }
    CHECK(rep.passed());
  }
  CHECK(merges > 0);
}

TEST_CASE("certificate rejects a play from a different script") {
  const auto a = GenRandomScript(3, 30, 1);
  const auto b = GenRandomScript(3, 30, 2);
  const auto trace = RunScript(a, IntegratorConfig{});
  auto play = LineageY(b);
  play.final_leaf = 9999;
  try {
    BuildCertificateReport(trace, play);
    FAIL("expected input error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInputError);
  }
}

TEST_CASE("finite differences agree with the analytic potential rate") {
  AdversaryScript star{3, 1.0, {ScriptStep::Fork(1, 2), ScriptStep::Grow(2, 1.0)}};
  IntegratorConfig dense;
  dense.sample_every = 4;
  const auto trace = RunScript(star, dense);
  const auto play = LineageY(star);
  const double dev = FiniteDiffCheck(trace, play);
  CHECK(dev <= 1e-4);

  // Central differences: shrinking the probe does not make things worse
  // beyond the rounding floor.
  const double coarse = FiniteDiffCheck(trace, play, 1e-2);
  const double fine = FiniteDiffCheck(trace, play, 5e-3);
  CHECK(fine <= coarse * 0.5 + 1e-9);

  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto script = GenRandomScript(2 + seed % 4, 30, seed);
    const auto tr = RunScript(script, dense);
    CHECK(FiniteDiffCheck(tr, LineageY(script)) <= 1e-4);
  }
}

TEST_CASE("finite differences on a stationary segment are zero") {
  auto t = EvolvingTree::NewGame(3, 1.0);
  const auto kids = t.Fork(1, 2);
  StepRecord rec;
  rec.step = ScriptStep::Grow(kids[0], 1.0);
  rec.tree_before = t;
  TrajectorySample smp;
  smp.leaf_weight = 0.5;
  smp.x.mass = {0.0, 1.0, 0.0, 1.0};
  smp.lambda.lambda.assign(4, 0.0);
  rec.samples = {smp};
  GameTrace trace;
  trace.records = {rec};
  OptimalPlay play;
  play.final_leaf = kids[1];
  play.lineage = {kids[1], 1};
  CHECK(RatesAt(rec, smp, play).p_rate == 0.0);
  CHECK(FiniteDiffCheck(trace, play) == 0.0);
}
