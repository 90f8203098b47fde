#include <doctest.h>

#include <cmath>
#include <random>

#include "lgt/dynamics.hpp"
#include "lgt/error.hpp"
#include "lgt/harness.hpp"
#include "oracles.hpp"

using namespace lgt;

namespace {

// r - c_r - {a, b} with all the mass split evenly.
struct Star {
  EvolvingTree tree = EvolvingTree::NewGame(3, 1.0);
  NodeId a = kNoNode, b = kNoNode;
  FractionalState x;
  Star() {
    const auto kids = tree.Fork(1, 2);
    a = kids[0];
    b = kids[1];
    x.mass.assign(tree.id_capacity(), 0.0);
    x.mass[1] = 1.0;
    x.mass[a] = x.mass[b] = 0.5;
  }
};

}  // namespace

TEST_CASE("lone growing root child: root multiplier equals the revised rate, x is fixed") {
  const auto t = EvolvingTree::NewGame(3, 1.0);
  const auto x = InitState(t);
  const NodeValues w = RevisedWeights(t), d = ShiftVector(t);
  const double rate = RevisedRate(t, 1);
  const FlowInputs in{t, w, d, 1, rate};
  const auto lam = SolveMultipliers(in, x);
  CHECK(lam[0] == doctest::Approx(2.0 * x[1] * rate / (x[1] + d[1])).epsilon(1e-14));
  CHECK(lam[0] == doctest::Approx(rate).epsilon(1e-14));
  CHECK(lam[1] == 0.0);
  CHECK(MassVelocity(in, x, lam)[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("star: multipliers 1/2 and velocities -1/2, +1/2") {
  Star s;
  NodeValues w(s.tree.id_capacity(), 1.0), d(s.tree.id_capacity(), 0.5);
  d[1] = 1.0;
  const FlowInputs in{s.tree, w, d, s.a, 1.0};
  const auto lam = SolveMultipliers(in, s.x);
  CHECK(lam[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lam[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lam[s.a] == 0.0);
  CHECK(lam[s.b] == 0.0);
  const auto v = MassVelocity(in, s.x, lam);
  CHECK(v[s.a] == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(v[s.b] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(0.0).epsilon(1e-14));
  // The oracle agrees.
  const auto dense = oracle::DenseMultipliers(s.tree, w, d, s.x, s.a, 1.0);
  CHECK(dense[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("zero-mass growing leaf: multipliers and velocities vanish") {
  Star s;
  s.x.mass[s.a] = 0.0;
  s.x.mass[s.b] = 1.0;
  const NodeValues w = RevisedWeights(s.tree), d = ShiftVector(s.tree);
  const FlowInputs in{s.tree, w, d, s.a, RevisedRate(s.tree, s.a)};
  const auto lam = SolveMultipliers(in, s.x);
  const auto v = MassVelocity(in, s.x, lam);
  for (NodeId u = 0; u < s.tree.id_capacity(); ++u) {
    CHECK(lam[u] == 0.0);
    CHECK(v[u] == 0.0);
  }
}

TEST_CASE("oracle: tree elimination matches a dense solve on 200 random trees") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 4;
    const auto t = oracle::RandomTree(rng, k, 50, 0.5);
    const auto x = oracle::RandomState(t, rng);
    const auto leaves = t.Leaves();
    const NodeId leaf = leaves[std::uniform_int_distribution<std::size_t>(0, leaves.size() - 1)(rng)];
    const NodeValues w = RevisedWeights(t), d = ShiftVector(t);
    const double rate = RevisedRate(t, leaf);
    const auto lam = SolveMultipliers({t, w, d, leaf, rate}, x);
    const auto dense = oracle::DenseMultipliers(t, w, d, x, leaf, rate);
    for (NodeId u = 0; u < t.id_capacity(); ++u) {
      if (u != 0 && !t.contains(u)) continue;
      worst = std::max(worst, std::abs(lam[u] - dense[u]));
    }
    for (NodeId u : t.Leaves()) CHECK(lam[u] == 0.0);
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("property: velocities conserve mass and multipliers are nonnegative") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = oracle::RandomTree(rng, 2 + trial % 4, 40);
    const auto x = oracle::RandomState(t, rng);
    const auto leaves = t.Leaves();
    const NodeId leaf = leaves[trial % leaves.size()];
    const NodeValues w = RevisedWeights(t), d = ShiftVector(t);
    const FlowInputs in{t, w, d, leaf, RevisedRate(t, leaf)};
    const auto lam = SolveMultipliers(in, x);
    const auto v = MassVelocity(in, x, lam);
    CHECK(std::abs(v[t.root_child()]) <= 1e-12);
    for (NodeId u : t.Preorder()) {
      const auto ch = t.children(u);
      if (ch.empty()) continue;
      double s = 0.0;
      for (NodeId c : ch) s += v[c];
      CHECK(std::abs(s - v[u]) <= 1e-12);
      CHECK(lam[u] >= -1e-9);
    }
    CHECK(lam[0] >= -1e-9);
  }
}

TEST_CASE("growth with a zero-mass leaf or zero duration is free") {
  Star s;
  s.x.mass[s.a] = 0.0;
  s.x.mass[s.b] = 1.0;
  IntegratorConfig cfg;
  auto t = s.tree;
  const auto r = IntegrateGrowth(t, s.x, s.a, 2.5, cfg);
  CHECK(r.cost.service == 0.0);
  CHECK(r.cost.movement == 0.0);
  CHECK(r.x[s.b] == 1.0);
  CHECK(t.weight(s.a) == 2.5);

  Star z;
  auto t2 = z.tree;
  const auto r0 = IntegrateGrowth(t2, z.x, z.a, 0.0, cfg);
  CHECK(r0.cost.total() == 0.0);
  CHECK(r0.x[z.a] == 0.5);
  CHECK(t2.weight(z.a) == 0.0);
}

TEST_CASE("star: short growth pays service x_a and movement at the analytic rate") {
  Star s;
  s.tree.SetWeight(s.a, 1.0);
  s.tree.SetWeight(s.b, 2.0);
  const NodeValues w = RevisedWeights(s.tree), d = ShiftVector(s.tree);
  const FlowInputs in{s.tree, w, d, s.a, RevisedRate(s.tree, s.a)};
  const auto v = MassVelocity(in, s.x, SolveMultipliers(in, s.x));
  const double movement_rate = 1.0 * std::abs(v[s.a]) + 2.0 * std::abs(v[s.b]);
  const double tau = 1e-6;
  IntegratorConfig cfg;
  auto t = s.tree;
  const auto r = IntegrateGrowth(t, s.x, s.a, tau, cfg);
  CHECK(r.cost.service / tau == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(r.cost.movement / tau == doctest::Approx(movement_rate).epsilon(1e-5));
}

TEST_CASE("growth moves mass away from the growing leaf and keeps the state valid") {
  Star s;
  IntegratorConfig cfg;
  auto t = s.tree;
  const auto r = IntegrateGrowth(t, s.x, s.a, 3.0, cfg);
  CHECK(r.x[s.a] < 0.5);
  CHECK(r.x[s.b] > 0.5);
  CHECK(Validate(t, r.x, 1e-9).empty());
  CHECK(r.stats.max_conservation_residual <= 1e-9);
  CHECK(r.stats.min_internal_lambda >= -1e-9);
  REQUIRE(r.samples.size() >= 2);
  CHECK(r.samples.front().t == 0.0);
  CHECK(r.samples.back().t == doctest::Approx(3.0));
  for (const auto& smp : r.samples) {
    CHECK(smp.lambda[s.a] == 0.0);
    CHECK(smp.lambda[s.b] == 0.0);
  }
}

TEST_CASE("drain of an empty leaf is immediate") {
  Star s;
  s.x.mass[s.a] = 0.0;
  s.x.mass[s.b] = 1.0;
  const auto r = DeadendDrain(s.tree, s.x, s.a, IntegratorConfig{});
  CHECK(r.movement == 0.0);
  CHECK(r.phases == 0);
  CHECK(r.x[s.b] == 1.0);
}

TEST_CASE("star drain sends everything to the sibling and pays at least the path cost") {
  Star s;
  s.tree.SetWeight(s.a, 1.0);
  s.tree.SetWeight(s.b, 2.0);
  const auto r = DeadendDrain(s.tree, s.x, s.a, IntegratorConfig{});
  CHECK(r.x[s.a] == 0.0);
  CHECK(r.x[s.b] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.movement >= 0.5 * (1.0 + 2.0) - 1e-9);
  auto after = s.tree;
  const auto out = after.DeleteLeaf(s.a);
  const auto projected = ProjectAfterDelete(r.x, out);
  CHECK(Validate(after, projected, 1e-9).empty());
}

TEST_CASE("run script: empty script is free") {
  const auto trace = RunScript({3, 1.0, {}}, IntegratorConfig{});
  CHECK(trace.records.empty());
  CHECK(trace.ledger.total() == 0.0);
}

TEST_CASE("run script: fork, grow, delete ends with a single merged edge") {
  AdversaryScript script{3, 1.0, {ScriptStep::Fork(1, 2), ScriptStep::Grow(2, 1.0), ScriptStep::Delete(3)}};
  const auto trace = RunScript(script, IntegratorConfig{});
  REQUIRE(trace.records.size() == 3);
  CHECK(trace.final_tree.size() == 2);
  CHECK(trace.final_tree.root_child() == 2);
  CHECK(trace.final_tree.weight(2) == 1.0);
  const auto& del = trace.records[2];
  REQUIRE(del.outcome.has_value());
  CHECK(del.outcome->merged.has_value());
  CHECK(trace.final_x[2] == 1.0);
  CHECK(trace.ledger.total() > 0.0);
}

TEST_CASE("run script is deterministic bit for bit") {
  const auto script = GenRandomScript(4, 40, 5);
  const auto a = RunScript(script, IntegratorConfig{});
  const auto b = RunScript(script, IntegratorConfig{});
  CHECK(a.ledger.service == b.ledger.service);
  CHECK(a.ledger.movement == b.ledger.movement);
  CHECK(a.final_x.mass == b.final_x.mass);
  CHECK(a.stats.euler_steps == b.stats.euler_steps);
}

TEST_CASE("property: ledger totals equal the per-step breakdown; costs nonnegative") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto trace = RunScript(GenRandomScript(2 + seed % 4, 40, seed), IntegratorConfig{});
    CHECK(trace.records.size() == trace.script.steps.size());
    double service = 0.0, movement = 0.0;
    for (const auto& c : trace.ledger.per_step) {
      CHECK(c.service >= 0.0);
      CHECK(c.movement >= 0.0);
      service += c.service;
      movement += c.movement;
    }
    CHECK(std::abs(service - trace.ledger.service) <= 1e-9);
    CHECK(std::abs(movement - trace.ledger.movement) <= 1e-9);
    CHECK(trace.stats.min_internal_lambda >= -1e-9);
    CHECK(trace.stats.max_conservation_residual <= 1e-9);
  }
}

TEST_CASE("invalid integrator configurations are rejected") {
  IntegratorConfig cfg;
  cfg.max_relative_step = 0.0;
  CHECK_THROWS_AS(cfg.Validate(), Error);
  IntegratorConfig cfg2;
  cfg2.drain_tolerance = -1.0;
  CHECK_THROWS_AS(RunScript({2, 1.0, {}}, cfg2), Error);
}
