#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "lgt/evolving_tree.hpp"
#include "lgt/fractional_state.hpp"
#include "lgt/script.hpp"

namespace lgt {

struct IntegratorConfig {
  // No coordinate may move by more than this fraction of (x_u + delta_u) in
  // one explicit Euler step. The growing leaf's revised weight may grow by at
  // most 100x this fraction per step.
  double max_relative_step = 1e-3;
  double min_dt = 1e-300;
  double drain_tolerance = 1e-10;
  double conservation_tol = 1e-9;
  // Record one trajectory sample every `sample_every` Euler steps (plus the
  // first and last instant of every continuous step). 0 disables sampling.
  int sample_every = 16;
  std::size_t max_steps = 50'000'000;
  // Each drain phase doubles the virtual revised weight of the dying leaf.
  int max_drain_phases = 200;

  void Validate() const;
};

// Multipliers for every node, root included. Leaves hold exactly zero.
struct MultiplierVector {
  NodeValues lambda;
  double operator[](NodeId u) const { return u < lambda.size() ? lambda[u] : 0.0; }
};

// Everything that defines the instantaneous vector field. `revised` and
// `shift` are dense NodeValues for the tree's current topology.
struct FlowInputs {
  const EvolvingTree& tree;
  const NodeValues& revised;
  const NodeValues& shift;
  NodeId growing_leaf;
  double revised_rate;  // d/dt of the growing leaf's revised weight
};

// Revised-weight growth rate (2k-1)/(2k-h) of a leaf whose true weight grows at rate 1.
double RevisedRate(const EvolvingTree& tree, NodeId leaf);

// Solves for the multipliers that keep x in K(T) by bottom-up affine
// elimination (lambda_u = a_u + b_u * lambda_parent) followed by top-down
// back-substitution. O(|V|).
MultiplierVector SolveMultipliers(const FlowInputs& in, const FractionalState& x);

// x'_u = (-2 x_u w~'_u + (x_u + delta_u)(lambda_parent - lambda_u)) / w~_u.
NodeValues MassVelocity(const FlowInputs& in, const FractionalState& x, const MultiplierVector& lambda);

struct StepCost {
  double service = 0.0;
  double movement = 0.0;
  double total() const { return service + movement; }
};

struct CostLedger {
  double service = 0.0;
  double movement = 0.0;
  std::vector<StepCost> per_step;

  void Add(const StepCost& c) {
    per_step.push_back(c);
    service += c.service;
    movement += c.movement;
  }
  double total() const { return service + movement; }
};

// Running extremes observed over every Euler step, sampled or not.
struct SolverStats {
  double min_internal_lambda = 0.0;
  double max_conservation_residual = 0.0;
  std::size_t euler_steps = 0;

  void Merge(const SolverStats& o);
};

struct TrajectorySample {
  double t = 0.0;
  double leaf_weight = 0.0;  // true weight of the growing leaf at time t
  FractionalState x;
  MultiplierVector lambda;
};

struct GrowthResult {
  FractionalState x;
  StepCost cost;
  std::vector<TrajectorySample> samples;
  SolverStats stats;
};

// Continuous step: the leaf's weight grows at rate 1 for `duration`. The tree
// is updated in place (w_leaf += duration). Costs are measured exactly along
// the piecewise-linear Euler path with true weights.
GrowthResult IntegrateGrowth(EvolvingTree& tree, const FractionalState& x, NodeId leaf, double duration,
                             const IntegratorConfig& cfg);

struct DrainResult {
  FractionalState x;  // still on the pre-removal topology, x[leaf] == 0
  double movement = 0.0;
  int phases = 0;
  SolverStats stats;
};

// Deadend drain: integrates the dynamics while the dying leaf's revised weight
// escalates geometrically (true weights frozen, no service cost) until its
// mass falls below cfg.drain_tolerance, then hands the residue to its siblings.
DrainResult DeadendDrain(const EvolvingTree& tree, const FractionalState& x, NodeId leaf,
                         const IntegratorConfig& cfg);

struct StepRecord {
  int step_number = 0;  // value of the tree's step counter when the step began
  ScriptStep step;
  EvolvingTree tree_before;
  EvolvingTree tree_after;
  // Delete steps only: tree after removing the leaf but before smoothing, and
  // the drained state projected onto it.
  std::optional<EvolvingTree> tree_mid;
  std::optional<FractionalState> x_mid;
  FractionalState x_before;
  FractionalState x_after;
  std::vector<NodeId> created;
  std::optional<DeleteOutcome> outcome;
  StepCost cost;
  std::vector<TrajectorySample> samples;
};

struct GameTrace {
  AdversaryScript script;
  IntegratorConfig config;
  std::vector<StepRecord> records;
  CostLedger ledger;
  SolverStats stats;
  EvolvingTree final_tree;
  FractionalState final_x;
};

// Plays a whole script from the fresh tree. Deterministic in (script, cfg).
GameTrace RunScript(const AdversaryScript& script, const IntegratorConfig& cfg);

// Incremental form of RunScript, used by front-ends that decide the next step
// from the current state.
class Game {
 public:
  Game(int k, double epsilon, const IntegratorConfig& cfg);

  const EvolvingTree& tree() const { return tree_; }
  const FractionalState& state() const { return x_; }
  const GameTrace& trace() const { return trace_; }
  GameTrace&& TakeTrace() &&;

  // Executes one step and returns its record.
  const StepRecord& Play(const ScriptStep& step);

 private:
  EvolvingTree tree_;
  FractionalState x_;
  GameTrace trace_;
};

}  // namespace lgt
