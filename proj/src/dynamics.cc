#include "lgt/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lgt/error.hpp"

namespace lgt {

void IntegratorConfig::Validate() const {
  if (!(max_relative_step > 0.0) || !(min_dt > 0.0) || !(drain_tolerance > 0.0) ||
      !(conservation_tol > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "integrator tolerances must be positive");
  }
  if (sample_every < 0 || max_steps == 0 || max_drain_phases <= 0) {
    throw Error(ErrorKind::kInvalidParameter, "integrator limits must be positive");
  }
}

void SolverStats::Merge(const SolverStats& o) {
  min_internal_lambda = std::min(min_internal_lambda, o.min_internal_lambda);
  max_conservation_residual = std::max(max_conservation_residual, o.max_conservation_residual);
  euler_steps += o.euler_steps;
}

double RevisedRate(const EvolvingTree& tree, NodeId leaf) {
  const int k = tree.k();
  return static_cast<double>(2 * k - 1) / static_cast<double>(2 * k - tree.depth(leaf));
}

MultiplierVector SolveMultipliers(const FlowInputs& in, const FractionalState& x) {
  const EvolvingTree& tree = in.tree;
  const std::size_t n = tree.id_capacity();
  // x'_v = alpha_v + beta_v * lambda_parent(v); lambda_v = a_v + b_v * lambda_parent(v).
  NodeValues alpha(n, 0.0), beta(n, 0.0), a(n, 0.0), b(n, 0.0);
  const std::vector<NodeId> order = tree.Preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId v = *it;
    const double w = in.revised[v];
    const double s = (x[v] + in.shift[v]) / w;
    auto ch = tree.children(v);
    if (ch.empty()) {
      const double rate = (v == in.growing_leaf) ? in.revised_rate : 0.0;
      alpha[v] = -2.0 * x[v] * rate / w;
      beta[v] = s;
      continue;
    }
    double sum_alpha = 0.0, sum_beta = 0.0;
    for (NodeId c : ch) {
      sum_alpha += alpha[c];
      sum_beta += beta[c];
    }
    const double denom = sum_beta + s;
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      throw Error(ErrorKind::kInternal, "singular multiplier system at node " + std::to_string(v));
    }
    a[v] = -sum_alpha / denom;
    b[v] = s / denom;
    alpha[v] = sum_alpha * s / denom;
    beta[v] = sum_beta * s / denom;
  }
  MultiplierVector out;
  out.lambda.assign(n, 0.0);
  const NodeId cr = tree.root_child();
  if (!(beta[cr] > 0.0)) throw Error(ErrorKind::kInternal, "singular multiplier system at the root");
  out.lambda[tree.root()] = -alpha[cr] / beta[cr];
  for (NodeId v : order) {
    if (tree.children(v).empty()) continue;
    out.lambda[v] = a[v] + b[v] * out.lambda[tree.parent(v)];
  }
  return out;
}

NodeValues MassVelocity(const FlowInputs& in, const FractionalState& x, const MultiplierVector& lambda) {
  NodeValues v(in.tree.id_capacity(), 0.0);
  for (NodeId u : in.tree.Preorder()) {
    const double rate = (u == in.growing_leaf) ? in.revised_rate : 0.0;
    v[u] = (-2.0 * x[u] * rate + (x[u] + in.shift[u]) * (lambda[in.tree.parent(u)] - lambda[u])) /
           in.revised[u];
  }
  return v;
}

namespace {

double MinInternalLambda(const EvolvingTree& tree, const MultiplierVector& lambda) {
  double m = lambda[tree.root()];
  for (NodeId u : tree.Preorder()) {
    if (!tree.children(u).empty()) m = std::min(m, lambda[u]);
  }
  return m;
}

// Largest Euler step satisfying the relative-movement and positivity caps.
double StableStep(const EvolvingTree& tree, const FractionalState& x, const NodeValues& shift,
                  const NodeValues& velocity, double max_rel, double limit) {
  double dt = limit;
  for (NodeId u : tree.Preorder()) {
    const double speed = std::abs(velocity[u]);
    if (speed == 0.0) continue;
    dt = std::min(dt, max_rel * (x[u] + shift[u]) / speed);
    if (velocity[u] < 0.0 && x[u] > 0.0) dt = std::min(dt, 0.5 * x[u] / speed);
  }
  return dt;
}

bool AllZero(const EvolvingTree& tree, const NodeValues& v) {
  for (NodeId u : tree.Preorder()) {
    if (v[u] != 0.0) return false;
  }
  return true;
}

// One explicit Euler update followed by drift repair. Returns the sum of
// |dx_u| weighted by `weights` (true weights at the step midpoint).
double EulerUpdate(const EvolvingTree& tree, FractionalState& x, const NodeValues& velocity, double dt,
                   NodeId leaf, double leaf_mid_weight, const IntegratorConfig& cfg, SolverStats& stats) {
  FractionalState next = x;
  for (NodeId u : tree.Preorder()) next.mass[u] = x[u] + dt * velocity[u];
  RepairConservation(tree, next);
  const double residual = ConservationResidual(tree, next);
  stats.max_conservation_residual = std::max(stats.max_conservation_residual, residual);
  if (residual > cfg.conservation_tol) {
    throw Error(ErrorKind::kIntegrationFailure, "conservation residual " + std::to_string(residual));
  }
  double movement = 0.0;
  for (NodeId u : tree.Preorder()) {
    const double w = (u == leaf) ? leaf_mid_weight : tree.weight(u);
    movement += w * std::abs(next[u] - x[u]);
  }
  x = std::move(next);
  ++stats.euler_steps;
  return movement;
}

void CheckLeaf(const EvolvingTree& tree, NodeId leaf, const char* what) {
  if (!tree.is_leaf(leaf)) {
    throw Error(ErrorKind::kRejectedStep, std::string(what) + ": node " + std::to_string(leaf) + " is not a leaf");
  }
}

}  // namespace

GrowthResult IntegrateGrowth(EvolvingTree& tree, const FractionalState& x0, NodeId leaf, double duration,
                             const IntegratorConfig& cfg) {
  CheckLeaf(tree, leaf, "grow");
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorKind::kRejectedStep, "grow duration must be nonnegative");
  }
  GrowthResult out;
  out.x = x0;
  out.x.mass.resize(std::max(out.x.mass.size(), tree.id_capacity()), 0.0);
  out.stats.max_conservation_residual = ConservationResidual(tree, out.x);

  const double w0 = tree.weight(leaf);
  const double scale = RevisedRate(tree, leaf);
  const double slack = std::ldexp(tree.epsilon(), -tree.creation_step(leaf));
  const NodeValues shift = ShiftVector(tree);
  NodeValues revised = RevisedWeights(tree);
  const FlowInputs in{tree, revised, shift, leaf, scale};

  double t = 0.0;
  std::size_t step = 0;
  auto sample = [&](const MultiplierVector& lambda) {
    out.samples.push_back({t, w0 + t, out.x, lambda});
  };
  while (t < duration) {
    revised[leaf] = scale * (w0 + t + slack);
    const MultiplierVector lambda = SolveMultipliers(in, out.x);
    out.stats.min_internal_lambda = std::min(out.stats.min_internal_lambda, MinInternalLambda(tree, lambda));
    if (cfg.sample_every > 0 && step % static_cast<std::size_t>(cfg.sample_every) == 0) sample(lambda);
    const NodeValues velocity = MassVelocity(in, out.x, lambda);
    const double remaining = duration - t;
    if (AllZero(tree, velocity) && out.x[leaf] == 0.0) {
      // A massless growing leaf leaves the whole state stationary.
      t = duration;
      break;
    }
    double dt = StableStep(tree, out.x, shift, velocity, cfg.max_relative_step, remaining);
    dt = std::min(dt, 100.0 * cfg.max_relative_step * revised[leaf] / scale);
    if (dt < cfg.min_dt) {
      throw Error(ErrorKind::kIntegrationFailure, "time step underflow at t=" + std::to_string(t));
    }
    const bool last = dt >= remaining;
    if (last) dt = remaining;
    const double leaf_before = out.x[leaf];
    out.cost.movement += EulerUpdate(tree, out.x, velocity, dt, leaf, w0 + t + 0.5 * dt, cfg, out.stats);
    out.cost.service += 0.5 * (leaf_before + out.x[leaf]) * dt;
    t = last ? duration : t + dt;
    if (++step > cfg.max_steps) throw Error(ErrorKind::kIntegrationFailure, "step budget exhausted");
  }
  tree.SetWeight(leaf, w0 + duration);
  if (cfg.sample_every > 0) {
    revised[leaf] = scale * (w0 + duration + slack);
    const MultiplierVector lambda = SolveMultipliers(in, out.x);
    out.stats.min_internal_lambda = std::min(out.stats.min_internal_lambda, MinInternalLambda(tree, lambda));
    t = duration;
    sample(lambda);
  }
  return out;
}

DrainResult DeadendDrain(const EvolvingTree& tree, const FractionalState& x0, NodeId leaf,
                         const IntegratorConfig& cfg) {
  CheckLeaf(tree, leaf, "delete");
  if (leaf == tree.root_child()) throw Error(ErrorKind::kRejectedStep, "cannot delete the root child");
  DrainResult out;
  out.x = x0;
  out.x.mass.resize(std::max(out.x.mass.size(), tree.id_capacity()), 0.0);
  if (out.x[leaf] == 0.0) return out;

  const NodeValues shift = ShiftVector(tree);
  NodeValues revised = RevisedWeights(tree);
  const double base = revised[leaf];
  // Virtual log-time s: the dying leaf's revised weight is base * e^s, so it
  // doubles every ln 2 and its growth rate equals its current value.
  FlowInputs in{tree, revised, shift, leaf, base};
  double s = 0.0;
  const double phase_length = std::log(2.0);
  std::size_t step = 0;
  while (out.x[leaf] > cfg.drain_tolerance) {
    revised[leaf] = base * std::exp(s);
    in.revised_rate = revised[leaf];
    if (!std::isfinite(revised[leaf])) throw Error(ErrorKind::kDrainFailure, "virtual weight overflow");
    const MultiplierVector lambda = SolveMultipliers(in, out.x);
    out.stats.min_internal_lambda = std::min(out.stats.min_internal_lambda, MinInternalLambda(tree, lambda));
    const NodeValues velocity = MassVelocity(in, out.x, lambda);
    double dt = StableStep(tree, out.x, shift, velocity, cfg.max_relative_step,
                           100.0 * cfg.max_relative_step);
    if (dt < cfg.min_dt) throw Error(ErrorKind::kDrainFailure, "time step underflow");
    out.movement += EulerUpdate(tree, out.x, velocity, dt, leaf, tree.weight(leaf), cfg, out.stats);
    s += dt;
    out.phases = static_cast<int>(s / phase_length);
    if (out.phases > cfg.max_drain_phases || ++step > cfg.max_steps) {
      throw Error(ErrorKind::kDrainFailure, "dying leaf kept mass " + std::to_string(out.x[leaf]) + " after " +
                                                std::to_string(out.phases) + " phases");
    }
  }

  // Hand the residue to the siblings in proportion to x + delta, and push each
  // share down its subtree the same way.
  const double residue = out.x[leaf];
  if (residue > 0.0) {
    const FractionalState before = out.x;
    const NodeId p = tree.parent(leaf);
    double pool = 0.0;
    for (NodeId v : tree.children(p)) {
      if (v != leaf) pool += before[v] + shift[v];
    }
    std::vector<std::pair<NodeId, double>> stack;
    for (NodeId v : tree.children(p)) {
      if (v != leaf) stack.emplace_back(v, residue * (before[v] + shift[v]) / pool);
    }
    while (!stack.empty()) {
      auto [u, amount] = stack.back();
      stack.pop_back();
      out.x.mass[u] += amount;
      for (NodeId c : tree.children(u)) {
        stack.emplace_back(c, amount * (before[c] + shift[c]) / (before[u] + shift[u]));
      }
    }
    out.x.mass[leaf] = 0.0;
    out.movement += MovementCost(tree, before, out.x);
  }
  out.x.mass[leaf] = 0.0;
  return out;
}

Game::Game(int k, double epsilon, const IntegratorConfig& cfg) : tree_(EvolvingTree::NewGame(k, epsilon)) {
  cfg.Validate();
  x_ = InitState(tree_);
  trace_.script.k = k;
  trace_.script.epsilon = epsilon;
  trace_.config = cfg;
  trace_.final_tree = tree_;
  trace_.final_x = x_;
}

GameTrace&& Game::TakeTrace() && { return std::move(trace_); }

const StepRecord& Game::Play(const ScriptStep& step) {
  const IntegratorConfig& cfg = trace_.config;
  StepRecord rec;
  rec.step_number = tree_.current_step();
  rec.step = step;
  rec.tree_before = tree_;
  rec.x_before = x_;
  switch (step.kind) {
    case StepKind::kGrow: {
      if (!(step.duration > 0.0)) throw Error(ErrorKind::kRejectedStep, "grow duration must be positive");
      GrowthResult g = IntegrateGrowth(tree_, x_, step.leaf, step.duration, cfg);
      tree_.AdvanceStep();
      x_ = std::move(g.x);
      rec.cost = g.cost;
      rec.samples = std::move(g.samples);
      trace_.stats.Merge(g.stats);
      break;
    }
    case StepKind::kFork: {
      rec.created = tree_.Fork(step.leaf, step.q);
      x_ = ApplyFork(std::move(x_), step.leaf, rec.created);
      break;
    }
    case StepKind::kDelete: {
      DrainResult d = DeadendDrain(tree_, x_, step.leaf, cfg);
      trace_.stats.Merge(d.stats);
      DeleteOutcome outcome;
      outcome.deleted_leaf = step.leaf;
      outcome.parent = tree_.parent(step.leaf);
      tree_.RemoveLeaf(step.leaf);
      DeleteOutcome removal_only = outcome;
      rec.tree_mid = tree_;
      rec.x_mid = ProjectAfterDelete(d.x, removal_only, cfg.drain_tolerance);
      outcome.merged = tree_.SmoothAt(outcome.parent);
      tree_.AdvanceStep();
      x_ = ProjectAfterDelete(std::move(d.x), outcome, cfg.drain_tolerance);
      // A merge can promote a node carrying rounding drift to root child.
      RepairConservation(tree_, x_);
      rec.outcome = outcome;
      rec.cost.movement = d.movement;
      break;
    }
  }
  tree_.CheckInvariants();
  const auto violations = Validate(tree_, x_, cfg.conservation_tol);
  if (!violations.empty()) throw Error(ErrorKind::kInternal, "state left K(T): " + violations.front().Describe());
  trace_.stats.max_conservation_residual =
      std::max(trace_.stats.max_conservation_residual, ConservationResidual(tree_, x_));
  rec.tree_after = tree_;
  rec.x_after = x_;
  trace_.ledger.Add(rec.cost);
  trace_.script.steps.push_back(step);
  trace_.records.push_back(std::move(rec));
  trace_.final_tree = tree_;
  trace_.final_x = x_;
  return trace_.records.back();
}

GameTrace RunScript(const AdversaryScript& script, const IntegratorConfig& cfg) {
  Game game(script.k, script.epsilon, cfg);
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    try {
      game.Play(script.steps[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(i) + ": " + e.what());
    }
  }
  return std::move(game).TakeTrace();
}

}  // namespace lgt
