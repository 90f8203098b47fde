#include "lgt/potential.hpp"

#include <algorithm>
#include <cmath>

#include "lgt/error.hpp"

namespace lgt {

namespace {

template <typename Real>
struct Terms {
  Real P = 0, D = 0, Psi = 0;
};

template <typename Real>
Terms<Real> PotentialTerms(const EvolvingTree& tree, const NodeValues& revised, const NodeValues& shift,
                           const FractionalState& x, const NodeValues& y, const NodeValues* dx = nullptr,
                           Real h = 0, NodeId leaf = kNoNode, Real leaf_revised_shift = 0) {
  const Real k = tree.k();
  Terms<Real> out;
  for (NodeId u : tree.Preorder()) {
    Real xu = x[u];
    if (dx != nullptr) xu += h * static_cast<Real>((*dx)[u]);
    Real w = revised[u];
    if (u == leaf) w += leaf_revised_shift;
    const Real d = shift[u];
    const Real yu = u < y.size() ? y[u] : 0.0;
    const Real hu = tree.depth(u);
    const Real log_term = yu != 0 ? std::log((1 + d) / (xu + d)) : Real(0);
    out.P += 2 * w * (4 * k * yu * log_term + (2 * k - hu) * xu);
    out.D += w * (2 * yu * log_term + xu);
    out.Psi += hu * w * xu;
  }
  return out;
}

struct FlowAt {
  EvolvingTree tree;
  NodeValues revised;
  NodeValues shift;
  NodeId leaf;
  double rate;
};

FlowAt FlowForSample(const StepRecord& rec, const TrajectorySample& sample) {
  FlowAt f{rec.tree_before, {}, {}, rec.step.leaf, 0.0};
  f.tree.SetWeight(f.leaf, sample.leaf_weight);
  f.revised = RevisedWeights(f.tree);
  f.shift = ShiftVector(f.tree);
  f.rate = RevisedRate(f.tree, f.leaf);
  return f;
}

}  // namespace

PotentialValue EvalPotential(const EvolvingTree& tree, const NodeValues& revised, const NodeValues& shift,
                             const FractionalState& x, const NodeValues& y) {
  const auto t = PotentialTerms<double>(tree, revised, shift, x, y);
  return {t.P, t.D, t.Psi};
}

PotentialValue EvalPotential(const EvolvingTree& tree, const FractionalState& x, const NodeValues& y) {
  return EvalPotential(tree, RevisedWeights(tree), ShiftVector(tree), x, y);
}

NodeId OptimalPlay::LeafIn(const EvolvingTree& tree) const {
  for (NodeId u : lineage) {
    if (tree.contains(u)) return u;
  }
  throw Error(ErrorKind::kInputError, "optimal play has no representative in this tree");
}

NodeValues OptimalPlay::Indicator(const EvolvingTree& tree) const {
  NodeValues y(tree.id_capacity(), 0.0);
  const NodeId leaf = LeafIn(tree);
  if (!tree.is_leaf(leaf)) throw Error(ErrorKind::kInputError, "optimal play representative is not a leaf");
  for (NodeId u = leaf; u != tree.root(); u = tree.parent(u)) y[u] = 1.0;
  return y;
}

OptimalPlay LineageY(const AdversaryScript& script) {
  const EvolvingTree final_tree = ValidateScript(script);
  OptimalPlay play;
  play.final_leaf = OptLeaf(final_tree);
  for (NodeId u = play.final_leaf; u != final_tree.root(); u = final_tree.forked_from(u)) {
    play.lineage.push_back(u);
  }
  return play;
}

RateSnapshot RatesAt(const StepRecord& rec, const TrajectorySample& sample, const OptimalPlay& play) {
  const FlowAt f = FlowForSample(rec, sample);
  const FlowInputs in{f.tree, f.revised, f.shift, f.leaf, f.rate};
  const NodeValues v = MassVelocity(in, sample.x, sample.lambda);
  const NodeValues y = play.Indicator(f.tree);
  const double k = f.tree.k();
  const FractionalState& x = sample.x;

  RateSnapshot r;
  r.revised_rate = f.rate;
  r.leaf_mass = x[f.leaf];
  r.leaf_y = y[f.leaf];
  r.cost_rate = x[f.leaf];  // true weight grows at rate 1
  for (NodeId u : f.tree.Preorder()) {
    const double wr = (u == f.leaf) ? f.rate : 0.0;
    const double h = f.tree.depth(u);
    const double d = f.shift[u];
    r.cost_rate += f.tree.weight(u) * std::abs(v[u]);
    r.psi_rate += h * (wr * x[u] + f.revised[u] * v[u]);
    const double log_term = y[u] != 0.0 ? std::log((1.0 + d) / (x[u] + d)) : 0.0;
    r.d_rate += wr * (2.0 * y[u] * log_term + x[u]) + f.revised[u] * v[u] * (1.0 - 2.0 * y[u] / (x[u] + d));
    r.lambda_mass += (x[u] + d) * sample.lambda[u];
  }
  r.p_rate = 4.0 * k * r.d_rate - 2.0 * r.psi_rate;
  return r;
}

double GrowthFactor(int k, int d_max) {
  return 16.0 * k * (2.0 + k * std::log(static_cast<double>(d_max)));
}

double ForkAllowance(int k, double epsilon, int step_number, int d_max) {
  return std::ldexp(epsilon, 2 - step_number) *
         (2.0 * k + 4.0 * k * k * std::log(static_cast<double>(d_max)));
}

CertificateReport BuildCertificateReport(const GameTrace& trace, const OptimalPlay& play, double rel_tol) {
  if (play.lineage.empty() || !trace.final_tree.contains(play.final_leaf) ||
      OptLeaf(trace.final_tree) != play.final_leaf) {
    throw Error(ErrorKind::kInputError, "optimal play does not belong to this trace");
  }
  CertificateReport rep;
  rep.k = trace.script.k;
  rep.epsilon = trace.script.epsilon;
  rep.d_max = trace.final_tree.max_degree_seen();
  rep.total_cost = trace.ledger.total();
  rep.opt = OptDistance(trace.final_tree);
  rep.min_sampled_lambda = trace.stats.min_internal_lambda;
  const double k = rep.k;

  auto add = [&rep](CertificateEntry e) {
    rep.max_violation = std::max(rep.max_violation, e.lhs - e.rhs);
    if (!e.ok()) ++rep.failures;
    rep.entries.push_back(std::move(e));
  };
  auto rel = [rel_tol](double rhs) { return rel_tol * (1.0 + std::abs(rhs)); };
  auto potential = [&play](const EvolvingTree& t, const FractionalState& x) {
    return EvalPotential(t, x, play.Indicator(t)).P;
  };

  const EvolvingTree initial = EvolvingTree::NewGame(trace.script.k, trace.script.epsilon);
  rep.p0 = potential(initial, InitState(initial));
  rep.p_final = potential(trace.final_tree, trace.final_x);

  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const StepRecord& rec = trace.records[i];
    const int idx = static_cast<int>(i);
    const int d_max = rec.tree_after.max_degree_seen();
    const double p_before = potential(rec.tree_before, rec.x_before);
    const double p_after = potential(rec.tree_after, rec.x_after);
    switch (rec.step.kind) {
      case StepKind::kGrow: {
        const NodeValues y = play.Indicator(rec.tree_before);
        const double y_leaf = y[rec.step.leaf];
        rep.optimal_service += rec.step.duration * y_leaf;
        const double rhs = GrowthFactor(rep.k, d_max) * rec.step.duration * y_leaf;
        add({idx, "growth: dC + dP <= 16k(2+k ln dmax) dw y", rec.step.duration,
             rec.cost.total() + (p_after - p_before), rhs, rel(rhs)});
        const double log_d = std::log(static_cast<double>(d_max));
        for (const TrajectorySample& s : rec.samples) {
          const RateSnapshot r = RatesAt(rec, s, play);
          const double c_rhs = 3.0 * r.revised_rate * r.leaf_mass + 2.0 * r.lambda_mass;
          add({idx, "rate: C' <= 3w~'x + 2 sum (x+d) lambda", s.t, r.cost_rate, c_rhs, rel(c_rhs)});
          add({idx, "rate: -k w~'x + sum lambda (x+d) <= Psi'", s.t,
               -k * r.revised_rate * r.leaf_mass + r.lambda_mass, r.psi_rate, rel(r.psi_rate)});
          const double d_rhs = -r.revised_rate * r.leaf_mass + 2.0 * (2.0 + k * log_d) * r.leaf_y * r.revised_rate;
          add({idx, "rate: D' <= -w~'x + 2(2+k ln dmax) y w~'", s.t, r.d_rate, d_rhs, rel(d_rhs)});
        }
        break;
      }
      case StepKind::kFork: {
        const double allowance = ForkAllowance(rep.k, rep.epsilon, rec.step_number, d_max);
        rep.fork_increment_sum += allowance;
        add({idx, "fork: dP <= eps 2^(2-j) (2k + 4k^2 ln dmax)", 0.0, p_after - p_before, allowance, 1e-9});
        break;
      }
      case StepKind::kDelete: {
        if (!rec.tree_mid || !rec.x_mid) throw Error(ErrorKind::kInputError, "delete record lacks mid state");
        const double p_mid = potential(*rec.tree_mid, *rec.x_mid);
        add({idx, "deadend: dP + movement <= 0", 0.0, (p_mid - p_before) + rec.cost.movement, 0.0, rel(0.0)});
        if (rec.outcome && rec.outcome->merged) {
          add({idx, "merge: dP <= 0", 0.0, p_after - p_mid, 0.0, 1e-9});
        }
        break;
      }
    }
  }
  rep.bound = GrowthFactor(rep.k, rep.d_max) * (rep.opt + rep.epsilon) + rep.p0 + rep.fork_increment_sum;
  add({-1, "end-to-end: C <= 16k(2+k ln dmax)(OPT+eps) + P0 + forks", 0.0, rep.total_cost, rep.bound, 0.0});
  return rep;
}

double FiniteDiffCheck(const GameTrace& trace, const OptimalPlay& play, double probe) {
  double worst = 0.0;
  for (const StepRecord& rec : trace.records) {
    if (rec.step.kind != StepKind::kGrow) continue;
    for (const TrajectorySample& s : rec.samples) {
      const FlowAt f = FlowForSample(rec, s);
      const FlowInputs in{f.tree, f.revised, f.shift, f.leaf, f.rate};
      const NodeValues v = MassVelocity(in, s.x, s.lambda);
      const NodeValues y = play.Indicator(f.tree);
      double scale = f.revised[f.leaf] / f.rate;
      for (NodeId u : f.tree.Preorder()) {
        if (v[u] != 0.0) scale = std::min(scale, (s.x[u] + f.shift[u]) / std::abs(v[u]));
      }
      using Real = long double;
      const Real h = static_cast<Real>(probe) * scale;
      const auto plus = PotentialTerms<Real>(f.tree, f.revised, f.shift, s.x, y, &v, h, f.leaf, f.rate * h);
      const auto minus = PotentialTerms<Real>(f.tree, f.revised, f.shift, s.x, y, &v, -h, f.leaf, -f.rate * h);
      const double numeric = static_cast<double>((plus.P - minus.P) / (2 * h));
      const double analytic = RatesAt(rec, s, play).p_rate;
      worst = std::max(worst, std::abs(numeric - analytic) / (1.0 + std::abs(analytic)));
    }
  }
  return worst;
}

}  // namespace lgt
