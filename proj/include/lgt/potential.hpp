#pragma once

#include <string>
#include <vector>

#include "lgt/dynamics.hpp"
#include "lgt/evolving_tree.hpp"
#include "lgt/fractional_state.hpp"
#include "lgt/script.hpp"

namespace lgt {

struct PotentialValue {
  double P = 0.0;    // 2 sum w~ (4k y ln((1+d)/(x+d)) + (2k-h) x)
  double D = 0.0;    // sum w~ (2 y ln((1+d)/(x+d)) + x)
  double Psi = 0.0;  // sum h w~ x
};

// Evaluates the potential with the tree's own revised weights and shifts.
PotentialValue EvalPotential(const EvolvingTree& tree, const FractionalState& x, const NodeValues& y);

// Same, with explicit revised weights and shifts (used along a growth
// trajectory, where only the growing leaf's weight differs from the tree).
PotentialValue EvalPotential(const EvolvingTree& tree, const NodeValues& revised, const NodeValues& shift,
                             const FractionalState& x, const NodeValues& y);

// The offline optimal play: a pure strategy sitting on the lightest final
// root-to-leaf path, traced back through fork lineage.
struct OptimalPlay {
  NodeId final_leaf = kNoNode;
  // final_leaf, its creation-time parent, and so on up to the initial root child.
  std::vector<NodeId> lineage;

  // The leaf the optimal play occupies in `tree`: the deepest lineage member
  // still alive there.
  NodeId LeafIn(const EvolvingTree& tree) const;
  // Indicator of the root-to-LeafIn(tree) path.
  NodeValues Indicator(const EvolvingTree& tree) const;
};

// Replays the script's topology, picks the final lightest leaf (ties: smallest
// id) and records its lineage.
OptimalPlay LineageY(const AdversaryScript& script);

// Instantaneous rates during a continuous step, all evaluated analytically.
struct RateSnapshot {
  double cost_rate = 0.0;    // C' with true weights
  double psi_rate = 0.0;     // Psi'
  double d_rate = 0.0;       // D'
  double p_rate = 0.0;       // P' = 4k D' - 2 Psi'
  double revised_rate = 0.0; // w~'_leaf
  double leaf_mass = 0.0;
  double lambda_mass = 0.0;  // sum over non-root u of (x_u + delta_u) lambda_u
  double leaf_y = 0.0;
};

// Rates at one trajectory sample of a growth record.
RateSnapshot RatesAt(const StepRecord& rec, const TrajectorySample& sample, const OptimalPlay& play);

struct CertificateEntry {
  int record = -1;  // index into trace.records, -1 for game-wide entries
  std::string inequality;
  double time = 0.0;  // within the step, for sampled checks
  double lhs = 0.0;
  double rhs = 0.0;
  double tol = 0.0;
  double slack() const { return rhs - lhs; }
  bool ok() const { return lhs <= rhs + tol; }
};

struct CertificateReport {
  std::vector<CertificateEntry> entries;
  double max_violation = 0.0;  // max(0, lhs - rhs) over all entries
  int failures = 0;            // entries with lhs > rhs + tol
  int k = 0;
  int d_max = 1;
  double epsilon = 0.0;
  double total_cost = 0.0;
  double opt = 0.0;
  double optimal_service = 0.0;  // sum over growth steps of duration * y_leaf
  double p0 = 0.0;
  double p_final = 0.0;
  double fork_increment_sum = 0.0;
  double bound = 0.0;  // 16k(2 + k ln d_max)(OPT + eps) + P0 + sum of fork increments
  double min_sampled_lambda = 0.0;

  bool passed() const { return failures == 0; }
};

// Competitive factor 16k(2 + k ln d_max).
double GrowthFactor(int k, int d_max);

// Per-fork allowance eps 2^(2-j) (2k + 4k^2 ln d_max).
double ForkAllowance(int k, double epsilon, int step_number, int d_max);

// Checks every per-step inequality of the analysis against a trace.
// Growth steps are checked in integrated form with tolerance
// rel_tol * (1 + |rhs|) and at each sample; fork and merge steps with an
// absolute 1e-9; deadends with rel_tol.
CertificateReport BuildCertificateReport(const GameTrace& trace, const OptimalPlay& play, double rel_tol = 1e-6);

// Largest |central-difference dP/dt - analytic P'| / (1 + |P'|) over the
// sampled instants of all growth steps. The probe step is `probe` times the
// local time scale (the shortest time in which any coordinate or the growing
// weight changes by its own magnitude).
double FiniteDiffCheck(const GameTrace& trace, const OptimalPlay& play, double probe = 1e-4);

}  // namespace lgt
