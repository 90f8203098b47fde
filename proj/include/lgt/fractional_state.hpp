#pragma once

#include <span>
#include <string>
#include <vector>

#include "lgt/evolving_tree.hpp"

namespace lgt {

// A point of the polytope K(T): x_u is the probability mass of the subtree
// below u. The root's value is implicitly 1 and never stored.
struct FractionalState {
  NodeValues mass;

  double operator[](NodeId u) const { return u < mass.size() ? mass[u] : 0.0; }
  double& at(NodeId u) {
    if (u >= mass.size()) mass.resize(u + 1, 0.0);
    return mass[u];
  }
};

struct Violation {
  enum class Kind { kNegative, kConservation, kRootChild };
  Kind kind;
  NodeId node;
  double amount;  // signed defect
  std::string Describe() const;
};

// Masses below -kClampTolerance are errors; anything in between is rounding.
inline constexpr double kClampTolerance = 1e-12;

// Point mass at c_r. Only meaningful on a fresh tree.
FractionalState InitState(const EvolvingTree& tree);

std::vector<Violation> Validate(const EvolvingTree& tree, const FractionalState& x, double tol);

// Largest |sum of children - parent| over internal nodes, including the
// root constraint x_{c_r} = 1.
double ConservationResidual(const EvolvingTree& tree, const FractionalState& x);

// Each newborn child receives an equal share of the forked leaf's mass.
FractionalState ApplyFork(FractionalState x, NodeId leaf, std::span<const NodeId> children);

// Drops the deleted leaf's coordinate (and the merged node's, if any). The
// deleted leaf must already be drained to within `tol`.
FractionalState ProjectAfterDelete(FractionalState x, const DeleteOutcome& outcome, double tol = 1e-9);

// sum over non-root u of w_u |x_old_u - x_new_u|, using the tree's true weights.
double MovementCost(const EvolvingTree& tree, const FractionalState& x_old, const FractionalState& x_new);

// Clamps rounding-level negatives to zero and rescales each sibling group
// top-down so it sums exactly to its parent. Throws kIntegrationFailure on a
// genuinely negative coordinate.
void RepairConservation(const EvolvingTree& tree, FractionalState& x);

}  // namespace lgt
