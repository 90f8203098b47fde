#include "lgt/fractional_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lgt/error.hpp"

namespace lgt {

std::string Violation::Describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::kNegative: os << "negative mass"; break;
    case Kind::kConservation: os << "conservation defect"; break;
    case Kind::kRootChild: os << "root child mass != 1"; break;
  }
  os << " at node " << node << " (" << amount << ")";
  return os.str();
}

FractionalState InitState(const EvolvingTree& tree) {
  if (tree.size() != 2 || tree.current_step() != 1) {
    throw Error(ErrorKind::kProtocolViolation, "InitState needs a fresh tree");
  }
  FractionalState x;
  x.mass.assign(tree.id_capacity(), 0.0);
  x.mass[tree.root_child()] = 1.0;
  return x;
}

std::vector<Violation> Validate(const EvolvingTree& tree, const FractionalState& x, double tol) {
  std::vector<Violation> out;
  const NodeId cr = tree.root_child();
  if (std::abs(x[cr] - 1.0) > tol) out.push_back({Violation::Kind::kRootChild, cr, x[cr] - 1.0});
  for (NodeId u : tree.Preorder()) {
    if (x[u] < -tol) out.push_back({Violation::Kind::kNegative, u, x[u]});
    auto ch = tree.children(u);
    if (ch.empty()) continue;
    double sum = 0.0;
    for (NodeId v : ch) sum += x[v];
    if (std::abs(sum - x[u]) > tol) out.push_back({Violation::Kind::kConservation, u, sum - x[u]});
  }
  return out;
}

double ConservationResidual(const EvolvingTree& tree, const FractionalState& x) {
  double worst = std::abs(x[tree.root_child()] - 1.0);
  for (NodeId u : tree.Preorder()) {
    auto ch = tree.children(u);
    if (ch.empty()) continue;
    double sum = 0.0;
    for (NodeId v : ch) sum += x[v];
    worst = std::max(worst, std::abs(sum - x[u]));
  }
  return worst;
}

FractionalState ApplyFork(FractionalState x, NodeId leaf, std::span<const NodeId> children) {
  const double share = x[leaf] / static_cast<double>(children.size());
  for (NodeId c : children) x.at(c) = share;
  return x;
}

FractionalState ProjectAfterDelete(FractionalState x, const DeleteOutcome& outcome, double tol) {
  const double left = x[outcome.deleted_leaf];
  if (std::abs(left) > tol) {
    throw Error(ErrorKind::kProtocolViolation,
                "deleted leaf still carries mass " + std::to_string(left));
  }
  x.at(outcome.deleted_leaf) = 0.0;
  if (outcome.merged) x.at(outcome.merged->removed) = 0.0;
  return x;
}

double MovementCost(const EvolvingTree& tree, const FractionalState& x_old, const FractionalState& x_new) {
  // Mass on an id the tree does not hold means the states belong elsewhere.
  for (const FractionalState* x : {&x_old, &x_new}) {
    for (NodeId u = 1; u < x->mass.size(); ++u) {
      if (x->mass[u] != 0.0 && !tree.contains(u)) {
        throw Error(ErrorKind::kTopologyMismatch, "state has mass on node " + std::to_string(u) +
                                                      ", which is not in the tree");
      }
    }
  }
  double cost = 0.0;
  for (NodeId u : tree.Preorder()) cost += tree.weight(u) * std::abs(x_old[u] - x_new[u]);
  return cost;
}

void RepairConservation(const EvolvingTree& tree, FractionalState& x) {
  x.mass.resize(std::max(x.mass.size(), tree.id_capacity()), 0.0);
  for (NodeId u : tree.Preorder()) {
    double& v = x.mass[u];
    if (v < 0.0) {
      if (v < -kClampTolerance) {
        throw Error(ErrorKind::kIntegrationFailure,
                    "mass at node " + std::to_string(u) + " went negative: " + std::to_string(v));
      }
      v = 0.0;
    }
  }
  x.mass[tree.root_child()] = 1.0;
  for (NodeId u : tree.Preorder()) {
    auto ch = tree.children(u);
    if (ch.empty()) continue;
    double sum = 0.0;
    for (NodeId c : ch) sum += x.mass[c];
    const double target = x.mass[u];
    if (sum > 0.0) {
      const double scale = target / sum;
      for (NodeId c : ch) x.mass[c] *= scale;
    } else {
      for (NodeId c : ch) x.mass[c] = target / static_cast<double>(ch.size());
    }
  }
}

}  // namespace lgt
