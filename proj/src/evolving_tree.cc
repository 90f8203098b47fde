#include "lgt/evolving_tree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "lgt/error.hpp"

namespace lgt {

const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidParameter: return "invalid-parameter";
    case ErrorKind::kRejectedStep: return "rejected-step";
    case ErrorKind::kInvalidNode: return "invalid-node";
    case ErrorKind::kProtocolViolation: return "protocol-violation";
    case ErrorKind::kTopologyMismatch: return "topology-mismatch";
    case ErrorKind::kIntegrationFailure: return "integration-failure";
    case ErrorKind::kDrainFailure: return "drain-failure";
    case ErrorKind::kInvalidInstance: return "invalid-instance";
    case ErrorKind::kInputError: return "input-error";
    case ErrorKind::kInternal: return "internal-error";
  }
  return "unknown-error";
}

namespace {

// Newborn revised weights are eps * 2^-j; below this they would underflow
// into denormals and the dynamics would divide by (almost) zero.
constexpr double kSmallestBirthSlack = 1e-280;

std::string NodeName(NodeId u) { return "node " + std::to_string(u); }

}  // namespace

EvolvingTree EvolvingTree::NewGame(int k, double epsilon) {
  if (k < 2) throw Error(ErrorKind::kInvalidParameter, "k must be at least 2");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::kInvalidParameter, "epsilon must be positive");
  }
  EvolvingTree tree(k, epsilon);
  tree.nodes_.resize(2);
  Node& r = tree.nodes_[0];
  r.alive = true;
  r.children = {1};
  Node& c = tree.nodes_[1];
  c.alive = true;
  c.parent = 0;
  c.forked_from = 0;
  c.depth = 1;
  return tree;
}

EvolvingTree::EvolvingTree() : EvolvingTree(NewGame(2, 1.0)) {}

NodeId EvolvingTree::forked_from(NodeId u) const {
  if (u >= nodes_.size()) throw Error(ErrorKind::kInvalidNode, NodeName(u) + " was never created");
  return nodes_[u].forked_from;
}

EvolvingTree EvolvingTree::FromNodes(int k, double epsilon, int current_step,
                                     int max_degree_seen, std::vector<Node> nodes, bool check_invariants) {
  EvolvingTree tree = NewGame(k, epsilon);
  tree.current_step_ = current_step;
  tree.max_degree_seen_ = max_degree_seen;
  tree.nodes_ = std::move(nodes);
  if (tree.nodes_.size() < 2 || !tree.nodes_[0].alive) {
    throw Error(ErrorKind::kInputError, "tree has no root");
  }
  // Recompute depths top-down so stored values cannot disagree with topology.
  std::vector<NodeId> stack = {0};
  tree.nodes_[0].depth = 0;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId c : tree.nodes_[u].children) {
      if (c >= tree.nodes_.size() || !tree.nodes_[c].alive || tree.nodes_[c].parent != u) {
        throw Error(ErrorKind::kInputError, "inconsistent parent/child link at " + NodeName(c));
      }
      tree.nodes_[c].depth = tree.nodes_[u].depth + 1;
      stack.push_back(c);
    }
  }
  if (!check_invariants) return tree;
  try {
    tree.CheckInvariants();
  } catch (const Error& e) {
    throw Error(ErrorKind::kInputError, e.what());
  }
  return tree;
}

const EvolvingTree::Node& EvolvingTree::node(NodeId u) const {
  if (!contains(u)) throw Error(ErrorKind::kInvalidNode, NodeName(u) + " does not exist");
  return nodes_[u];
}

int EvolvingTree::degree(NodeId u) const {
  const Node& n = node(u);
  return static_cast<int>(n.children.size()) + (u == root() ? 0 : 1);
}

std::vector<NodeId> EvolvingTree::Preorder() const {
  std::vector<NodeId> order;
  order.reserve(nodes_.size());
  std::vector<NodeId> stack = {root_child()};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    order.push_back(u);
    const auto& ch = nodes_[u].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return order;
}

std::vector<NodeId> EvolvingTree::Leaves() const {
  std::vector<NodeId> leaves;
  for (NodeId u : Preorder()) {
    if (nodes_[u].children.empty()) leaves.push_back(u);
  }
  return leaves;
}

std::size_t EvolvingTree::size() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.alive; }));
}

void EvolvingTree::ValidateLeafTarget(NodeId leaf, const char* what) const {
  if (!contains(leaf) || leaf == root()) {
    throw Error(ErrorKind::kRejectedStep, std::string(what) + ": " + NodeName(leaf) + " does not exist");
  }
  if (!nodes_[leaf].children.empty()) {
    throw Error(ErrorKind::kRejectedStep, std::string(what) + ": " + NodeName(leaf) + " is not a leaf");
  }
}

void EvolvingTree::UpdateDegreeSeen(NodeId u) { max_degree_seen_ = std::max(max_degree_seen_, degree(u)); }

std::vector<NodeId> EvolvingTree::Fork(NodeId leaf, int q) {
  ValidateLeafTarget(leaf, "fork");
  if (q < 2) throw Error(ErrorKind::kRejectedStep, "fork needs at least two children");
  if (nodes_[leaf].depth >= k_) {
    throw Error(ErrorKind::kRejectedStep, "fork at " + NodeName(leaf) + " would exceed depth k");
  }
  if (std::ldexp(epsilon_, -current_step_) < kSmallestBirthSlack) {
    throw Error(ErrorKind::kInvalidParameter, "step counter too large for positive revised weights");
  }
  std::vector<NodeId> created;
  created.reserve(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    auto id = static_cast<NodeId>(nodes_.size());
    Node n;
    n.alive = true;
    n.parent = leaf;
    n.forked_from = leaf;
    n.creation_step = current_step_;
    n.depth = nodes_[leaf].depth + 1;
    nodes_.push_back(std::move(n));
    created.push_back(id);
  }
  nodes_[leaf].children = created;
  UpdateDegreeSeen(leaf);
  ++current_step_;
  return created;
}

void EvolvingTree::RemoveLeaf(NodeId leaf) {
  ValidateLeafTarget(leaf, "delete");
  if (leaf == root_child()) throw Error(ErrorKind::kRejectedStep, "cannot delete the root child");
  NodeId p = nodes_[leaf].parent;
  auto& siblings = nodes_[p].children;
  siblings.erase(std::find(siblings.begin(), siblings.end(), leaf));
  nodes_[leaf].alive = false;
  nodes_[leaf].parent = kNoNode;
}

std::optional<MergeRecord> EvolvingTree::SmoothAt(NodeId v) {
  if (!contains(v) || v == root() || nodes_[v].children.size() != 1) return std::nullopt;
  NodeId c = nodes_[v].children.front();
  NodeId pv = nodes_[v].parent;
  nodes_[c].weight += nodes_[v].weight;
  nodes_[c].parent = pv;
  auto& pch = nodes_[pv].children;
  *std::find(pch.begin(), pch.end(), v) = c;
  nodes_[v].alive = false;
  nodes_[v].children.clear();
  nodes_[v].parent = kNoNode;
  std::vector<NodeId> stack = {c};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    --nodes_[u].depth;
    for (NodeId w : nodes_[u].children) stack.push_back(w);
  }
  return MergeRecord{v, c};
}

DeleteOutcome EvolvingTree::DeleteLeaf(NodeId leaf) {
  ValidateLeafTarget(leaf, "delete");
  DeleteOutcome out;
  out.deleted_leaf = leaf;
  out.parent = nodes_[leaf].parent;
  RemoveLeaf(leaf);
  out.merged = SmoothAt(out.parent);
  ++current_step_;
  return out;
}

void EvolvingTree::Grow(NodeId leaf, double amount) {
  if (!is_leaf(leaf)) throw Error(ErrorKind::kRejectedStep, "grow: " + NodeName(leaf) + " is not a leaf");
  if (!(amount >= 0.0)) throw Error(ErrorKind::kRejectedStep, "grow amount must be nonnegative");
  nodes_[leaf].weight += amount;
}

void EvolvingTree::SetWeight(NodeId u, double weight) {
  if (!contains(u) || u == root()) throw Error(ErrorKind::kInvalidNode, NodeName(u) + " has no edge");
  if (!(weight >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "weights must be nonnegative");
  nodes_[u].weight = weight;
}

void EvolvingTree::CheckInvariants() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInternal, msg); };
  if (nodes_[0].children.size() != 1) fail("root must have exactly one child");
  for (NodeId u : Preorder()) {
    const Node& n = nodes_[u];
    if (n.depth > k_) fail(NodeName(u) + " is deeper than k");
    if (!(n.weight >= 0.0)) fail(NodeName(u) + " has a negative weight");
    if (n.children.size() == 1) fail(NodeName(u) + " has exactly one child");
    if (n.depth != nodes_[n.parent].depth + 1) fail(NodeName(u) + " has a stale depth");
  }
}

double RevisedWeight(const EvolvingTree& tree, NodeId u) {
  if (u == tree.root()) throw Error(ErrorKind::kInvalidNode, "the root has no edge");
  const int k = tree.k();
  const int h = tree.depth(u);
  const double scale = static_cast<double>(2 * k - 1) / static_cast<double>(2 * k - h);
  return scale * (tree.weight(u) + std::ldexp(tree.epsilon(), -tree.creation_step(u)));
}

NodeValues RevisedWeights(const EvolvingTree& tree) {
  NodeValues w(tree.id_capacity(), 0.0);
  for (NodeId u : tree.Preorder()) w[u] = RevisedWeight(tree, u);
  return w;
}

NodeValues ShiftVector(const EvolvingTree& tree) {
  NodeValues delta(tree.id_capacity(), 0.0);
  for (NodeId u : tree.Preorder()) {
    if (u == tree.root_child()) {
      delta[u] = 1.0;
    } else {
      NodeId p = tree.parent(u);
      delta[u] = delta[p] / static_cast<double>(tree.children(p).size());
    }
  }
  return delta;
}

double RootDistance(const EvolvingTree& tree, NodeId u) {
  double d = 0.0;
  for (NodeId v = u; v != tree.root(); v = tree.parent(v)) d += tree.weight(v);
  return d;
}

NodeId OptLeaf(const EvolvingTree& tree) {
  NodeValues dist(tree.id_capacity(), 0.0);
  NodeId best = kNoNode;
  for (NodeId u : tree.Preorder()) {
    NodeId p = tree.parent(u);
    dist[u] = (p == tree.root() ? 0.0 : dist[p]) + tree.weight(u);
    if (tree.children(u).empty() && (best == kNoNode || dist[u] < dist[best] ||
                                     (dist[u] == dist[best] && u < best))) {
      best = u;
    }
  }
  return best;
}

double OptDistance(const EvolvingTree& tree) { return RootDistance(tree, OptLeaf(tree)); }

}  // namespace lgt
