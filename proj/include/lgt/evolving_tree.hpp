#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace lgt {

// Stable node identifier. Ids are handed out in creation order and never
// reused, so id 0 is always the root r and id 1 is the initial root child.
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

// Dense per-node values indexed by NodeId. Slots of dead or not-yet-created
// nodes are ignored by every consumer.
using NodeValues = std::vector<double>;

struct MergeRecord {
  NodeId removed = kNoNode;   // the former parent, now gone
  NodeId survivor = kNoNode;  // its only remaining child, which absorbs the edge
};

struct DeleteOutcome {
  NodeId deleted_leaf = kNoNode;
  NodeId parent = kNoNode;
  std::optional<MergeRecord> merged;
};

// Rooted weighted tree of the evolving tree game.
//
// Invariants maintained by every public mutation:
//  * the root has exactly one child (the "root child" c_r) and no weight;
//  * no non-root internal node has exactly one child;
//  * every node's combinatorial depth is at most k;
//  * weights are nonnegative.
// RemoveLeaf() alone may leave a single-child node behind; callers are
// expected to follow it with SmoothAt(), which DeleteLeaf() does.
class EvolvingTree {
 public:
  struct Node {
    NodeId parent = kNoNode;
    std::vector<NodeId> children;
    double weight = 0.0;
    int creation_step = 0;
    int depth = 0;
    // Parent at creation time. Unlike `parent` this never changes, which is
    // what lineage replay needs.
    NodeId forked_from = kNoNode;
    bool alive = false;
  };

  // Fresh game: r connected to c_r by a zero-weight edge, current step 1.
  static EvolvingTree NewGame(int k, double epsilon);
  // Same as NewGame(2, 1.0).
  EvolvingTree();

  // Rebuilds a tree from raw node records (deserialization). Validates all
  // invariants unless `check_invariants` is false, which is only meant for the
  // transient post-removal snapshot of a delete step.
  static EvolvingTree FromNodes(int k, double epsilon, int current_step, int max_degree_seen,
                                std::vector<Node> nodes, bool check_invariants = true);

  int k() const { return k_; }
  double epsilon() const { return epsilon_; }
  int current_step() const { return current_step_; }
  int max_degree_seen() const { return max_degree_seen_; }

  NodeId root() const { return 0; }
  NodeId root_child() const { return nodes_[0].children.front(); }

  std::size_t id_capacity() const { return nodes_.size(); }
  bool contains(NodeId u) const { return u < nodes_.size() && nodes_[u].alive; }
  bool is_leaf(NodeId u) const { return contains(u) && u != root() && nodes_[u].children.empty(); }

  const Node& node(NodeId u) const;
  // Creation-time parent of any id ever handed out, dead or alive.
  NodeId forked_from(NodeId u) const;
  NodeId parent(NodeId u) const { return node(u).parent; }
  std::span<const NodeId> children(NodeId u) const { return node(u).children; }
  double weight(NodeId u) const { return node(u).weight; }
  int creation_step(NodeId u) const { return node(u).creation_step; }
  int depth(NodeId u) const { return node(u).depth; }
  // Graph degree: number of children plus one for the parent edge.
  int degree(NodeId u) const;

  // Alive non-root nodes in preorder (parents before children).
  std::vector<NodeId> Preorder() const;
  std::vector<NodeId> Leaves() const;
  std::size_t size() const;  // alive nodes including the root

  // Spawns q >= 2 zero-weight children under a leaf of depth < k. The new
  // nodes are stamped with the current step, then the step counter advances.
  std::vector<NodeId> Fork(NodeId leaf, int q);

  // Removes a leaf (never c_r) and then smooths its parent if it is left with
  // a single child. Advances the step counter.
  DeleteOutcome DeleteLeaf(NodeId leaf);

  // The two halves of DeleteLeaf, exposed so the game engine can observe the
  // tree between the deadend and merge phases. Neither advances the step.
  void RemoveLeaf(NodeId leaf);
  std::optional<MergeRecord> SmoothAt(NodeId v);

  // Adds to the weight of a leaf's edge (continuous growth).
  void Grow(NodeId leaf, double amount);
  void SetWeight(NodeId u, double weight);

  // Marks the end of an adversary step that is not a fork or delete.
  void AdvanceStep() { ++current_step_; }

  // Throws kInternal describing the first broken invariant.
  void CheckInvariants() const;

 private:
  EvolvingTree(int k, double epsilon) : k_(k), epsilon_(epsilon) {}
  void ValidateLeafTarget(NodeId leaf, const char* what) const;
  void UpdateDegreeSeen(NodeId u);

  int k_ = 2;
  double epsilon_ = 1.0;
  int current_step_ = 1;
  int max_degree_seen_ = 1;
  std::vector<Node> nodes_;
};

// (2k-1)/(2k-h_u) * (w_u + eps * 2^-j_u). Throws kInvalidNode for the root.
double RevisedWeight(const EvolvingTree& tree, NodeId u);

// Revised weights of all alive non-root nodes (root slot is 0).
NodeValues RevisedWeights(const EvolvingTree& tree);

// Shift parameters: 1 at c_r, and delta_p / (d_p - 1) below.
NodeValues ShiftVector(const EvolvingTree& tree);

// Weighted distance from the root to u.
double RootDistance(const EvolvingTree& tree, NodeId u);

// Lightest root-to-leaf distance; ties in the argmin go to the smallest id.
double OptDistance(const EvolvingTree& tree);
NodeId OptLeaf(const EvolvingTree& tree);

}  // namespace lgt
