#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lgt/dynamics.hpp"

namespace lgt {

struct LayerNode {
  int parent = -1;  // index into the previous layer; -1 only for the source
  int weight = 0;   // weight of the edge to the parent
};

struct NodeRef {
  int layer = 0;
  int index = 0;
  bool operator==(const NodeRef&) const = default;
};

// A rooted layered tree: layer 0 holds the source a, every other node has a
// single parent in the previous layer. Complete instances end in a single
// target node.
struct LayeredTree {
  std::vector<std::vector<LayerNode>> layers;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int width() const;
  bool complete() const { return !layers.empty() && layers.back().size() == 1; }
  const LayerNode& at(NodeRef r) const { return layers[r.layer][r.index]; }

  // Children of every node of `layer`, as indices into layer + 1, in order.
  std::vector<std::vector<int>> Children(int layer) const;
  // Position in a layer-major enumeration; used for tie-breaking.
  int GlobalId(NodeRef r) const;

  // Throws kInvalidInstance unless the structure is a rooted layered tree of
  // width <= k with nonnegative weights.
  void Validate(int k) const;
};

// Weighted distance from the source to every node, per layer.
std::vector<std::vector<double>> SourceDistances(const LayeredTree& g);

// Length of the unique tree path between two nodes.
double TreeDistance(const LayeredTree& g, const std::vector<std::vector<double>>& source_dist, NodeRef u, NodeRef v);

struct PathResult {
  double weight = 0.0;
  std::vector<int> path;  // node index per layer
};

// Lightest source-to-last-layer path by layer-by-layer dynamic programming;
// ties go to the smallest node id. Throws kInvalidInstance when the last layer
// is empty.
PathResult OptPath(const LayeredTree& g);

struct BinaryConversion {
  LayeredTree tree;
  std::vector<int> layer_map;             // original layer -> converted layer
  std::vector<std::vector<int>> node_map; // original (layer, index) -> index in converted layer
};

// Converts a width-<=k tree with {0,1} weights into a binary one with at most
// one unit edge between consecutive layers, preserving distances between all
// original nodes.
BinaryConversion BinaryConvert(const LayeredTree& g, int k);

// Checks the binary form: <= 2 children per node, width <= k, weights in
// {0,1}, and at most one unit edge per layer gap.
bool IsBinaryForm(const LayeredTree& g, int k);

using Matrix = std::vector<std::vector<double>>;

struct TransportPlan {
  Matrix coupling;  // rows: previous layer, columns: current layer
  double cost = 0.0;
};

// Minimum-cost coupling of two distributions under a nonnegative cost
// matrix, by successive shortest paths on the bipartite residual graph.
// Deterministic: Bellman-Ford relaxations run in index order and only strict
// improvements are taken. Throws kInputError for infeasible marginals.
TransportPlan SolveTransport(std::span<const double> prev, std::span<const double> cur, const Matrix& dist);

struct LayerTransition {
  std::vector<double> distribution;  // over the nodes of this layer
  Matrix dist;                       // previous layer x this layer tree distances
  TransportPlan plan;
};

struct TraversalResult {
  GameTrace game;
  // transitions[i] describes layer i; transitions[0] is the point mass at a
  // with an empty plan.
  std::vector<LayerTransition> transitions;
  double layered_cost = 0.0;  // sum of optimal transport costs between layers
  double tree_cost = 0.0;     // service + movement in the evolving tree game
  double opt = 0.0;
};

// Drives the evolving tree game along a binary-form instance, keeping the
// tree homeomorphic to the revealed subtree (r maps to a virtual parent of
// the source). Per layer: deletes, then forks, then relabels, then one unit
// growth step if the gap carries a unit edge.
TraversalResult Traverse(const LayeredTree& binary, int k, double epsilon, const IntegratorConfig& cfg);

struct Walk {
  std::vector<int> path;  // node index per layer
  double cost = 0.0;
};

// Draws one walk: from v_{i-1}, move to v with probability
// plan_i(v_{i-1}, v) / P_{i-1}(v_{i-1}).
Walk SampleWalk(const TraversalResult& tr, std::mt19937_64& rng);

struct WalkEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<std::vector<double>> marginals;  // empirical frequency per layer node
};

WalkEstimate EstimateWalks(const TraversalResult& tr, int samples, std::uint64_t seed);

}  // namespace lgt
