#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgt/evolving_tree.hpp"

namespace lgt {

enum class StepKind { kGrow, kFork, kDelete };

const char* ToString(StepKind kind);
StepKind ParseStepKind(const std::string& name);

// One adversary move. Leaves are referenced by NodeId, which equals the
// node's creation-order index, so scripts replay as plain text.
struct ScriptStep {
  StepKind kind = StepKind::kGrow;
  NodeId leaf = kNoNode;
  double duration = 0.0;  // kGrow only
  int q = 0;              // kFork only

  static ScriptStep Grow(NodeId leaf, double duration) { return {StepKind::kGrow, leaf, duration, 0}; }
  static ScriptStep Fork(NodeId leaf, int q) { return {StepKind::kFork, leaf, 0.0, q}; }
  static ScriptStep Delete(NodeId leaf) { return {StepKind::kDelete, leaf, 0.0, 0}; }

  bool operator==(const ScriptStep&) const = default;
};

struct AdversaryScript {
  int k = 2;
  double epsilon = 1.0;
  std::vector<ScriptStep> steps;

  bool operator==(const AdversaryScript&) const = default;
};

// Replays the topology only (no dynamics) and throws kRejectedStep /
// kInvalidParameter at the first illegal step. Returns the final tree.
EvolvingTree ValidateScript(const AdversaryScript& script);

// Applies one step's topology change to a tree (grow adds `duration` to the
// weight). Returns the ids created by a fork, empty otherwise.
std::vector<NodeId> ApplyTopology(EvolvingTree& tree, const ScriptStep& step);

}  // namespace lgt
