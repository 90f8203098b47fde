#include "lgt/script.hpp"

#include <cmath>

#include "lgt/error.hpp"

namespace lgt {

const char* ToString(StepKind kind) {
  switch (kind) {
    case StepKind::kGrow: return "grow";
    case StepKind::kFork: return "fork";
    case StepKind::kDelete: return "delete";
  }
  return "?";
}

StepKind ParseStepKind(const std::string& name) {
  if (name == "grow") return StepKind::kGrow;
  if (name == "fork") return StepKind::kFork;
  if (name == "delete") return StepKind::kDelete;
  throw Error(ErrorKind::kInputError, "unknown step kind '" + name + "'");
}

std::vector<NodeId> ApplyTopology(EvolvingTree& tree, const ScriptStep& step) {
  switch (step.kind) {
    case StepKind::kGrow:
      if (!(step.duration > 0.0) || !std::isfinite(step.duration)) {
        throw Error(ErrorKind::kRejectedStep, "grow duration must be positive");
      }
      tree.Grow(step.leaf, step.duration);
      tree.AdvanceStep();
      return {};
    case StepKind::kFork:
      return tree.Fork(step.leaf, step.q);
    case StepKind::kDelete:
      tree.DeleteLeaf(step.leaf);
      return {};
  }
  return {};
}

EvolvingTree ValidateScript(const AdversaryScript& script) {
  EvolvingTree tree = EvolvingTree::NewGame(script.k, script.epsilon);
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    try {
      ApplyTopology(tree, script.steps[i]);
    } catch (const Error& e) {
      throw Error(e.kind(), "step " + std::to_string(i) + ": " + e.what());
    }
  }
  return tree;
}

}  // namespace lgt
