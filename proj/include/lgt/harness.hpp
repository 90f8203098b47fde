#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgt/dynamics.hpp"
#include "lgt/layered.hpp"
#include "lgt/script.hpp"

namespace lgt {

// k disjoint unit-weight paths out of the source, zero-padded to a common
// length, with the target hung below the end of the shortest one (ties:
// smallest path index).
LayeredTree GenLostCow(int k, const std::vector<int>& lengths);

struct ScriptMix {
  double grow = 0.5;
  double fork = 0.25;
  double remove = 0.25;
  int max_leaves = 12;
};

// Random valid script. Forks use q in {2, 3}; growth durations are uniform in
// (0.1, 2]. Kinds that are impossible at the moment fall back to growth.
AdversaryScript GenRandomScript(int k, int n_steps, std::uint64_t seed, double epsilon = 1.0,
                                const ScriptMix& mix = {});

// Random complete instance with layers 0..n_layers (the last one is the
// target), width <= k and unit edges with probability unit_edge_prob.
LayeredTree GenRandomLayeredTree(int k, int n_layers, double unit_edge_prob, std::uint64_t seed);

struct GreedyResult {
  std::vector<int> path;
  double cost = 0.0;
};

// Moves, at every layer, to the endpoint of the currently shortest revealed
// source path (ties: smallest index) along the tree.
GreedyResult BaselineGreedy(const LayeredTree& g);

enum class Family { kLostCow, kRandomScript, kRandomLayered };

const char* ToString(Family f);
Family ParseFamily(const std::string& name);

struct ExperimentConfig {
  Family family = Family::kRandomScript;
  std::vector<int> ks = {2, 3, 4, 5};
  int instances_per_k = 1;
  int n_steps = 50;      // random scripts
  int n_layers = 10;     // random layered trees
  int max_length = 4;    // lost-cow path lengths are drawn from [1, max_length]
  double unit_edge_prob = 0.5;
  double epsilon = 1.0;
  std::uint64_t seed = 1;
  int samples = 0;       // walks per layered instance; 0 disables sampling
  double cert_tol = 1e-6;
  IntegratorConfig integrator;

  void Validate() const;
};

// One results row. Columns that do not apply are NaN.
struct ResultRow {
  std::string instance_id;
  int k = 0;
  int d_max = 1;
  double opt = 0.0;
  double frac_cost = 0.0;
  double bound = 0.0;  // 16k(2 + k ln d_max)(OPT + eps) + P0
  double max_cert_violation = 0.0;
  double greedy_cost = 0.0;
  double samples_mean = 0.0;
  double samples_stderr = 0.0;
};

std::vector<ResultRow> RunExperiment(const ExperimentConfig& cfg);

// Certificate pipeline for one layered instance: converts to binary form,
// traverses, and certifies the resulting game.
ResultRow EvaluateLayered(const std::string& id, const LayeredTree& g, int k, const ExperimentConfig& cfg,
                          std::uint64_t sample_seed);

ResultRow EvaluateScript(const std::string& id, const AdversaryScript& script, const ExperimentConfig& cfg);

}  // namespace lgt
