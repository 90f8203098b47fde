#include "lgt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "lgt/error.hpp"
#include "lgt/potential.hpp"

namespace lgt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-instance seeds derived from the experiment seed; stable across runs.
std::uint64_t SubSeed(std::uint64_t seed, int k, int i, int salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(salt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

LayeredTree GenLostCow(int k, const std::vector<int>& lengths) {
  if (k < 1 || static_cast<int>(lengths.size()) != k) {
    throw Error(ErrorKind::kInvalidParameter, "lost cow needs exactly k path lengths");
  }
  for (int len : lengths) {
    if (len < 1) throw Error(ErrorKind::kInvalidParameter, "path lengths must be positive");
  }
  const int longest = *std::max_element(lengths.begin(), lengths.end());
  const int shortest = static_cast<int>(std::min_element(lengths.begin(), lengths.end()) - lengths.begin());
  LayeredTree g;
  g.layers.push_back({LayerNode{}});
  for (int s = 1; s <= longest; ++s) {
    std::vector<LayerNode> layer(k);
    for (int p = 0; p < k; ++p) layer[p] = {s == 1 ? 0 : p, s <= lengths[p] ? 1 : 0};
    g.layers.push_back(std::move(layer));
  }
  g.layers.push_back({LayerNode{shortest, 0}});
  return g;
}

AdversaryScript GenRandomScript(int k, int n_steps, std::uint64_t seed, double epsilon, const ScriptMix& mix) {
  if (n_steps < 0) throw Error(ErrorKind::kInvalidParameter, "n_steps must be nonnegative");
  AdversaryScript script{k, epsilon, {}};
  EvolvingTree tree = EvolvingTree::NewGame(k, epsilon);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> kind({mix.grow, mix.fork, mix.remove});
  std::uniform_real_distribution<double> duration(0.1, 2.0);
  auto pick = [&rng](const std::vector<NodeId>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  for (int s = 0; s < n_steps; ++s) {
    const std::vector<NodeId> leaves = tree.Leaves();
    std::vector<NodeId> forkable, deletable;
    for (NodeId u : leaves) {
      if (tree.depth(u) < k) forkable.push_back(u);
      if (u != tree.root_child()) deletable.push_back(u);
    }
    const int choice = kind(rng);
    ScriptStep step;
    if (choice == 1 && !forkable.empty() && static_cast<int>(leaves.size()) + 1 <= mix.max_leaves) {
      const int q = (static_cast<int>(leaves.size()) + 2 <= mix.max_leaves)
                        ? std::uniform_int_distribution<int>(2, 3)(rng)
                        : 2;
      step = ScriptStep::Fork(pick(forkable), q);
    } else if (choice == 2 && !deletable.empty()) {
      step = ScriptStep::Delete(pick(deletable));
    } else {
      // (0.1, 2]: flip the half-open interval of the library distribution.
      step = ScriptStep::Grow(pick(leaves), 2.1 - duration(rng));
    }
    ApplyTopology(tree, step);
    script.steps.push_back(step);
  }
  return script;
}

LayeredTree GenRandomLayeredTree(int k, int n_layers, double unit_edge_prob, std::uint64_t seed) {
  if (k < 1 || n_layers < 1) throw Error(ErrorKind::kInvalidParameter, "need k >= 1 and at least one layer");
  if (!(unit_edge_prob >= 0.0 && unit_edge_prob <= 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "unit edge probability must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution unit(unit_edge_prob);
  LayeredTree g;
  g.layers.push_back({LayerNode{}});
  for (int i = 1; i <= n_layers; ++i) {
    const int prev = static_cast<int>(g.layers.back().size());
    const int size = (i == n_layers) ? 1 : std::uniform_int_distribution<int>(1, k)(rng);
    std::vector<int> parents(size);
    for (int& p : parents) p = std::uniform_int_distribution<int>(0, prev - 1)(rng);
    // Keep children grouped by parent, as a drawn tree would list them.
    std::sort(parents.begin(), parents.end());
    std::vector<LayerNode> layer;
    for (int p : parents) layer.push_back({p, unit(rng) ? 1 : 0});
    g.layers.push_back(std::move(layer));
  }
  return g;
}

GreedyResult BaselineGreedy(const LayeredTree& g) {
  g.Validate(std::numeric_limits<int>::max());
  const auto dist = SourceDistances(g);
  GreedyResult out;
  NodeRef at{0, 0};
  out.path.push_back(0);
  for (int i = 1; i < g.num_layers(); ++i) {
    const auto& d = dist[i];
    const int best = static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
    const NodeRef next{i, best};
    out.cost += TreeDistance(g, dist, at, next);
    at = next;
    out.path.push_back(best);
  }
  return out;
}

const char* ToString(Family f) {
  switch (f) {
    case Family::kLostCow: return "lost-cow";
    case Family::kRandomScript: return "random-script";
    case Family::kRandomLayered: return "random-layered";
  }
  return "unknown";
}

Family ParseFamily(const std::string& name) {
  for (Family f : {Family::kLostCow, Family::kRandomScript, Family::kRandomLayered}) {
    if (name == ToString(f)) return f;
  }
  throw Error(ErrorKind::kInputError, "unknown instance family '" + name + "'");
}

void ExperimentConfig::Validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::kInvalidParameter, msg); };
  for (int k : ks) {
    if (k < 2) bad("every k must be at least 2");
  }
  if (instances_per_k < 0) bad("instances_per_k must be nonnegative");
  if (n_steps < 0 || n_layers < 1 || max_length < 1) bad("instance sizes must be positive");
  if (!(epsilon > 0.0)) bad("epsilon must be positive");
  if (samples < 0) bad("samples must be nonnegative");
  if (!(cert_tol > 0.0)) bad("certificate tolerance must be positive");
  integrator.Validate();
}

ResultRow EvaluateScript(const std::string& id, const AdversaryScript& script, const ExperimentConfig& cfg) {
  const GameTrace trace = RunScript(script, cfg.integrator);
  const CertificateReport rep = BuildCertificateReport(trace, LineageY(trace.script), cfg.cert_tol);
  ResultRow row;
  row.instance_id = id;
  row.k = script.k;
  row.d_max = rep.d_max;
  row.opt = rep.opt;
  row.frac_cost = rep.total_cost;
  row.bound = GrowthFactor(rep.k, rep.d_max) * (rep.opt + rep.epsilon) + rep.p0;
  row.max_cert_violation = rep.max_violation;
  row.greedy_cost = kNaN;
  row.samples_mean = kNaN;
  row.samples_stderr = kNaN;
  return row;
}

ResultRow EvaluateLayered(const std::string& id, const LayeredTree& g, int k, const ExperimentConfig& cfg,
                          std::uint64_t sample_seed) {
  const BinaryConversion bin = BinaryConvert(g, k);
  const TraversalResult tr = Traverse(bin.tree, k, cfg.epsilon, cfg.integrator);
  const CertificateReport rep = BuildCertificateReport(tr.game, LineageY(tr.game.script), cfg.cert_tol);
  ResultRow row;
  row.instance_id = id;
  row.k = k;
  row.d_max = rep.d_max;
  row.opt = OptPath(g).weight;
  row.frac_cost = rep.total_cost;
  row.bound = GrowthFactor(k, rep.d_max) * (row.opt + cfg.epsilon) + rep.p0;
  row.max_cert_violation = rep.max_violation;
  row.greedy_cost = BaselineGreedy(g).cost;
  if (cfg.samples > 0) {
    const WalkEstimate est = EstimateWalks(tr, cfg.samples, sample_seed);
    row.samples_mean = est.mean;
    row.samples_stderr = est.std_error;
  } else {
    row.samples_mean = kNaN;
    row.samples_stderr = kNaN;
  }
  return row;
}

std::vector<ResultRow> RunExperiment(const ExperimentConfig& cfg) {
  cfg.Validate();
  std::vector<ResultRow> rows;
  for (int k : cfg.ks) {
    for (int i = 0; i < cfg.instances_per_k; ++i) {
      const std::string id = std::string(ToString(cfg.family)) + "-k" + std::to_string(k) + "-" + std::to_string(i);
      const std::uint64_t seed = SubSeed(cfg.seed, k, i, 0);
      switch (cfg.family) {
        case Family::kRandomScript:
          rows.push_back(EvaluateScript(id, GenRandomScript(k, cfg.n_steps, seed, cfg.epsilon), cfg));
          break;
        case Family::kLostCow: {
          std::mt19937_64 rng(seed);
          std::vector<int> lengths(k);
          for (int& len : lengths) len = std::uniform_int_distribution<int>(1, cfg.max_length)(rng);
          rows.push_back(EvaluateLayered(id, GenLostCow(k, lengths), k, cfg, SubSeed(cfg.seed, k, i, 1)));
          break;
        }
        case Family::kRandomLayered:
          rows.push_back(EvaluateLayered(id, GenRandomLayeredTree(k, cfg.n_layers, cfg.unit_edge_prob, seed), k, cfg,
                                         SubSeed(cfg.seed, k, i, 1)));
          break;
      }
    }
  }
  return rows;
}

}  // namespace lgt
