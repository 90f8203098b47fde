#include "lgt/layered.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lgt/error.hpp"

namespace lgt {

namespace {

std::string Where(int layer, int index) {
  return "layer " + std::to_string(layer) + " node " + std::to_string(index);
}

void Breach(const std::string& msg) { throw Error(ErrorKind::kInternal, "homeomorphism breach: " + msg); }

}  // namespace

int LayeredTree::width() const {
  std::size_t w = 0;
  for (const auto& layer : layers) w = std::max(w, layer.size());
  return static_cast<int>(w);
}

std::vector<std::vector<int>> LayeredTree::Children(int layer) const {
  std::vector<std::vector<int>> ch(layers.at(layer).size());
  if (layer + 1 < num_layers()) {
    const auto& next = layers[layer + 1];
    for (int j = 0; j < static_cast<int>(next.size()); ++j) ch.at(next[j].parent).push_back(j);
  }
  return ch;
}

int LayeredTree::GlobalId(NodeRef r) const {
  int id = 0;
  for (int i = 0; i < r.layer; ++i) id += static_cast<int>(layers[i].size());
  return id + r.index;
}

void LayeredTree::Validate(int k) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kInvalidInstance, msg); };
  if (layers.empty() || layers[0].size() != 1) fail("layer 0 must contain exactly the source");
  if (layers[0][0].parent != -1) fail("the source has no parent");
  if (width() > k) fail("width " + std::to_string(width()) + " exceeds k = " + std::to_string(k));
  for (int i = 1; i < num_layers(); ++i) {
    if (layers[i].empty()) fail("layer " + std::to_string(i) + " is empty; the target is unreachable");
    const int prev = static_cast<int>(layers[i - 1].size());
    for (int j = 0; j < static_cast<int>(layers[i].size()); ++j) {
      const LayerNode& n = layers[i][j];
      if (n.parent < 0 || n.parent >= prev) fail(Where(i, j) + " has no parent in the previous layer");
      if (n.weight < 0) fail(Where(i, j) + " has a negative weight");
    }
  }
}

std::vector<std::vector<double>> SourceDistances(const LayeredTree& g) {
  std::vector<std::vector<double>> d(g.layers.size());
  for (int i = 0; i < g.num_layers(); ++i) {
    d[i].resize(g.layers[i].size(), 0.0);
    if (i == 0) continue;
    for (std::size_t j = 0; j < g.layers[i].size(); ++j) {
      const LayerNode& n = g.layers[i][j];
      d[i][j] = d[i - 1][n.parent] + n.weight;
    }
  }
  return d;
}

double TreeDistance(const LayeredTree& g, const std::vector<std::vector<double>>& source_dist, NodeRef u,
                    NodeRef v) {
  NodeRef a = u, b = v;
  while (a.layer > b.layer) a = {a.layer - 1, g.at(a).parent};
  while (b.layer > a.layer) b = {b.layer - 1, g.at(b).parent};
  while (a.index != b.index) {
    a = {a.layer - 1, g.at(a).parent};
    b = {b.layer - 1, g.at(b).parent};
  }
  return source_dist[u.layer][u.index] + source_dist[v.layer][v.index] - 2.0 * source_dist[a.layer][a.index];
}

PathResult OptPath(const LayeredTree& g) {
  if (g.layers.empty() || g.layers.back().empty()) throw Error(ErrorKind::kInvalidInstance, "no target layer");
  g.Validate(std::numeric_limits<int>::max());
  const auto dist = SourceDistances(g);
  const auto& last = dist.back();
  // First index of the minimum: smallest id wins ties.
  const int best = static_cast<int>(std::min_element(last.begin(), last.end()) - last.begin());
  PathResult out;
  out.weight = last[best];
  out.path.assign(g.layers.size(), 0);
  int idx = best;
  for (int i = g.num_layers() - 1; i >= 0; --i) {
    out.path[i] = idx;
    idx = g.layers[i][idx].parent;
  }
  return out;
}

BinaryConversion BinaryConvert(const LayeredTree& g, int k) {
  g.Validate(k);
  for (int i = 1; i < g.num_layers(); ++i) {
    for (std::size_t j = 0; j < g.layers[i].size(); ++j) {
      const int w = g.layers[i][j].weight;
      if (w != 0 && w != 1) throw Error(ErrorKind::kInvalidInstance, Where(i, static_cast<int>(j)) + " weight not in {0,1}");
    }
  }
  int levels = 1;  // ceil(log2 k), at least one layer per gap
  while ((1 << levels) < k) ++levels;

  // Stage 1: replace each node's children by a zero-weight binary gadget of
  // `levels` layers whose leaves are the original children.
  LayeredTree bin;
  bin.layers.push_back({LayerNode{}});
  std::vector<std::vector<int>> stage1_map(g.layers.size());
  stage1_map[0] = {0};
  for (int i = 1; i < g.num_layers(); ++i) {
    const auto children = g.Children(i - 1);
    struct Block {
      int node;  // index in the latest gadget layer
      std::vector<int> members;
    };
    std::vector<Block> blocks;
    for (std::size_t u = 0; u < children.size(); ++u) {
      if (!children[u].empty()) blocks.push_back({stage1_map[i - 1][u], children[u]});
    }
    stage1_map[i].assign(g.layers[i].size(), -1);
    for (int s = 1; s <= levels; ++s) {
      std::vector<LayerNode> layer;
      std::vector<Block> next;
      for (const Block& b : blocks) {
        if (s == levels) {
          for (int c : b.members) {
            stage1_map[i][c] = static_cast<int>(layer.size());
            layer.push_back({b.node, g.layers[i][c].weight});
          }
        } else if (b.members.size() >= 2) {
          const auto half = static_cast<std::ptrdiff_t>((b.members.size() + 1) / 2);
          next.push_back({static_cast<int>(layer.size()), {b.members.begin(), b.members.begin() + half}});
          layer.push_back({b.node, 0});
          next.push_back({static_cast<int>(layer.size()), {b.members.begin() + half, b.members.end()}});
          layer.push_back({b.node, 0});
        } else {
          next.push_back({static_cast<int>(layer.size()), b.members});
          layer.push_back({b.node, 0});
        }
      }
      bin.layers.push_back(std::move(layer));
      blocks = std::move(next);
    }
  }

  // Stage 2: subdivide every gap into k layers; the edge with index j in its
  // layer carries its unit (if any) on sub-layer j, so no two unit edges share
  // a gap.
  BinaryConversion out;
  out.tree.layers.push_back({LayerNode{}});
  for (int t = 1; t < bin.num_layers(); ++t) {
    const auto& edges = bin.layers[t];
    for (int s = 0; s < k; ++s) {
      std::vector<LayerNode> layer(edges.size());
      for (int j = 0; j < static_cast<int>(edges.size()); ++j) {
        layer[j].parent = s == 0 ? edges[j].parent : j;
        layer[j].weight = (edges[j].weight == 1 && s == j) ? 1 : 0;
      }
      out.tree.layers.push_back(std::move(layer));
    }
  }
  for (int i = 0; i < g.num_layers(); ++i) out.layer_map.push_back(i * levels * k);
  out.node_map = std::move(stage1_map);
  return out;
}

bool IsBinaryForm(const LayeredTree& g, int k) {
  try {
    g.Validate(k);
  } catch (const Error&) {
    return false;
  }
  for (int i = 0; i < g.num_layers(); ++i) {
    for (const auto& ch : g.Children(i)) {
      if (ch.size() > 2) return false;
    }
    if (i == 0) continue;
    int units = 0;
    for (const LayerNode& n : g.layers[i]) {
      if (n.weight != 0 && n.weight != 1) return false;
      units += n.weight;
    }
    if (units > 1) return false;
  }
  return true;
}

TransportPlan SolveTransport(std::span<const double> prev, std::span<const double> cur, const Matrix& dist) {
  const int m = static_cast<int>(prev.size());
  const int n = static_cast<int>(cur.size());
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::kInputError, "transport: " + msg); };
  if (m == 0 || n == 0) bad("empty marginal");
  if (static_cast<int>(dist.size()) != m) bad("cost matrix has the wrong number of rows");
  for (const auto& row : dist) {
    if (static_cast<int>(row.size()) != n) bad("cost matrix has the wrong number of columns");
    for (double c : row) {
      if (!(c >= 0.0) || !std::isfinite(c)) bad("costs must be finite and nonnegative");
    }
  }
  for (double p : prev) if (!(p >= -1e-12)) bad("negative mass in the source marginal");
  for (double p : cur) if (!(p >= -1e-12)) bad("negative mass in the target marginal");
  const double sp = std::accumulate(prev.begin(), prev.end(), 0.0);
  const double sc = std::accumulate(cur.begin(), cur.end(), 0.0);
  if (std::abs(sp - sc) > 1e-9) bad("marginals have different total mass");

  constexpr double kTiny = 1e-15;
  std::vector<double> supply(prev.begin(), prev.end()), demand(cur.begin(), cur.end());
  TransportPlan plan;
  plan.coupling.assign(m, std::vector<double>(n, 0.0));
  auto& flow = plan.coupling;

  // Nodes 0..m-1 are sources, m..m+n-1 sinks. Forward arcs i->j cost d_ij and
  // have unbounded capacity; backward arcs j->i cost -d_ij while flow_ij > 0.
  const int nodes = m + n;
  const double inf = std::numeric_limits<double>::infinity();
  const int max_rounds = 4 * nodes * nodes + 16;
  for (int round = 0;; ++round) {
    if (round > max_rounds) throw Error(ErrorKind::kInternal, "transport: augmentation did not terminate");
    std::vector<double> d(nodes, inf);
    std::vector<int> pred(nodes, -1), origin(nodes, -1);
    bool any_supply = false;
    for (int i = 0; i < m; ++i) {
      if (supply[i] > kTiny) {
        d[i] = 0.0;
        origin[i] = i;
        any_supply = true;
      }
    }
    if (!any_supply) break;
    for (int it = 0; it < nodes; ++it) {
      bool changed = false;
      for (int i = 0; i < m; ++i) {
        if (d[i] == inf) continue;
        for (int j = 0; j < n; ++j) {
          const double cand = d[i] + dist[i][j];
          if (cand < d[m + j] - 1e-14) {
            d[m + j] = cand;
            pred[m + j] = i;
            origin[m + j] = origin[i];
            changed = true;
          }
        }
      }
      for (int j = 0; j < n; ++j) {
        if (d[m + j] == inf) continue;
        for (int i = 0; i < m; ++i) {
          if (flow[i][j] <= kTiny) continue;
          const double cand = d[m + j] - dist[i][j];
          if (cand < d[i] - 1e-14) {
            d[i] = cand;
            pred[i] = m + j;
            origin[i] = origin[m + j];
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    int sink = -1;
    for (int j = 0; j < n; ++j) {
      if (demand[j] > kTiny && d[m + j] < inf && (sink < 0 || d[m + j] < d[m + sink])) sink = j;
    }
    if (sink < 0) break;
    // Bottleneck along the path back to its source.
    double amount = demand[sink];
    int v = m + sink;
    while (pred[v] >= 0) {
      const int u = pred[v];
      if (u >= m) amount = std::min(amount, flow[v][u - m]);  // backward arc sink u -> source v
      v = u;
    }
    amount = std::min(amount, supply[v]);
    if (amount <= kTiny) {
      // A degenerate path; retire the smaller residual so the loop progresses.
      if (supply[v] <= demand[sink]) supply[v] = 0.0; else demand[sink] = 0.0;
      continue;
    }
    supply[v] -= amount;
    demand[sink] -= amount;
    v = m + sink;
    while (pred[v] >= 0) {
      const int u = pred[v];
      if (u < m) flow[u][v - m] += amount; else flow[v][u - m] -= amount;
      v = u;
    }
  }
  const double left = std::accumulate(supply.begin(), supply.end(), 0.0);
  if (left > 1e-9) bad("marginals cannot be coupled");
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      if (flow[i][j] < 0.0) flow[i][j] = 0.0;
      plan.cost += flow[i][j] * dist[i][j];
    }
  }
  return plan;
}

TraversalResult Traverse(const LayeredTree& binary, int k, double epsilon, const IntegratorConfig& cfg) {
  if (!IsBinaryForm(binary, k)) {
    throw Error(ErrorKind::kInvalidInstance, "traverse needs a binary instance with at most one unit edge per gap");
  }
  if (!binary.complete()) throw Error(ErrorKind::kInvalidInstance, "instance has no single target layer");

  const auto source_dist = SourceDistances(binary);
  Game game(k, epsilon, cfg);
  // Image of every evolving-tree node in the layered tree. The root maps to the
  // virtual parent p(a), written as layer -1 with source distance 0.
  constexpr NodeRef kVirtualParent{-1, 0};
  std::vector<NodeRef> image = {kVirtualParent, NodeRef{0, 0}};
  std::vector<NodeId> leaf_of = {game.tree().root_child()};  // current layer index -> leaf

  auto image_dist = [&](NodeRef r) { return r.layer < 0 ? 0.0 : source_dist[r.layer][r.index]; };
  auto check = [&](int layer) {
    const EvolvingTree& t = game.tree();
    std::vector<int> hit(binary.layers[layer].size(), 0);
    for (NodeId u : t.Preorder()) {
      const NodeRef iu = image[u];
      const NodeRef ip = image[t.parent(u)];
      // The parent's image must be an ancestor of the child's image.
      NodeRef walk = iu;
      while (walk.layer > ip.layer && walk.layer > 0) walk = {walk.layer - 1, binary.at(walk).parent};
      if (ip.layer >= 0 && !(walk == ip)) Breach("node " + std::to_string(u) + " is not below its parent's image");
      if (std::abs((image_dist(iu) - image_dist(ip)) - t.weight(u)) > 1e-9) {
        Breach("edge above node " + std::to_string(u) + " does not match its path weight");
      }
      if (t.is_leaf(u)) {
        if (iu.layer != layer) Breach("leaf " + std::to_string(u) + " is not in the current layer");
        ++hit[iu.index];
      }
    }
    for (std::size_t j = 0; j < hit.size(); ++j) {
      if (hit[j] != 1 || leaf_of[j] >= image.size() || !(image[leaf_of[j]] == NodeRef{layer, static_cast<int>(j)})) {
        Breach("layer node " + std::to_string(j) + " has no unique leaf");
      }
    }
  };

  TraversalResult out;
  out.transitions.push_back({{1.0}, {}, {}});
  check(0);
  for (int i = 1; i < binary.num_layers(); ++i) {
    const auto children = binary.Children(i - 1);
    for (std::size_t v = 0; v < children.size(); ++v) {
      if (children[v].empty()) game.Play(ScriptStep::Delete(leaf_of[v]));
    }
    std::vector<NodeId> next(binary.layers[i].size(), kNoNode);
    for (std::size_t v = 0; v < children.size(); ++v) {
      if (children[v].size() == 2) {
        const StepRecord& rec = game.Play(ScriptStep::Fork(leaf_of[v], 2));
        for (int c = 0; c < 2; ++c) {
          const NodeId u = rec.created[c];
          if (image.size() <= u) image.resize(u + 1);
          image[u] = {i, children[v][c]};
          next[children[v][c]] = u;
        }
      } else if (children[v].size() == 1) {
        const NodeId u = leaf_of[v];
        image[u] = {i, children[v][0]};
        next[children[v][0]] = u;
      }
    }
    leaf_of = std::move(next);
    for (std::size_t j = 0; j < binary.layers[i].size(); ++j) {
      if (binary.layers[i][j].weight == 1) game.Play(ScriptStep::Grow(leaf_of[j], 1.0));
    }
    check(i);

    LayerTransition tr;
    for (NodeId u : leaf_of) tr.distribution.push_back(game.state()[u]);
    const auto& prev = out.transitions.back().distribution;
    tr.dist.assign(prev.size(), std::vector<double>(leaf_of.size(), 0.0));
    for (std::size_t a = 0; a < prev.size(); ++a) {
      for (std::size_t b = 0; b < leaf_of.size(); ++b) {
        tr.dist[a][b] = TreeDistance(binary, source_dist, {i - 1, static_cast<int>(a)}, {i, static_cast<int>(b)});
      }
    }
    tr.plan = SolveTransport(prev, tr.distribution, tr.dist);
    out.layered_cost += tr.plan.cost;
    out.transitions.push_back(std::move(tr));
  }
  out.game = std::move(game).TakeTrace();
  out.tree_cost = out.game.ledger.total();
  out.opt = OptPath(binary).weight;
  return out;
}

Walk SampleWalk(const TraversalResult& tr, std::mt19937_64& rng) {
  Walk w;
  int u = 0;
  w.path.push_back(u);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 1; i < tr.transitions.size(); ++i) {
    const auto& row = tr.transitions[i].plan.coupling.at(u);
    const double mass = std::accumulate(row.begin(), row.end(), 0.0);
    if (!(mass > 0.0)) throw Error(ErrorKind::kInternal, "walk reached a node of zero probability");
    const double r = unit(rng) * mass;
    double acc = 0.0;
    int v = -1;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] <= 0.0) continue;
      v = static_cast<int>(j);
      acc += row[j];
      if (r < acc) break;
    }
    w.cost += tr.transitions[i].dist[u][v];
    u = v;
    w.path.push_back(u);
  }
  return w;
}

WalkEstimate EstimateWalks(const TraversalResult& tr, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::kInvalidParameter, "need at least one sample");
  std::mt19937_64 rng(seed);
  WalkEstimate est;
  for (const auto& t : tr.transitions) est.marginals.emplace_back(t.distribution.size(), 0.0);
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Walk w = SampleWalk(tr, rng);
    sum += w.cost;
    sum_sq += w.cost * w.cost;
    for (std::size_t i = 0; i < w.path.size(); ++i) est.marginals[i][w.path[i]] += 1.0;
  }
  const double n = samples;
  est.mean = sum / n;
  const double var = samples > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
  est.std_error = std::sqrt(var / n);
  for (auto& layer : est.marginals) {
    for (double& f : layer) f /= n;
  }
  return est;
}

}  // namespace lgt
