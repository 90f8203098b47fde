#include "lgt/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "lgt/error.hpp"

namespace lgt::io {

namespace {

// Converts library parse/type errors into the project's error kind.
template <typename F>
auto Guard(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::kInputError, std::string(what) + ": " + e.what());
  }
}

Json NodeToJson(const EvolvingTree& tree, NodeId u) {
  const auto& n = tree.node(u);
  Json j = {{"id", u}, {"weight", n.weight}, {"creation_step", n.creation_step}};
  j["forked_from"] = n.forked_from == kNoNode ? Json(nullptr) : Json(n.forked_from);
  Json ch = Json::array();
  for (NodeId c : n.children) ch.push_back(NodeToJson(tree, c));
  j["children"] = std::move(ch);
  return j;
}

void NodeFromJson(const Json& j, NodeId parent, std::vector<EvolvingTree::Node>& nodes) {
  const auto id = j.at("id").get<NodeId>();
  if (id >= nodes.size()) nodes.resize(id + 1);
  if (nodes[id].alive) throw Error(ErrorKind::kInputError, "node " + std::to_string(id) + " appears twice");
  nodes[id].alive = true;
  nodes[id].parent = parent;
  nodes[id].weight = j.at("weight").get<double>();
  nodes[id].creation_step = j.at("creation_step").get<int>();
  nodes[id].forked_from = j.at("forked_from").is_null() ? kNoNode : j.at("forked_from").get<NodeId>();
  // Recursion may grow `nodes`, so never hold a reference across it.
  for (const Json& c : j.at("children")) {
    nodes[id].children.push_back(c.at("id").get<NodeId>());
    NodeFromJson(c, id, nodes);
  }
}

Json ValuesToJson(const NodeValues& v) { return Json(v); }

}  // namespace

Json ToJson(const EvolvingTree& tree) {
  Json j = {{"k", tree.k()},
            {"epsilon", tree.epsilon()},
            {"current_step", tree.current_step()},
            {"max_degree_seen", tree.max_degree_seen()},
            {"root", NodeToJson(tree, tree.root())}};
  Json retired = Json::array();
  for (NodeId u = 0; u < tree.id_capacity(); ++u) {
    if (tree.contains(u)) continue;
    retired.push_back({{"id", u}, {"forked_from", tree.forked_from(u)}});
  }
  j["retired"] = std::move(retired);
  return j;
}

EvolvingTree TreeFromJson(const Json& j, bool check_invariants) {
  return Guard("tree", [&] {
    std::vector<EvolvingTree::Node> nodes;
    NodeFromJson(j.at("root"), kNoNode, nodes);
    for (const Json& r : j.at("retired")) {
      const auto id = r.at("id").get<NodeId>();
      if (id >= nodes.size()) nodes.resize(id + 1);
      if (nodes[id].alive) throw Error(ErrorKind::kInputError, "retired node " + std::to_string(id) + " is alive");
      nodes[id].forked_from = r.at("forked_from").get<NodeId>();
    }
    return EvolvingTree::FromNodes(j.at("k").get<int>(), j.at("epsilon").get<double>(),
                                   j.at("current_step").get<int>(), j.at("max_degree_seen").get<int>(),
                                   std::move(nodes), check_invariants);
  });
}

Json ToJson(const EvolvingTree& tree, const FractionalState& x) {
  Json j = Json::object();
  for (NodeId u : tree.Preorder()) j[std::to_string(u)] = x[u];
  return j;
}

FractionalState StateFromJson(const Json& j) {
  return Guard("state", [&] {
    FractionalState x;
    for (const auto& [key, value] : j.items()) {
      std::size_t used = 0;
      unsigned long id = 0;
      try {
        id = std::stoul(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size()) throw Error(ErrorKind::kInputError, "state key '" + key + "' is not a node id");
      x.at(static_cast<NodeId>(id)) = value.get<double>();
    }
    return x;
  });
}

Json ToJson(const ScriptStep& step) {
  Json j = {{"kind", ToString(step.kind)}, {"leaf", step.leaf}};
  if (step.kind == StepKind::kGrow) j["duration"] = step.duration;
  if (step.kind == StepKind::kFork) j["q"] = step.q;
  return j;
}

ScriptStep StepFromJson(const Json& j) {
  return Guard("step", [&] {
    ScriptStep s;
    s.kind = ParseStepKind(j.at("kind").get<std::string>());
    s.leaf = j.at("leaf").get<NodeId>();
    if (s.kind == StepKind::kGrow) s.duration = j.at("duration").get<double>();
    if (s.kind == StepKind::kFork) s.q = j.at("q").get<int>();
    return s;
  });
}

Json ToJson(const AdversaryScript& script) {
  Json steps = Json::array();
  for (const auto& s : script.steps) steps.push_back(ToJson(s));
  return {{"k", script.k}, {"epsilon", script.epsilon}, {"steps", std::move(steps)}};
}

AdversaryScript ScriptFromJson(const Json& j) {
  return Guard("script", [&] {
    AdversaryScript s;
    s.k = j.at("k").get<int>();
    s.epsilon = j.at("epsilon").get<double>();
    for (const Json& st : j.at("steps")) s.steps.push_back(StepFromJson(st));
    return s;
  });
}

Json ToJson(const IntegratorConfig& cfg) {
  return {{"max_relative_step", cfg.max_relative_step}, {"min_dt", cfg.min_dt},
          {"drain_tolerance", cfg.drain_tolerance},     {"conservation_tol", cfg.conservation_tol},
          {"sample_every", cfg.sample_every},           {"max_steps", cfg.max_steps},
          {"max_drain_phases", cfg.max_drain_phases}};
}

IntegratorConfig IntegratorFromJson(const Json& j) {
  return Guard("integrator config", [&] {
    IntegratorConfig c;
    c.max_relative_step = j.value("max_relative_step", c.max_relative_step);
    c.min_dt = j.value("min_dt", c.min_dt);
    c.drain_tolerance = j.value("drain_tolerance", c.drain_tolerance);
    c.conservation_tol = j.value("conservation_tol", c.conservation_tol);
    c.sample_every = j.value("sample_every", c.sample_every);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.max_drain_phases = j.value("max_drain_phases", c.max_drain_phases);
    c.Validate();
    return c;
  });
}

Json ToJson(const GameTrace& trace) {
  Json records = Json::array();
  for (const StepRecord& r : trace.records) {
    Json jr = {{"step_number", r.step_number},
               {"step", ToJson(r.step)},
               {"tree_before", ToJson(r.tree_before)},
               {"tree_after", ToJson(r.tree_after)},
               {"x_before", ToJson(r.tree_before, r.x_before)},
               {"x_after", ToJson(r.tree_after, r.x_after)},
               {"created", r.created},
               {"cost", {{"service", r.cost.service}, {"movement", r.cost.movement}}}};
    if (r.tree_mid) jr["tree_mid"] = ToJson(*r.tree_mid);
    if (r.tree_mid && r.x_mid) jr["x_mid"] = ToJson(*r.tree_mid, *r.x_mid);
    if (r.outcome) {
      Json o = {{"deleted_leaf", r.outcome->deleted_leaf}, {"parent", r.outcome->parent}};
      if (r.outcome->merged) {
        o["merged"] = {{"removed", r.outcome->merged->removed}, {"survivor", r.outcome->merged->survivor}};
      }
      jr["outcome"] = std::move(o);
    }
    Json samples = Json::array();
    for (const TrajectorySample& s : r.samples) {
      samples.push_back({{"t", s.t},
                         {"leaf_weight", s.leaf_weight},
                         {"x", ValuesToJson(s.x.mass)},
                         {"lambda", ValuesToJson(s.lambda.lambda)}});
    }
    jr["samples"] = std::move(samples);
    records.push_back(std::move(jr));
  }
  return {{"script", ToJson(trace.script)},
          {"config", ToJson(trace.config)},
          {"records", std::move(records)},
          {"cost", {{"service", trace.ledger.service}, {"movement", trace.ledger.movement},
                    {"total", trace.ledger.total()}}},
          {"stats", {{"min_internal_lambda", trace.stats.min_internal_lambda},
                     {"max_conservation_residual", trace.stats.max_conservation_residual},
                     {"euler_steps", trace.stats.euler_steps}}},
          {"final_tree", ToJson(trace.final_tree)},
          {"final_x", ToJson(trace.final_tree, trace.final_x)}};
}

GameTrace TraceFromJson(const Json& j) {
  return Guard("trace", [&] {
    GameTrace t;
    t.script = ScriptFromJson(j.at("script"));
    t.config = IntegratorFromJson(j.at("config"));
    for (const Json& jr : j.at("records")) {
      StepRecord r;
      r.step_number = jr.at("step_number").get<int>();
      r.step = StepFromJson(jr.at("step"));
      r.tree_before = TreeFromJson(jr.at("tree_before"));
      r.tree_after = TreeFromJson(jr.at("tree_after"));
      r.x_before = StateFromJson(jr.at("x_before"));
      r.x_after = StateFromJson(jr.at("x_after"));
      r.created = jr.at("created").get<std::vector<NodeId>>();
      r.cost.service = jr.at("cost").at("service").get<double>();
      r.cost.movement = jr.at("cost").at("movement").get<double>();
      if (jr.contains("tree_mid")) r.tree_mid = TreeFromJson(jr.at("tree_mid"), false);
      if (jr.contains("x_mid")) r.x_mid = StateFromJson(jr.at("x_mid"));
      if (jr.contains("outcome")) {
        const Json& o = jr.at("outcome");
        DeleteOutcome out;
        out.deleted_leaf = o.at("deleted_leaf").get<NodeId>();
        out.parent = o.at("parent").get<NodeId>();
        if (o.contains("merged")) {
          out.merged = MergeRecord{o.at("merged").at("removed").get<NodeId>(),
                                   o.at("merged").at("survivor").get<NodeId>()};
        }
        r.outcome = out;
      }
      for (const Json& s : jr.at("samples")) {
        TrajectorySample ts;
        ts.t = s.at("t").get<double>();
        ts.leaf_weight = s.at("leaf_weight").get<double>();
        ts.x.mass = s.at("x").get<NodeValues>();
        ts.lambda.lambda = s.at("lambda").get<NodeValues>();
        r.samples.push_back(std::move(ts));
      }
      t.ledger.Add(r.cost);
      t.records.push_back(std::move(r));
    }
    t.stats.min_internal_lambda = j.at("stats").at("min_internal_lambda").get<double>();
    t.stats.max_conservation_residual = j.at("stats").at("max_conservation_residual").get<double>();
    t.stats.euler_steps = j.at("stats").at("euler_steps").get<std::size_t>();
    t.final_tree = TreeFromJson(j.at("final_tree"));
    t.final_x = StateFromJson(j.at("final_x"));
    return t;
  });
}

Json ToJson(const LayeredTree& g) {
  Json layers = Json::array();
  for (const auto& layer : g.layers) {
    Json jl = Json::array();
    for (const LayerNode& n : layer) jl.push_back({{"parent", n.parent}, {"weight", n.weight}});
    layers.push_back(std::move(jl));
  }
  return {{"layers", std::move(layers)}};
}

LayeredTree LayeredFromJson(const Json& j) {
  return Guard("layered instance", [&] {
    LayeredTree g;
    for (const Json& jl : j.at("layers")) {
      std::vector<LayerNode> layer;
      for (const Json& n : jl) layer.push_back({n.value("parent", -1), n.at("weight").get<int>()});
      g.layers.push_back(std::move(layer));
    }
    return g;
  });
}

Json ToJson(const TraversalResult& tr) {
  Json layers = Json::array();
  for (const LayerTransition& t : tr.transitions) {
    layers.push_back({{"distribution", t.distribution},
                      {"distances", t.dist},
                      {"plan", t.plan.coupling},
                      {"transport_cost", t.plan.cost}});
  }
  return {{"opt", tr.opt},
          {"layered_cost", tr.layered_cost},
          {"tree_cost", tr.tree_cost},
          {"layers", std::move(layers)},
          {"game", ToJson(tr.game)}};
}

Json ToJson(const CertificateReport& rep, bool include_entries) {
  Json j = {{"passed", rep.passed()},
            {"failures", rep.failures},
            {"max_violation", rep.max_violation},
            {"k", rep.k},
            {"d_max", rep.d_max},
            {"epsilon", rep.epsilon},
            {"total_cost", rep.total_cost},
            {"opt", rep.opt},
            {"optimal_service", rep.optimal_service},
            {"p0", rep.p0},
            {"p_final", rep.p_final},
            {"fork_increment_sum", rep.fork_increment_sum},
            {"bound", rep.bound},
            {"min_internal_lambda", rep.min_sampled_lambda},
            {"checks", rep.entries.size()}};
  if (include_entries) {
    Json entries = Json::array();
    for (const CertificateEntry& e : rep.entries) {
      entries.push_back({{"record", e.record}, {"inequality", e.inequality}, {"time", e.time},
                         {"lhs", e.lhs}, {"rhs", e.rhs}, {"tol", e.tol}, {"ok", e.ok()}});
    }
    j["entries"] = std::move(entries);
  }
  return j;
}

void WriteResultsCsv(std::ostream& out, const std::vector<ResultRow>& rows) {
  for (std::size_t i = 0; i < kResultColumns.size(); ++i) out << (i ? "," : "") << kResultColumns[i];
  out << '\n';
  auto num = [&out](double v) {
    if (std::isnan(v)) out << "nan";
    else out << v;
  };
  const auto old = out.precision(12);
  for (const ResultRow& r : rows) {
    out << r.instance_id << ',' << r.k << ',' << r.d_max << ',';
    num(r.opt); out << ',';
    num(r.frac_cost); out << ',';
    num(r.bound); out << ',';
    num(r.max_cert_violation); out << ',';
    num(r.greedy_cost); out << ',';
    num(r.samples_mean); out << ',';
    num(r.samples_stderr); out << '\n';
  }
  out.precision(old);
}

Json ResultsToJson(const std::vector<ResultRow>& rows) {
  Json arr = Json::array();
  auto num = [](double v) { return std::isnan(v) ? Json(nullptr) : Json(v); };
  for (const ResultRow& r : rows) {
    arr.push_back({{"instance_id", r.instance_id}, {"k", r.k}, {"d_max", r.d_max}, {"opt", num(r.opt)},
                   {"frac_cost", num(r.frac_cost)}, {"bound", num(r.bound)},
                   {"max_cert_violation", num(r.max_cert_violation)}, {"greedy_cost", num(r.greedy_cost)},
                   {"samples_mean", num(r.samples_mean)}, {"samples_stderr", num(r.samples_stderr)}});
  }
  return arr;
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInputError, "cannot open " + path);
  return Guard(path.c_str(), [&] { return Json::parse(in); });
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kInputError, "cannot write " + path);
  out << text;
}

}  // namespace lgt::io
