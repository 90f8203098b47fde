// Command-line front end: gen / simulate / traverse / certify / bench.
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgt/error.hpp"
#include "lgt/harness.hpp"
#include "lgt/io.hpp"
#include "lgt/layered.hpp"
#include "lgt/potential.hpp"

namespace {

using lgt::io::Json;

struct Common {
  int k = 2;
  double epsilon = 1.0;
  std::uint64_t seed = 1;
  double tol = 1e-6;
  double max_step = 1e-3;
  int samples = 0;
  std::string format = "json";
  std::string out = "-";
};

void AddCommon(CLI::App* app, Common& c, bool with_k = true) {
  if (with_k) app->add_option("--k", c.k, "width / depth bound k (>= 2)");
  app->add_option("--epsilon", c.epsilon, "birth slack epsilon (> 0)");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--tol", c.tol, "relative certificate tolerance");
  app->add_option("--max-step", c.max_step, "max relative Euler step");
  app->add_option("--samples", c.samples, "Monte Carlo walks (layered instances)");
  app->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--out", c.out, "output file, '-' for stdout");
}

lgt::IntegratorConfig Integrator(const Common& c) {
  lgt::IntegratorConfig cfg;
  cfg.max_relative_step = c.max_step;
  cfg.Validate();
  return cfg;
}

std::vector<int> ParseList(const std::string& s) {
  std::vector<int> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw lgt::Error(lgt::ErrorKind::kInputError, "bad integer list '" + s + "'");
    }
  }
  return v;
}

void Emit(const Common& c, const Json& j) { lgt::io::WriteText(c.out, j.dump(2) + "\n"); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving tree game and layered graph traversal toolkit"};
  app.require_subcommand(1);

  Common c;

  auto* gen = app.add_subcommand("gen", "emit an instance or script file");
  std::string gen_kind = "script";
  int gen_steps = 50, gen_layers = 10;
  double gen_p = 0.5;
  std::string gen_lengths;
  gen->add_option("kind", gen_kind, "script | layered | lost-cow")
      ->check(CLI::IsMember({"script", "layered", "lost-cow"}));
  gen->add_option("--steps", gen_steps, "script length");
  gen->add_option("--layers", gen_layers, "layers after the source");
  gen->add_option("--unit-prob", gen_p, "unit edge probability");
  gen->add_option("--lengths", gen_lengths, "lost-cow path lengths, comma separated");
  AddCommon(gen, c);

  auto* sim = app.add_subcommand("simulate", "play a script and write the trace");
  std::string script_path;
  int sim_steps = 50;
  sim->add_option("--script", script_path, "script file; generated from --k/--seed when omitted");
  sim->add_option("--steps", sim_steps, "length of a generated script");
  AddCommon(sim, c);

  auto* trav = app.add_subcommand("traverse", "run a layered instance through the game");
  std::string instance_path;
  trav->add_option("--instance", instance_path, "layered instance file")->required();
  AddCommon(trav, c);

  auto* cert = app.add_subcommand("certify", "check a trace against the potential certificate");
  std::string trace_path, cert_script;
  bool brief = false;
  cert->add_option("--trace", trace_path, "trace file (simulate output or traverse output)")->required();
  cert->add_option("--script", cert_script, "script the trace must have been produced from");
  cert->add_flag("--brief", brief, "omit per-check entries");
  AddCommon(cert, c, false);

  auto* bench = app.add_subcommand("bench", "run an experiment and write a results table");
  std::string family = "random-script", ks = "2,3,4,5";
  lgt::ExperimentConfig ecfg;
  bench->add_option("--family", family, "random-script | random-layered | lost-cow");
  bench->add_option("--ks", ks, "comma-separated k values (overrides --k)");
  bench->add_option("--count", ecfg.instances_per_k, "instances per k");
  bench->add_option("--steps", ecfg.n_steps, "random script length");
  bench->add_option("--layers", ecfg.n_layers, "random layered tree depth");
  bench->add_option("--max-length", ecfg.max_length, "lost-cow maximum path length");
  bench->add_option("--unit-prob", ecfg.unit_edge_prob, "unit edge probability");
  AddCommon(bench, c);
  c.format = "csv";

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Json j;
      if (gen_kind == "script") {
        j = lgt::io::ToJson(lgt::GenRandomScript(c.k, gen_steps, c.seed, c.epsilon));
      } else if (gen_kind == "layered") {
        j = lgt::io::ToJson(lgt::GenRandomLayeredTree(c.k, gen_layers, gen_p, c.seed));
      } else {
        std::vector<int> lengths = gen_lengths.empty() ? std::vector<int>(c.k, 1) : ParseList(gen_lengths);
        j = lgt::io::ToJson(lgt::GenLostCow(c.k, lengths));
      }
      Emit(c, j);
    } else if (*sim) {
      const lgt::AdversaryScript script = script_path.empty()
                                              ? lgt::GenRandomScript(c.k, sim_steps, c.seed, c.epsilon)
                                              : lgt::io::ScriptFromJson(lgt::io::ReadJsonFile(script_path));
      const lgt::GameTrace trace = lgt::RunScript(script, Integrator(c));
      std::cerr << "steps " << trace.records.size() << "  cost " << trace.ledger.total() << "  opt "
                << lgt::OptDistance(trace.final_tree) << "  euler " << trace.stats.euler_steps << "\n";
      Emit(c, lgt::io::ToJson(trace));
    } else if (*trav) {
      const lgt::LayeredTree g = lgt::io::LayeredFromJson(lgt::io::ReadJsonFile(instance_path));
      const lgt::BinaryConversion bin = lgt::BinaryConvert(g, c.k);
      const lgt::TraversalResult tr = lgt::Traverse(bin.tree, c.k, c.epsilon, Integrator(c));
      Json j = lgt::io::ToJson(tr);
      j["converted_instance"] = lgt::io::ToJson(bin.tree);
      j["layer_map"] = bin.layer_map;
      if (c.samples > 0) {
        const lgt::WalkEstimate est = lgt::EstimateWalks(tr, c.samples, c.seed);
        j["samples"] = {{"count", c.samples}, {"mean", est.mean}, {"stderr", est.std_error}};
      }
      std::cerr << "opt " << tr.opt << "  tree cost " << tr.tree_cost << "  layered cost " << tr.layered_cost
                << "\n";
      Emit(c, j);
    } else if (*cert) {
      Json j = lgt::io::ReadJsonFile(trace_path);
      if (j.contains("game")) j = j.at("game");  // traverse output wraps the game trace
      const lgt::GameTrace trace = lgt::io::TraceFromJson(j);
      if (!cert_script.empty()) {
        const auto script = lgt::io::ScriptFromJson(lgt::io::ReadJsonFile(cert_script));
        if (!(script == trace.script)) {
          throw lgt::Error(lgt::ErrorKind::kInputError, "trace was not produced by this script");
        }
      }
      const lgt::CertificateReport rep = lgt::BuildCertificateReport(trace, lgt::LineageY(trace.script), c.tol);
      std::cerr << (rep.passed() ? "PASS" : "FAIL") << "  checks " << rep.entries.size() << "  failures "
                << rep.failures << "  max violation " << rep.max_violation << "\n";
      Emit(c, lgt::io::ToJson(rep, !brief));
      return rep.passed() ? 0 : 1;
    } else if (*bench) {
      ecfg.family = lgt::ParseFamily(family);
      ecfg.ks = bench->count("--ks") || !bench->count("--k") ? ParseList(ks) : std::vector<int>{c.k};
      ecfg.epsilon = c.epsilon;
      ecfg.seed = c.seed;
      ecfg.samples = c.samples;
      ecfg.cert_tol = c.tol;
      ecfg.integrator = Integrator(c);
      const auto rows = lgt::RunExperiment(ecfg);
      if (c.format == "csv") {
        std::ostringstream os;
        lgt::io::WriteResultsCsv(os, rows);
        lgt::io::WriteText(c.out, os.str());
      } else {
        Emit(c, lgt::io::ResultsToJson(rows));
      }
    }
  } catch (const lgt::Error& e) {
    std::cerr << "error [" << lgt::ToString(e.kind()) << "]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
