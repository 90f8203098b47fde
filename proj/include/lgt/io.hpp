#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgt/dynamics.hpp"
#include "lgt/harness.hpp"
#include "lgt/layered.hpp"
#include "lgt/potential.hpp"
#include "lgt/script.hpp"

// JSON round-tripping for every artifact the CLI reads or writes. Readers
// throw kInputError on malformed documents.
namespace lgt::io {

using Json = nlohmann::json;

// Trees are nested objects {id, weight, creation_step, forked_from, children}
// under "root", plus the game globals and the ids of nodes no longer alive
// (kept so that lineage survives a round trip).
Json ToJson(const EvolvingTree& tree);
EvolvingTree TreeFromJson(const Json& j, bool check_invariants = true);

// States are {"<id>": mass} maps over live non-root nodes.
Json ToJson(const EvolvingTree& tree, const FractionalState& x);
FractionalState StateFromJson(const Json& j);

Json ToJson(const ScriptStep& step);
ScriptStep StepFromJson(const Json& j);
Json ToJson(const AdversaryScript& script);
AdversaryScript ScriptFromJson(const Json& j);

Json ToJson(const IntegratorConfig& cfg);
IntegratorConfig IntegratorFromJson(const Json& j);

Json ToJson(const GameTrace& trace);
GameTrace TraceFromJson(const Json& j);

// {"layers": [[{"parent": p, "weight": w}, ...], ...]}
Json ToJson(const LayeredTree& g);
LayeredTree LayeredFromJson(const Json& j);

Json ToJson(const TraversalResult& tr);
Json ToJson(const CertificateReport& rep, bool include_entries = true);

inline const std::vector<std::string> kResultColumns = {
    "instance_id", "k", "d_max", "opt", "frac_cost", "bound", "max_cert_violation",
    "greedy_cost", "samples_mean", "samples_stderr"};

void WriteResultsCsv(std::ostream& out, const std::vector<ResultRow>& rows);
Json ResultsToJson(const std::vector<ResultRow>& rows);

Json ReadJsonFile(const std::string& path);
void WriteText(const std::string& path, const std::string& text);  // "-" means stdout

}  // namespace lgt::io
