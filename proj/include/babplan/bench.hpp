#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "babplan/bab.hpp"

namespace babplan {

// Fixed trace schema shared by every planner command:
//   iter, uf, min_lf, pruned_vol, selected_vol, pool_size, samples, wall_ms
// wall_ms is the only timing-dependent column; replay comparisons skip it.
inline constexpr const char* kTraceSchema = "bab-trace.v1";

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::string& path);

struct Solution {
  double objective = 0.0;
  std::vector<double> action;
  std::vector<std::vector<double>> predicted_states;  // rollout of `action`, when known
  double lower_bound = 0.0;
  bool has_lower_bound = false;
  bool certified = false;
  std::int64_t samples = 0;
  int iterations = 0;
  std::string stop_reason;
  double wall_ms = 0.0;
};

Solution solution_from(const PlanResult& r, double wall_ms);
void write_solution_json(const std::string& path, const Solution& s);

// Record of one CLI run, sufficient to reproduce every non-timing output
// column: the fully resolved config is embedded, inputs are identified by
// digest, and outputs are listed by path.
struct RunManifest {
  std::string schema = "run-manifest.v1";
  std::string command;             // subcommand name
  std::vector<std::string> argv;   // as invoked
  std::string config_json;         // resolved config (serialized JSON object)
  std::string config_digest;       // sha256 of config_json
  std::string model_digest;        // empty when no model is involved
  std::uint64_t seed = 0;
  std::string started_at, finished_at;  // UTC ISO-8601
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp();

// Planner config as a JSON object, every field explicit. Parsing accepts a
// partial object and fills the rest from defaults; unknown enum names throw
// std::invalid_argument. Round-trips exactly: parse(serialize(c)) == c.
std::string planner_config_to_json(const PlannerConfig& c);
PlannerConfig planner_config_from_json(const std::string& text);

}  // namespace babplan
