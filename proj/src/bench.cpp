#include "babplan/bench.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace babplan {

namespace {

using nlohmann::json;

constexpr const char* kTraceColumns =
    "iter,uf,min_lf,pruned_vol,selected_vol,pool_size,samples,wall_ms";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out = open_out(path);
  out << "# schema: " << kTraceSchema << "\n" << kTraceColumns << "\n";
  for (const TraceRow& r : rows) {
    out << r.iter << ',' << fmt(r.uf) << ',' << fmt(r.min_lf) << ',' << fmt(r.pruned_vol) << ','
        << fmt(r.selected_vol) << ',' << r.pool_size << ',' << r.samples << ',' << fmt(r.wall_ms)
        << "\n";
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != std::string("# schema: ") + kTraceSchema)
    throw std::runtime_error(path + ": missing trace schema header");
  if (!std::getline(in, line) || line != kTraceColumns)
    throw std::runtime_error(path + ": unexpected trace columns");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 8) throw std::runtime_error(path + ": malformed trace row");
    TraceRow r;
    r.iter = std::stoi(f[0]);
    r.uf = std::stod(f[1]);
    r.min_lf = std::stod(f[2]);
    r.pruned_vol = std::stod(f[3]);
    r.selected_vol = std::stod(f[4]);
    r.pool_size = std::stoll(f[5]);
    r.samples = std::stoll(f[6]);
    r.wall_ms = std::stod(f[7]);
    rows.push_back(r);
  }
  return rows;
}

Solution solution_from(const PlanResult& r, double wall_ms) {
  Solution s;
  s.objective = r.uf;
  s.action.assign(r.best.data(), r.best.data() + r.best.size());
  s.has_lower_bound = std::isfinite(r.min_lf);
  s.lower_bound = s.has_lower_bound ? r.min_lf : 0.0;
  s.certified = r.certified;
  s.samples = r.samples;
  s.iterations = r.iterations;
  s.stop_reason = r.stop_reason;
  s.wall_ms = wall_ms;
  return s;
}

void write_solution_json(const std::string& path, const Solution& s) {
  json j;
  j["schema"] = "solution.v1";
  j["objective"] = s.objective;
  j["action"] = s.action;
  if (!s.predicted_states.empty()) j["predicted_states"] = s.predicted_states;
  if (s.has_lower_bound) j["lower_bound"] = s.lower_bound;
  j["certified"] = s.certified;
  j["samples"] = s.samples;
  j["iterations"] = s.iterations;
  j["stop_reason"] = s.stop_reason;
  j["wall_ms"] = s.wall_ms;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_manifest(const std::string& path, const RunManifest& m) {
  json j;
  j["schema"] = m.schema;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = json::parse(m.config_json);
  j["config_digest"] = m.config_digest;
  j["model_digest"] = m.model_digest;
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("failed writing " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in = open_in(path);
  json j;
  in >> j;
  RunManifest m;
  m.schema = j.at("schema").get<std::string>();
  if (m.schema != "run-manifest.v1")
    throw std::runtime_error(path + ": unsupported manifest schema " + m.schema);
  m.command = j.at("command").get<std::string>();
  m.argv = j.at("argv").get<std::vector<std::string>>();
  m.config_json = j.at("config").dump();
  m.config_digest = j.at("config_digest").get<std::string>();
  m.model_digest = j.value("model_digest", std::string());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started_at = j.value("started_at", std::string());
  m.finished_at = j.value("finished_at", std::string());
  m.outputs = j.value("outputs", std::vector<std::string>());
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string planner_config_to_json(const PlannerConfig& c) {
  json j;
  j["batch"] = c.batch;
  j["eta"] = c.eta;
  j["temperature"] = c.temperature;
  j["top_percent"] = c.top_percent;
  j["min_width"] = c.min_width;
  j["bound_mode"] = bound_mode_name(c.bound_mode);
  j["alpha"] = alpha_policy_name(c.alpha);
  j["seed"] = c.seed;
  j["search"] = {
      {"method", search_method_name(c.search.method)},
      {"samples_per_iter", c.search.samples_per_iter},
      {"iterations", c.search.iterations},
      {"top_capacity", c.search.top_capacity},
      {"cem",
       {{"agents", c.search.cem.agents},
        {"elites", c.search.cem.elites},
        {"jitter", c.search.cem.jitter},
        {"init_sigma", c.search.cem.init_sigma}}},
      {"mppi",
       {{"noise_frac", c.search.mppi.noise_frac},
        {"temperature", c.search.mppi.temperature},
        {"noise_ratios", c.search.mppi.noise_ratios},
        {"temperature_ratios", c.search.mppi.temperature_ratios}}},
      {"gd", {{"base_step", c.search.gd.base_step}, {"step_ratios", c.search.gd.step_ratios}}}};
  j["termination"] = {{"max_iterations", c.term.max_iterations},
                      {"wall_clock_ms", c.term.wall_clock_ms}};
  if (std::isfinite(c.term.target_objective))
    j["termination"]["target_objective"] = c.term.target_objective;
  return j.dump();
}

PlannerConfig planner_config_from_json(const std::string& text) {
  PlannerConfig c;
  json j;
  try {
    j = json::parse(text);
    c.batch = j.value("batch", c.batch);
    c.eta = j.value("eta", c.eta);
    c.temperature = j.value("temperature", c.temperature);
    c.top_percent = j.value("top_percent", c.top_percent);
    c.min_width = j.value("min_width", c.min_width);
    if (j.contains("bound_mode"))
      c.bound_mode = parse_bound_mode(j["bound_mode"].get<std::string>());
    if (j.contains("alpha")) c.alpha = parse_alpha_policy(j["alpha"].get<std::string>());
    c.seed = j.value("seed", c.seed);
    if (j.contains("search")) {
      const json& s = j["search"];
      if (s.contains("method"))
        c.search.method = parse_search_method(s["method"].get<std::string>());
      c.search.samples_per_iter = s.value("samples_per_iter", c.search.samples_per_iter);
      c.search.iterations = s.value("iterations", c.search.iterations);
      c.search.top_capacity = s.value("top_capacity", c.search.top_capacity);
      if (s.contains("cem")) {
        const json& p = s["cem"];
        c.search.cem.agents = p.value("agents", c.search.cem.agents);
        c.search.cem.elites = p.value("elites", c.search.cem.elites);
        c.search.cem.jitter = p.value("jitter", c.search.cem.jitter);
        c.search.cem.init_sigma = p.value("init_sigma", c.search.cem.init_sigma);
      }
      if (s.contains("mppi")) {
        const json& p = s["mppi"];
        c.search.mppi.noise_frac = p.value("noise_frac", c.search.mppi.noise_frac);
        c.search.mppi.temperature = p.value("temperature", c.search.mppi.temperature);
        if (p.contains("noise_ratios"))
          c.search.mppi.noise_ratios = p["noise_ratios"].get<std::vector<double>>();
        if (p.contains("temperature_ratios"))
          c.search.mppi.temperature_ratios = p["temperature_ratios"].get<std::vector<double>>();
      }
      if (s.contains("gd")) {
        const json& p = s["gd"];
        c.search.gd.base_step = p.value("base_step", c.search.gd.base_step);
        if (p.contains("step_ratios"))
          c.search.gd.step_ratios = p["step_ratios"].get<std::vector<double>>();
      }
    }
    if (j.contains("termination")) {
      const json& t = j["termination"];
      c.term.max_iterations = t.value("max_iterations", c.term.max_iterations);
      c.term.wall_clock_ms = t.value("wall_clock_ms", c.term.wall_clock_ms);
      if (t.contains("target_objective"))
        c.term.target_objective = t["target_objective"].get<double>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("planner config: ") + e.what());
  }
  return c;
}

}  // namespace babplan
