// Command-line front end: planning runs, closed-loop rollouts, bound audits,
// model synthesis and method comparisons. Every run writes a manifest with
// the fully resolved config so it can be replayed bit-exactly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "babplan/bab.hpp"
#include "babplan/baselines.hpp"
#include "babplan/bench.hpp"
#include "babplan/crown.hpp"
#include "babplan/digest.hpp"
#include "babplan/model.hpp"
#include "babplan/parallel.hpp"
#include "babplan/rng.hpp"
#include "babplan/search.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace babplan;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Planner-level failure (budget exhausted, infeasible, audit violations):
// exit code 1, distinct from usage errors (2).
struct PlanFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double now_ms() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Library parsers throw std::invalid_argument; at the CLI boundary a bad
// config is a usage error (exit 2), not a planner failure.
PlannerConfig planner_from_json(const json& j) {
  try {
    return planner_config_from_json(j.dump());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

json planner_to_json(const PlannerConfig& c) { return json::parse(planner_config_to_json(c)); }

BoundMode bound_mode_arg(const std::string& s) {
  try {
    return parse_bound_mode(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

AlphaPolicy alpha_arg(const std::string& s) {
  try {
    return parse_alpha_policy(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

RrtConfig rrt_from_json(const json& j) {
  RrtConfig c;
  if (!j.contains("rrt")) return c;
  const json& r = j["rrt"];
  c.max_nodes = r.value("max_nodes", c.max_nodes);
  c.candidate_actions = r.value("candidate_actions", c.candidate_actions);
  c.goal_bias = r.value("goal_bias", c.goal_bias);
  c.goal_tolerance = r.value("goal_tolerance", c.goal_tolerance);
  return c;
}

json rrt_to_json(const RrtConfig& c) {
  return {{"max_nodes", c.max_nodes},
          {"candidate_actions", c.candidate_actions},
          {"goal_bias", c.goal_bias},
          {"goal_tolerance", c.goal_tolerance}};
}

PrmConfig prm_from_json(const json& j) {
  PrmConfig c;
  if (!j.contains("prm")) return c;
  const json& p = j["prm"];
  c.nodes = p.value("nodes", c.nodes);
  c.delta = p.value("delta", c.delta);
  return c;
}

json prm_to_json(const PrmConfig& c) { return {{"nodes", c.nodes}, {"delta", c.delta}}; }

// Shapes the sampler budget (or the subdivision count for babnd) so the run
// consumes at most `budget` objective evaluations.
void apply_budget(PlannerConfig& pc, const std::string& method, std::int64_t budget) {
  if (budget <= 0) throw UsageError("budget must be positive");
  if (method == "babnd") {
    const std::int64_t per_box =
        static_cast<std::int64_t>(pc.search.samples_per_iter + 1) * pc.search.iterations;
    const std::int64_t boxes = std::max<std::int64_t>(1, budget / per_box);
    pc.term.max_iterations =
        static_cast<int>(std::max<std::int64_t>(0, (boxes - 1) / (2 * pc.batch)));
  } else {
    pc.search.method = parse_search_method(method);
    pc.search.samples_per_iter =
        static_cast<int>(std::max<std::int64_t>(1, budget / pc.search.iterations - 1));
  }
}

void require_known_method(const std::string& method, bool allow_graph_planners) {
  if (method == "babnd" || method == "cem" || method == "mppi" || method == "gd") return;
  if (allow_graph_planners && (method == "rrt" || method == "prm")) return;
  throw UsageError("unknown method '" + method + "'");
}

std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

Matrix roll_states(const MlpModel& model, const Scenario& s, const Vector& action_seq) {
  const int ka = s.action_dim();
  Matrix states(s.horizon, s.state_dim());
  Vector x = s.x0, p = s.p0;
  for (int t = 0; t < s.horizon; ++t) {
    const Vector u = action_seq.segment(t * ka, ka);
    x = model.forward(make_features(s, x.transpose(), p.transpose(), u.transpose()))
            .row(0)
            .transpose();
    p += u;
    states.row(t) = x.transpose();
  }
  return states;
}

json path_to_json(const PlanPath& path) {
  json j;
  j["schema"] = "path-solution.v1";
  j["success"] = path.success;
  j["goal_distance"] = path.goal_distance;
  j["model_calls"] = path.model_calls;
  auto rows = [](const std::vector<Vector>& vs) {
    json a = json::array();
    for (const Vector& v : vs) a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    return a;
  };
  j["states"] = rows(path.states);
  j["effectors"] = rows(path.effectors);
  j["actions"] = rows(path.actions);
  return j;
}

struct RunOutcome {
  std::vector<std::string> outputs;
  std::string model_digest;
  bool ok = true;
  std::string failure;
};

// ---- synth ----------------------------------------------------------------

RunOutcome run_synth(const json& cfg, const fs::path& out) {
  const int d = cfg.at("d").get<int>();
  if (d < 1) throw UsageError("d must be positive");
  const std::string method = cfg.at("method").get<std::string>();
  require_known_method(method, false);
  const std::int64_t budget = cfg.at("budget").get<std::int64_t>();
  PlannerConfig pc = planner_from_json(cfg.at("planner"));
  apply_budget(pc, method, budget);

  auto obj = build_synthetic(d);
  const BoxDomain root = obj->domain();
  const double t0 = now_ms();
  const PlanResult res = method == "babnd" ? plan(obj, root, pc) : sample_only_plan(obj, root, pc);
  const double wall = now_ms() - t0;
  const double gap = res.uf - d * SyntheticObjective::kUnitMinimum;

  const std::string csv_name = cfg.value("csv", "synth.csv");
  write_trace_csv((out / "trace.csv").string(), res.trace);
  std::string row = method + "," + std::to_string(d) + "," + csv_double(res.uf) + "," +
                    csv_double(gap) + "," + std::to_string(res.samples) + "," + csv_double(wall);
  write_text(out / csv_name,
             "# schema: synth-result.v1\nmethod,d,best,gap,samples,wall_ms\n" + row + "\n");
  std::cout << "method,d,best,gap,samples,wall_ms\n" << row << "\n";

  RunOutcome o;
  o.outputs = {csv_name, "trace.csv"};
  return o;
}

// ---- gen-model ------------------------------------------------------------

RunOutcome run_gen_model(const json& cfg, const fs::path& out) {
  const std::vector<int> widths = cfg.at("widths").get<std::vector<int>>();
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const std::string name = cfg.value("name", "model.json");
  MlpModel m;
  try {
    m = generate_model(seed, widths);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  save_model(m, (out / name).string());
  std::cout << "model " << name << " digest " << m.digest << " parameters "
            << m.parameter_count() << "\n";
  RunOutcome o;
  o.outputs = {name};
  o.model_digest = m.digest;
  return o;
}

// ---- plan -----------------------------------------------------------------

MlpModel load_model_checked(const json& cfg) {
  MlpModel model;
  try {
    model = load_model(cfg.at("model_path").get<std::string>());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const std::string want = cfg.value("model_digest", "");
  if (!want.empty() && want != model.digest)
    throw UsageError("model digest mismatch: manifest has " + want + ", file has " +
                     model.digest);
  return model;
}

Scenario load_scenario_checked(const json& cfg) {
  Scenario s;
  try {
    s = load_scenario(cfg.at("scenario_path").get<std::string>());
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const std::string want = cfg.value("scenario_digest", "");
  if (!want.empty() && want != scenario_digest(s))
    throw UsageError("scenario digest mismatch against manifest");
  return s;
}

RunOutcome run_plan(const json& cfg, const fs::path& out) {
  const std::string method = cfg.at("method").get<std::string>();
  require_known_method(method, true);
  const MlpModel model = load_model_checked(cfg);
  const Scenario s = load_scenario_checked(cfg);
  RunOutcome o;
  o.model_digest = model.digest;

  if (method == "rrt" || method == "prm") {
    PlanPath path;
    if (method == "rrt") {
      RrtConfig rc = rrt_from_json(cfg.at("planner"));
      rc.seed = cfg.at("planner").value("seed", std::uint64_t{0});
      path = rrt_plan(model, s, rc);
    } else {
      PrmConfig pcfg = prm_from_json(cfg.at("planner"));
      pcfg.seed = cfg.at("planner").value("seed", std::uint64_t{0});
      const Roadmap map = prm_build(model, s, pcfg);
      path = prm_plan(model, s, map);
    }
    write_json_file(out / "solution.json", path_to_json(path));
    std::cout << method << " success=" << (path.success ? 1 : 0)
              << " goal_distance=" << path.goal_distance << " model_calls=" << path.model_calls
              << "\n";
    o.outputs = {"solution.json"};
    if (!path.success) {
      o.ok = false;
      o.failure = method + ": no path within budget";
    }
    return o;
  }

  PlannerConfig pc = planner_from_json(cfg.at("planner"));
  if (method != "babnd") pc.search.method = parse_search_method(method);
  BuiltObjective built = build_objective(model, s);
  const double t0 = now_ms();
  const PlanResult res = method == "babnd" ? plan(built.objective, built.box, pc)
                                           : sample_only_plan(built.objective, built.box, pc);
  const double wall = now_ms() - t0;

  write_trace_csv((out / "trace.csv").string(), res.trace);
  Solution sol = solution_from(res, wall);
  const Matrix states = roll_states(model, s, res.best);
  for (int t = 0; t < states.rows(); ++t)
    sol.predicted_states.emplace_back(states.row(t).data(), states.row(t).data() + states.cols());
  write_solution_json((out / "solution.json").string(), sol);
  std::cout << "uf " << csv_double(res.uf) << " min_lf " << csv_double(res.min_lf)
            << " certified " << (res.certified ? 1 : 0) << " samples " << res.samples << " stop "
            << res.stop_reason << "\n";
  o.outputs = {"trace.csv", "solution.json"};
  return o;
}

// ---- mpc ------------------------------------------------------------------

RunOutcome run_mpc(const json& cfg, const fs::path& out) {
  const std::string method = cfg.at("method").get<std::string>();
  require_known_method(method, false);
  const int replan = cfg.at("replan").get<int>();
  if (replan < 1) throw UsageError("replan period must be at least 1");
  const MlpModel model = load_model_checked(cfg);
  const Scenario s = load_scenario_checked(cfg);
  const PlannerConfig base = planner_from_json(cfg.at("planner"));

  const int H = s.horizon;
  const int ka = s.action_dim();
  const Vector axis = s.axis_weights.size() != 0 ? s.axis_weights : Vector::Ones(s.state_dim());

  Vector x = s.x0, p = s.p0;
  double open_loop = std::numeric_limits<double>::infinity();
  double cumulative = 0.0, final_step_cost = 0.0;
  std::int64_t samples = 0;
  int replans = 0;
  Vector prev_best;
  std::string rows;
  const double t0 = now_ms();

  for (int exec = 0; exec < H;) {
    Scenario suffix = s;
    suffix.x0 = x;
    suffix.p0 = p;
    suffix.horizon = H - exec;
    suffix.weights.resize(static_cast<size_t>(H - exec));
    for (int t = 1; t <= H - exec; ++t)
      suffix.weights[static_cast<size_t>(t - 1)] = s.tracking_weight(exec + t);

    BuiltObjective built = build_objective(model, suffix);
    PlannerConfig pc = base;
    pc.seed = mix_seed(base.seed, static_cast<std::uint64_t>(replans));
    const Vector* warm = prev_best.size() == built.box.dim() ? &prev_best : nullptr;
    const PlanResult res = method == "babnd"
                               ? plan(built.objective, built.box, pc, nullptr, warm)
                               : sample_only_plan(built.objective, built.box, pc, warm);
    samples += res.samples;
    ++replans;
    if (replans == 1) open_loop = res.uf;

    const int steps = std::min(replan, H - exec);
    for (int r = 0; r < steps; ++r) {
      const Vector u = res.best.segment(r * ka, ka);
      x = model.forward(make_features(s, x.transpose(), p.transpose(), u.transpose()))
              .row(0)
              .transpose();
      p += u;
      ++exec;
      double track = 0.0;
      for (int j = 0; j < s.state_dim(); ++j) {
        const double dxj = x[j] - s.x_target[j];
        track += axis[j] * dxj * dxj;
      }
      const double cost = s.tracking_weight(exec) * track + collision_penalty(s, x, p);
      cumulative += cost;
      final_step_cost = cost;
      rows += std::to_string(exec) + "," + csv_double(cost) + "," + csv_double(cumulative) + "," +
              csv_double(res.uf) + "," + std::to_string(samples) + "," +
              csv_double(now_ms() - t0) + "\n";
    }
    prev_best = res.best.size() >= (steps + 1) * ka
                    ? Vector(res.best.tail(res.best.size() - steps * ka))
                    : Vector();
  }

  write_text(out / "mpc-trace.csv",
             "# schema: mpc-trace.v1\nstep,cost,cumulative,plan_uf,samples,wall_ms\n" + rows);
  json summary;
  summary["schema"] = "mpc-summary.v1";
  summary["open_loop_objective"] = open_loop;
  summary["realized_objective"] = cumulative;
  summary["final_step_cost"] = final_step_cost;
  summary["final_state_distance"] = (x - s.x_target).norm();
  summary["steps"] = H;
  summary["replans"] = replans;
  summary["samples"] = samples;
  write_json_file(out / "mpc.json", summary);
  std::cout << "realized " << csv_double(cumulative) << " open_loop " << csv_double(open_loop)
            << " final_step_cost " << csv_double(final_step_cost) << " replans " << replans
            << "\n";

  RunOutcome o;
  o.outputs = {"mpc-trace.csv", "mpc.json"};
  o.model_digest = model.digest;
  return o;
}

// ---- audit-bounds ---------------------------------------------------------

struct AuditCheck {
  std::int64_t cases = 0;
  std::int64_t violations = 0;
};

// Shrinks the box toward an off-center point; bounds computed on the shrunk
// box are invalid for the full box, which the audit must notice.
BoxDomain corrupt_box(const BoxDomain& box, Rng& rng) {
  Vector lo(box.dim()), hi(box.dim());
  for (int j = 0; j < box.dim(); ++j) {
    const double a = rng.uniform(0.2, 0.45), b = rng.uniform(0.2, 0.45);
    lo[j] = box.lower()[j] + a * box.width(j);
    hi[j] = box.upper()[j] - b * box.width(j);
  }
  return BoxDomain(std::move(lo), std::move(hi));
}

RunOutcome run_audit(const json& cfg, const fs::path& out) {
  const int trials = cfg.at("trials").get<int>();
  if (trials < 1) throw UsageError("trials must be positive");
  const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
  const bool corrupt = cfg.value("inject_corruption", false);
  const int sample_count = cfg.value("samples", 2000);
  const bool have_model = cfg.contains("model_path");

  MlpModel given_model;
  Scenario given_scenario;
  std::string model_digest;
  if (have_model) {
    given_model = load_model_checked(cfg);
    given_scenario = load_scenario_checked(cfg);
    model_digest = given_model.digest;
  }

  Rng rng(mix_seed(seed, 0xA0D17));
  AuditCheck sandwich, soundness, exactness, empirical;
  const double tol = 1e-9;

  // Envelope sandwich on random intervals.
  for (int t = 0; t < trials * 100; ++t) {
    double l = rng.uniform(-5.0, 5.0), u = rng.uniform(-5.0, 5.0);
    if (l > u) std::swap(l, u);
    Vector lv(1), uv(1);
    lv[0] = l;
    uv[0] = u;
    const AlphaPolicy pol = t % 3 == 0   ? AlphaPolicy::kAdaptive
                            : t % 3 == 1 ? AlphaPolicy::kZero
                                         : AlphaPolicy::kOne;
    const ReluRelaxation rel = relax_relu(lv, uv, pol);
    for (int i = 0; i < 10; ++i) {
      const double z = rng.uniform(l, u);
      const double y = std::max(0.0, z);
      ++sandwich.cases;
      if (rel.lower_slope[0] * z + rel.lower_offset[0] > y + tol ||
          rel.upper_slope[0] * z + rel.upper_offset[0] < y - tol)
        ++sandwich.violations;
    }
  }

  for (int t = 0; t < trials; ++t) {
    std::shared_ptr<const GraphObjective> obj;
    BoxDomain root;
    if (have_model) {
      BuiltObjective built = build_objective(given_model, given_scenario);
      obj = built.objective;
      root = built.box;
    } else {
      const int d = 1 + static_cast<int>(rng.uniform_int(4));
      const int layers = 1 + static_cast<int>(rng.uniform_int(4));
      std::vector<int> widths{d};
      for (int i = 0; i < layers; ++i)
        widths.push_back(4 + static_cast<int>(rng.uniform_int(29)));
      widths.push_back(1);
      obj = build_network_objective(generate_model(mix_seed(seed, 100 + t), widths));
      Vector lo(d), hi(d);
      for (int j = 0; j < d; ++j) {
        lo[j] = -rng.uniform(0.5, 2.0);
        hi[j] = rng.uniform(0.5, 2.0);
      }
      root = BoxDomain(std::move(lo), std::move(hi));
    }

    const BoxDomain bound_box = corrupt ? corrupt_box(root, rng) : root;
    const BoundMode mode = t % 2 == 0 ? BoundMode::kFullCrown : BoundMode::kEarlyStopInterval;
    const double lf = lower_bound(*obj, bound_box, mode);

    Matrix batch(sample_count, root.dim());
    for (int i = 0; i < sample_count; ++i)
      for (int j = 0; j < root.dim(); ++j)
        batch(i, j) = rng.uniform(root.lower()[j], root.upper()[j]);
    WatchStats stats;
    const Vector vals = obj->evaluate(batch, &stats);
    ++soundness.cases;
    if (lf > vals.minCoeff() + tol) ++soundness.violations;

    // Empirical mode must stay below every recorded sample.
    WatchStats used = stats;
    if (corrupt) {
      for (auto& [node, st] : used) {
        const Vector mid = 0.5 * (st.min + st.max);
        st.min = 0.5 * (st.min + mid);
        st.max = 0.5 * (st.max + mid);
      }
    }
    const double lf_emp = lower_bound(*obj, root, BoundMode::kEarlyStopEmpirical, &used);
    ++empirical.cases;
    if (lf_emp > vals.minCoeff() + tol) ++empirical.violations;
  }

  // Purely affine networks: the propagated bound is exact, so it must match
  // enumeration over box vertices.
  for (int t = 0; t < std::min(trials, 100); ++t) {
    const int d = 1 + static_cast<int>(rng.uniform_int(6));
    std::vector<int> widths{d, 2 + static_cast<int>(rng.uniform_int(6)), 1};
    MlpModel lin = generate_model(mix_seed(seed, 5000 + t), widths);
    for (auto& layer : lin.layers) layer.relu_after = false;
    auto obj = build_network_objective(lin);
    Vector lo(d), hi(d);
    for (int j = 0; j < d; ++j) {
      lo[j] = -rng.uniform(0.1, 3.0);
      hi[j] = rng.uniform(0.1, 3.0);
    }
    const BoxDomain box(lo, hi);
    const double lf = lower_bound(*obj, box, BoundMode::kFullCrown);
    Matrix verts(1 << d, d);
    for (int m = 0; m < (1 << d); ++m)
      for (int j = 0; j < d; ++j) verts(m, j) = (m >> j) & 1 ? hi[j] : lo[j];
    const double truth = obj->evaluate(verts).minCoeff();
    ++exactness.cases;
    if (std::abs(lf - truth) > tol) ++exactness.violations;
  }

  json report;
  report["schema"] = "audit-report.v1";
  report["inject_corruption"] = corrupt;
  auto emit = [&](const char* name, const AuditCheck& c) {
    report[name] = {{"cases", c.cases}, {"violations", c.violations}};
    std::cout << name << " cases " << c.cases << " violations " << c.violations << "\n";
  };
  emit("sandwich", sandwich);
  emit("soundness", soundness);
  emit("linear_exactness", exactness);
  emit("empirical_consistency", empirical);
  write_json_file(out / "audit.json", report);

  const std::int64_t detected = soundness.violations + empirical.violations;
  const std::int64_t clean_violations =
      sandwich.violations + soundness.violations + exactness.violations + empirical.violations;
  RunOutcome o;
  o.outputs = {"audit.json"};
  o.model_digest = model_digest;
  if (corrupt && detected == 0) {
    o.ok = false;
    o.failure = "corruption injected but not detected";
  } else if (!corrupt && clean_violations > 0) {
    o.ok = false;
    o.failure = "bound violations detected";
  }
  return o;
}

// ---- compare --------------------------------------------------------------

RunOutcome run_compare(const json& cfg, const fs::path& out) {
  const std::vector<std::string> methods = cfg.at("methods").get<std::vector<std::string>>();
  if (methods.empty()) throw UsageError("no methods given");
  for (const auto& m : methods) require_known_method(m, false);
  const int seeds = cfg.at("seeds").get<int>();
  if (seeds < 1) throw UsageError("seeds must be positive");
  const std::uint64_t seed_base = cfg.at("seed").get<std::uint64_t>();
  const std::int64_t budget = cfg.at("budget").get<std::int64_t>();
  const bool synthetic = cfg.contains("d");

  std::shared_ptr<const Objective> obj;
  BoxDomain root;
  int d = 0;
  RunOutcome o;
  if (synthetic) {
    d = cfg.at("d").get<int>();
    if (d < 1) throw UsageError("d must be positive");
    obj = build_synthetic(d);
    root = std::dynamic_pointer_cast<const SyntheticObjective>(obj)->domain();
  } else {
    const MlpModel model = load_model_checked(cfg);
    const Scenario s = load_scenario_checked(cfg);
    BuiltObjective built = build_objective(model, s);
    obj = built.objective;
    root = built.box;
    o.model_digest = model.digest;
  }

  std::string rows;
  std::cout << "method,seed,objective,gap,samples,wall_ms\n";
  for (const std::string& method : methods) {
    for (int i = 0; i < seeds; ++i) {
      PlannerConfig pc = planner_from_json(cfg.at("planner"));
      apply_budget(pc, method, budget);
      pc.seed = seed_base + static_cast<std::uint64_t>(i);
      const double t0 = now_ms();
      const PlanResult res =
          method == "babnd" ? plan(obj, root, pc) : sample_only_plan(obj, root, pc);
      const double wall = now_ms() - t0;
      const double gap =
          synthetic ? res.uf - d * SyntheticObjective::kUnitMinimum
                    : std::numeric_limits<double>::quiet_NaN();
      const std::string row = method + "," + std::to_string(pc.seed) + "," +
                              csv_double(res.uf) + "," + csv_double(gap) + "," +
                              std::to_string(res.samples) + "," + csv_double(wall);
      rows += row + "\n";
      std::cout << row << "\n";
    }
  }
  write_text(out / "compare.csv",
             "# schema: compare-result.v1\nmethod,seed,objective,gap,samples,wall_ms\n" + rows);
  o.outputs = {"compare.csv"};
  return o;
}

// ---- orchestration --------------------------------------------------------

RunOutcome dispatch(const std::string& command, const json& cfg, const fs::path& out) {
  if (command == "synth") return run_synth(cfg, out);
  if (command == "gen-model") return run_gen_model(cfg, out);
  if (command == "plan") return run_plan(cfg, out);
  if (command == "mpc") return run_mpc(cfg, out);
  if (command == "audit-bounds") return run_audit(cfg, out);
  if (command == "compare") return run_compare(cfg, out);
  throw UsageError("manifest references unknown command '" + command + "'");
}

int execute(const std::string& command, const json& cfg, const fs::path& out_dir,
            const std::vector<std::string>& argv) {
  fs::create_directories(out_dir);
  const std::string started = utc_timestamp();
  const RunOutcome o = dispatch(command, cfg, out_dir);

  RunManifest m;
  m.command = command;
  m.argv = argv;
  m.config_json = cfg.dump();
  m.config_digest = sha256_hex(m.config_json);
  m.model_digest = o.model_digest;
  m.seed = cfg.contains("seed")          ? cfg["seed"].get<std::uint64_t>()
           : cfg.contains("planner")     ? cfg["planner"].value("seed", std::uint64_t{0})
                                         : 0;
  m.started_at = started;
  m.finished_at = utc_timestamp();
  m.outputs = o.outputs;
  write_manifest((out_dir / "manifest.json").string(), m);

  if (!o.ok) throw PlanFailure(o.failure);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> argv_copy(argv, argv + argc);
  CLI::App app{"branch-and-bound trajectory optimization over learned dynamics"};
  app.require_subcommand(1);

  // Shared flags, bound per subcommand.
  struct Common {
    std::string config, out_dir = ".", method = "babnd";
    std::uint64_t seed = 0;
    int batch = 0, samples_per_iter = 0, iterations = 0, max_iterations = -1, top_capacity = 0;
    double eta = -1.0, temperature = -1.0, top_percent = -1.0, min_width = -1.0;
    double wall_clock_ms = -1.0, target_objective = std::numeric_limits<double>::quiet_NaN();
    std::string bound_mode, alpha;
  };

  auto add_planner_flags = [](CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "planner config JSON");
    sub->add_option("--out-dir", c.out_dir, "output directory");
    sub->add_option("--seed", c.seed, "planner seed");
    sub->add_option("--batch", c.batch, "subdomains split per iteration");
    sub->add_option("--eta", c.eta, "greedy fraction of the pick-out batch");
    sub->add_option("--temperature", c.temperature, "pick-out softmax temperature");
    sub->add_option("--top-percent", c.top_percent, "sample share steering splits");
    sub->add_option("--min-width", c.min_width, "width floor below which boxes are leaves");
    sub->add_option("--bound-mode", c.bound_mode,
                    "full-crown | early-stop-empirical | early-stop-interval");
    sub->add_option("--alpha", c.alpha, "adaptive | zero | one");
    sub->add_option("--samples-per-iter", c.samples_per_iter, "search samples per iteration");
    sub->add_option("--iterations", c.iterations, "search iterations per subdomain");
    sub->add_option("--top-capacity", c.top_capacity, "retained best samples per subdomain");
    sub->add_option("--max-iterations", c.max_iterations, "subdivision iteration cap");
    sub->add_option("--wall-clock-ms", c.wall_clock_ms, "wall clock cap (0 disables)");
    sub->add_option("--target-objective", c.target_objective, "stop once uf falls below");
  };

  auto resolve_planner = [](CLI::App* sub, const Common& c) {
    json file = c.config.empty() ? json::object() : load_json_file(c.config);
    PlannerConfig pc = planner_from_json(file);
    if (sub->count("--seed")) pc.seed = c.seed;
    else pc.seed = file.value("seed", pc.seed);
    if (sub->count("--batch")) pc.batch = c.batch;
    if (sub->count("--eta")) pc.eta = c.eta;
    if (sub->count("--temperature")) pc.temperature = c.temperature;
    if (sub->count("--top-percent")) pc.top_percent = c.top_percent;
    if (sub->count("--min-width")) pc.min_width = c.min_width;
    if (sub->count("--bound-mode")) pc.bound_mode = bound_mode_arg(c.bound_mode);
    if (sub->count("--alpha")) pc.alpha = alpha_arg(c.alpha);
    if (sub->count("--samples-per-iter")) pc.search.samples_per_iter = c.samples_per_iter;
    if (sub->count("--iterations")) pc.search.iterations = c.iterations;
    if (sub->count("--top-capacity")) pc.search.top_capacity = c.top_capacity;
    if (sub->count("--max-iterations")) pc.term.max_iterations = c.max_iterations;
    if (sub->count("--wall-clock-ms")) pc.term.wall_clock_ms = c.wall_clock_ms;
    if (sub->count("--target-objective")) pc.term.target_objective = c.target_objective;
    json resolved = planner_to_json(pc);
    if (file.contains("rrt")) resolved["rrt"] = rrt_to_json(rrt_from_json(file));
    if (file.contains("prm")) resolved["prm"] = prm_to_json(prm_from_json(file));
    return resolved;
  };

  // synth
  auto* synth = app.add_subcommand("synth", "benchmark on the separable synthetic objective");
  Common sc;
  int synth_d = 0;
  std::int64_t synth_budget = 0;
  std::string synth_csv = "synth.csv";
  synth->add_option("--d", synth_d, "dimension")->required();
  synth->add_option("--method", sc.method, "babnd | cem | mppi | gd");
  synth->add_option("--budget", synth_budget, "total objective evaluations")->required();
  synth->add_option("--csv", synth_csv, "result CSV name");
  add_planner_flags(synth, sc);

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "synthesize a seeded MLP dynamics model");
  std::vector<int> gen_widths;
  std::uint64_t gen_seed = 0;
  std::string gen_out_dir = ".", gen_name = "model.json";
  gen->add_option("--widths", gen_widths, "layer widths, input first")
      ->required()
      ->delimiter(',');
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out-dir", gen_out_dir, "output directory");
  gen->add_option("--name", gen_name, "model file name");

  // plan
  auto* planc = app.add_subcommand("plan", "open-loop planning on a scenario");
  Common pl;
  std::string plan_scenario, plan_model;
  planc->add_option("--scenario", plan_scenario, "scenario JSON")->required();
  planc->add_option("--model", plan_model, "model JSON")->required();
  planc->add_option("--method", pl.method, "babnd | cem | mppi | gd | rrt | prm");
  add_planner_flags(planc, pl);

  // mpc
  auto* mpcc = app.add_subcommand("mpc", "closed-loop rollout, the model as environment");
  Common mc;
  std::string mpc_scenario, mpc_model;
  int mpc_replan = 1;
  mpcc->add_option("--scenario", mpc_scenario, "scenario JSON")->required();
  mpcc->add_option("--model", mpc_model, "model JSON")->required();
  mpcc->add_option("--method", mc.method, "babnd | cem | mppi | gd");
  mpcc->add_option("--replan", mpc_replan, "steps executed per plan");
  add_planner_flags(mpcc, mc);

  // audit-bounds
  auto* audit = app.add_subcommand("audit-bounds", "run the bound property suite");
  Common ac;
  std::string audit_scenario, audit_model;
  int audit_trials = 50, audit_samples = 2000;
  bool audit_corrupt = false;
  audit->add_option("--trials", audit_trials, "objectives audited");
  audit->add_option("--samples", audit_samples, "samples per soundness trial");
  audit->add_option("--model", audit_model, "model JSON (random networks when absent)");
  audit->add_option("--scenario", audit_scenario, "scenario JSON, required with --model");
  audit->add_flag("--inject-corruption", audit_corrupt,
                  "negative control: corrupt bounds, expect detection");
  audit->add_option("--out-dir", ac.out_dir, "output directory");
  audit->add_option("--seed", ac.seed, "audit seed");

  // compare
  auto* cmp = app.add_subcommand("compare", "method grid, one CSV row per (method, seed)");
  Common cc;
  int cmp_d = 0, cmp_seeds = 10;
  std::int64_t cmp_budget = 0;
  std::string cmp_scenario, cmp_model, cmp_methods = "babnd,cem,mppi";
  cmp->add_option("--d", cmp_d, "synthetic dimension");
  cmp->add_option("--scenario", cmp_scenario, "scenario JSON");
  cmp->add_option("--model", cmp_model, "model JSON");
  cmp->add_option("--methods", cmp_methods, "comma-separated method list");
  cmp->add_option("--seeds", cmp_seeds, "seeds per method");
  cmp->add_option("--budget", cmp_budget, "total objective evaluations per run")->required();
  add_planner_flags(cmp, cc);

  // replay
  auto* rep = app.add_subcommand("replay", "re-run a recorded manifest");
  std::string rep_manifest, rep_out = ".";
  rep->add_option("manifest", rep_manifest, "manifest JSON")->required();
  rep->add_option("--out-dir", rep_out, "output directory");

  try {
    app.parse(argc, argv);

    if (synth->parsed()) {
      json cfg;
      cfg["command"] = "synth";
      cfg["d"] = synth_d;
      require_known_method(sc.method, false);
      cfg["method"] = sc.method;
      cfg["budget"] = synth_budget;
      cfg["csv"] = synth_csv;
      cfg["planner"] = resolve_planner(synth, sc);
      cfg["seed"] = cfg["planner"]["seed"];
      return execute("synth", cfg, sc.out_dir, argv_copy);
    }
    if (gen->parsed()) {
      json cfg;
      cfg["command"] = "gen-model";
      cfg["widths"] = gen_widths;
      cfg["seed"] = gen_seed;
      cfg["name"] = gen_name;
      return execute("gen-model", cfg, gen_out_dir, argv_copy);
    }
    if (planc->parsed()) {
      json cfg;
      cfg["command"] = "plan";
      cfg["method"] = pl.method;
      cfg["scenario_path"] = fs::absolute(plan_scenario).string();
      cfg["model_path"] = fs::absolute(plan_model).string();
      cfg["planner"] = resolve_planner(planc, pl);
      cfg["seed"] = cfg["planner"]["seed"];
      cfg["scenario_digest"] = scenario_digest(load_scenario_checked(cfg));
      cfg["model_digest"] = load_model_checked(cfg).digest;
      return execute("plan", cfg, pl.out_dir, argv_copy);
    }
    if (mpcc->parsed()) {
      json cfg;
      cfg["command"] = "mpc";
      cfg["method"] = mc.method;
      cfg["replan"] = mpc_replan;
      cfg["scenario_path"] = fs::absolute(mpc_scenario).string();
      cfg["model_path"] = fs::absolute(mpc_model).string();
      cfg["planner"] = resolve_planner(mpcc, mc);
      cfg["seed"] = cfg["planner"]["seed"];
      cfg["scenario_digest"] = scenario_digest(load_scenario_checked(cfg));
      cfg["model_digest"] = load_model_checked(cfg).digest;
      return execute("mpc", cfg, mc.out_dir, argv_copy);
    }
    if (audit->parsed()) {
      json cfg;
      cfg["command"] = "audit-bounds";
      cfg["trials"] = audit_trials;
      cfg["samples"] = audit_samples;
      cfg["seed"] = ac.seed;
      cfg["inject_corruption"] = audit_corrupt;
      if (!audit_model.empty() != !audit_scenario.empty())
        throw UsageError("--model and --scenario must be given together");
      if (!audit_model.empty()) {
        cfg["scenario_path"] = fs::absolute(audit_scenario).string();
        cfg["model_path"] = fs::absolute(audit_model).string();
        cfg["scenario_digest"] = scenario_digest(load_scenario_checked(cfg));
        cfg["model_digest"] = load_model_checked(cfg).digest;
      }
      return execute("audit-bounds", cfg, ac.out_dir, argv_copy);
    }
    if (cmp->parsed()) {
      json cfg;
      cfg["command"] = "compare";
      std::vector<std::string> methods;
      for (size_t pos = 0; pos < cmp_methods.size();) {
        const size_t comma = cmp_methods.find(',', pos);
        const size_t end = comma == std::string::npos ? cmp_methods.size() : comma;
        if (end > pos) methods.push_back(cmp_methods.substr(pos, end - pos));
        pos = end + 1;
      }
      cfg["methods"] = methods;
      cfg["seeds"] = cmp_seeds;
      cfg["budget"] = cmp_budget;
      cfg["planner"] = resolve_planner(cmp, cc);
      cfg["seed"] = cfg["planner"]["seed"];
      if (cmp->count("--d")) {
        cfg["d"] = cmp_d;
      } else {
        if (cmp_scenario.empty() || cmp_model.empty())
          throw UsageError("compare needs --d or both --scenario and --model");
        cfg["scenario_path"] = fs::absolute(cmp_scenario).string();
        cfg["model_path"] = fs::absolute(cmp_model).string();
        cfg["scenario_digest"] = scenario_digest(load_scenario_checked(cfg));
        cfg["model_digest"] = load_model_checked(cfg).digest;
      }
      return execute("compare", cfg, cc.out_dir, argv_copy);
    }
    if (rep->parsed()) {
      const RunManifest m = read_manifest(rep_manifest);
      if (sha256_hex(m.config_json) != m.config_digest)
        throw UsageError(rep_manifest + ": config digest mismatch");
      return execute(m.command, json::parse(m.config_json), rep_out, argv_copy);
    }
    throw UsageError("no subcommand");
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PlanFailure& e) {
    std::cerr << "planner: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
}
