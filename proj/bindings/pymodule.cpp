// Python bindings. Config travels as a JSON string so defaults and
// validation live in one place (see planner_config_from_json).

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

#include "babplan/bab.hpp"
#include "babplan/baselines.hpp"
#include "babplan/bench.hpp"
#include "babplan/crown.hpp"
#include "babplan/model.hpp"
#include "babplan/search.hpp"

namespace py = pybind11;
using namespace babplan;

namespace {

PlannerConfig config_from(const std::string& config_json, const std::string& method) {
  PlannerConfig pc = planner_config_from_json(config_json.empty() ? "{}" : config_json);
  if (!method.empty() && method != "babnd") pc.search.method = parse_search_method(method);
  return pc;
}

py::dict trace_to_dict(const std::vector<TraceRow>& trace) {
  py::list iter, uf, min_lf, pruned, selected, pool, samples, wall;
  for (const TraceRow& r : trace) {
    iter.append(r.iter);
    uf.append(r.uf);
    min_lf.append(r.min_lf);
    pruned.append(r.pruned_vol);
    selected.append(r.selected_vol);
    pool.append(r.pool_size);
    samples.append(r.samples);
    wall.append(r.wall_ms);
  }
  py::dict d;
  d["iter"] = iter;
  d["uf"] = uf;
  d["min_lf"] = min_lf;
  d["pruned_vol"] = pruned;
  d["selected_vol"] = selected;
  d["pool_size"] = pool;
  d["samples"] = samples;
  d["wall_ms"] = wall;
  return d;
}

py::dict result_to_dict(const PlanResult& r) {
  py::dict d;
  d["objective"] = r.uf;
  d["action"] = Vector(r.best);
  d["lower_bound"] = r.min_lf;
  d["certified"] = r.certified;
  d["samples"] = r.samples;
  d["iterations"] = r.iterations;
  d["stop_reason"] = r.stop_reason;
  d["trace"] = trace_to_dict(r.trace);
  return d;
}

py::dict run_plan(std::shared_ptr<const Objective> obj, const BoxDomain& root,
                  const PlannerConfig& pc, const std::string& method) {
  const PlanResult res = method == "babnd" ? plan(obj, root, pc) : sample_only_plan(obj, root, pc);
  return result_to_dict(res);
}

py::dict path_to_dict(const PlanPath& p) {
  py::dict d;
  d["success"] = p.success;
  d["goal_distance"] = p.goal_distance;
  d["model_calls"] = p.model_calls;
  d["states"] = p.states;
  d["effectors"] = p.effectors;
  d["actions"] = p.actions;
  return d;
}

}  // namespace

PYBIND11_MODULE(_babplan, m) {
  m.doc() = "branch-and-bound trajectory optimization over learned dynamics";

  py::class_<MlpModel>(m, "Model")
      .def_readonly("widths", &MlpModel::widths)
      .def_readonly("seed", &MlpModel::seed)
      .def_readonly("digest", &MlpModel::digest)
      .def_property_readonly("input_dim", &MlpModel::input_dim)
      .def_property_readonly("output_dim", &MlpModel::output_dim)
      .def("parameter_count", &MlpModel::parameter_count)
      .def("forward", &MlpModel::forward, py::arg("batch"),
           "Batched forward pass, one sample per row.")
      .def("save", [](const MlpModel& self, const std::string& path) { save_model(self, path); },
           py::arg("path"));

  py::class_<Obstacle>(m, "Obstacle")
      .def(py::init([](const Vector& center, double size) {
             Obstacle o;
             o.center = center;
             o.size = size;
             return o;
           }),
           py::arg("center"), py::arg("size"))
      .def_readwrite("center", &Obstacle::center)
      .def_readwrite("size", &Obstacle::size);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("x0", &Scenario::x0)
      .def_readwrite("x_target", &Scenario::x_target)
      .def_readwrite("p0", &Scenario::p0)
      .def_readwrite("horizon", &Scenario::horizon)
      .def_readwrite("u_lower", &Scenario::u_lower)
      .def_readwrite("u_upper", &Scenario::u_upper)
      .def_readwrite("obstacles", &Scenario::obstacles)
      .def_readwrite("lam", &Scenario::lambda)
      .def_readwrite("gamma", &Scenario::gamma)
      .def_readwrite("weights", &Scenario::weights)
      .def_readwrite("axis_weights", &Scenario::axis_weights)
      .def_readwrite("state_lower", &Scenario::state_lower)
      .def_readwrite("state_upper", &Scenario::state_upper)
      .def_property(
          "cost_form", [](const Scenario& s) { return std::string(cost_form_name(s.cost_form)); },
          [](Scenario& s, const std::string& v) { s.cost_form = cost_form_from(v); })
      .def_property(
          "feature_mode",
          [](const Scenario& s) {
            return s.feature_mode == FeatureMode::kRelative ? "relative" : "absolute";
          },
          [](Scenario& s, const std::string& v) {
            if (v == "relative") s.feature_mode = FeatureMode::kRelative;
            else if (v == "absolute") s.feature_mode = FeatureMode::kAbsolute;
            else throw std::invalid_argument("feature_mode must be 'relative' or 'absolute'");
          })
      .def("validate", &Scenario::validate)
      .def("save", [](const Scenario& self, const std::string& path) { save_scenario(self, path); },
           py::arg("path"))
      .def_property_readonly("digest", [](const Scenario& s) { return scenario_digest(s); });

  m.def("generate_model", &generate_model, py::arg("seed"), py::arg("widths"),
        "Deterministically synthesize an MLP (hidden ReLU, linear head).");
  m.def("load_model", &load_model, py::arg("path"));
  m.def("load_scenario", &load_scenario, py::arg("path"));

  m.def("default_config", [] { return planner_config_to_json(PlannerConfig()); },
        "Fully resolved default planner config as a JSON string.");

  m.def(
      "plan",
      [](const MlpModel& model, const Scenario& s, const std::string& config_json,
         const std::string& method) {
        BuiltObjective built = build_objective(model, s);
        return run_plan(built.objective, built.box, config_from(config_json, method), method);
      },
      py::arg("model"), py::arg("scenario"), py::arg("config") = "", py::arg("method") = "babnd",
      "Plan an action sequence minimizing the unrolled scenario cost.");

  m.def(
      "plan_synthetic",
      [](int d, const std::string& config_json, const std::string& method) {
        auto obj = build_synthetic(d);
        return run_plan(obj, obj->domain(), config_from(config_json, method), method);
      },
      py::arg("d"), py::arg("config") = "", py::arg("method") = "babnd",
      "Minimize the separable benchmark objective on [-1, 1]^d.");

  m.def(
      "objective_value",
      [](const MlpModel& model, const Scenario& s, const Matrix& actions) {
        BuiltObjective built = build_objective(model, s);
        return Vector(built.objective->evaluate(actions));
      },
      py::arg("model"), py::arg("scenario"), py::arg("actions"),
      "Evaluate flattened action sequences (one per row) under the unrolled cost.");

  m.def(
      "lower_bound",
      [](const MlpModel& model, const Scenario& s, const std::string& mode,
         const std::string& alpha) {
        BuiltObjective built = build_objective(model, s);
        return lower_bound(*built.objective, built.box, parse_bound_mode(mode), nullptr,
                           parse_alpha_policy(alpha));
      },
      py::arg("model"), py::arg("scenario"), py::arg("mode") = "full-crown",
      py::arg("alpha") = "adaptive",
      "Certified lower bound of the scenario objective over the action box.");

  m.def(
      "network_lower_bound",
      [](const MlpModel& model, const Vector& lo, const Vector& hi, const std::string& mode,
         const std::string& alpha) {
        auto obj = build_network_objective(model);
        return lower_bound(*obj, BoxDomain(lo, hi), parse_bound_mode(mode), nullptr,
                           parse_alpha_policy(alpha));
      },
      py::arg("model"), py::arg("lower"), py::arg("upper"), py::arg("mode") = "full-crown",
      py::arg("alpha") = "adaptive",
      "Certified lower bound of a scalar-output network over an input box.");

  m.def(
      "rollout",
      [](const MlpModel& model, const Scenario& s, const Vector& action_seq) {
        const int ka = s.action_dim();
        if (action_seq.size() != static_cast<Eigen::Index>(ka) * s.horizon)
          throw std::invalid_argument("action length must be horizon * action_dim");
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
      },
      py::arg("model"), py::arg("scenario"), py::arg("action"),
      "Roll a flattened action sequence through the model; returns states per step.");

  m.def(
      "rrt_plan",
      [](const MlpModel& model, const Scenario& s, int max_nodes, int candidate_actions,
         double goal_bias, double goal_tolerance, std::uint64_t seed) {
        RrtConfig cfg;
        cfg.max_nodes = max_nodes;
        cfg.candidate_actions = candidate_actions;
        cfg.goal_bias = goal_bias;
        cfg.goal_tolerance = goal_tolerance;
        cfg.seed = seed;
        return path_to_dict(rrt_plan(model, s, cfg));
      },
      py::arg("model"), py::arg("scenario"), py::arg("max_nodes") = 2000,
      py::arg("candidate_actions") = 1000, py::arg("goal_bias") = 0.5,
      py::arg("goal_tolerance") = 0.05, py::arg("seed") = 0);

  m.def(
      "prm_plan",
      [](const MlpModel& model, const Scenario& s, int nodes, double delta, std::uint64_t seed) {
        PrmConfig cfg;
        cfg.nodes = nodes;
        cfg.delta = delta;
        cfg.seed = seed;
        return path_to_dict(prm_plan(model, s, prm_build(model, s, cfg)));
      },
      py::arg("model"), py::arg("scenario"), py::arg("nodes") = 200, py::arg("delta") = 0.05,
      py::arg("seed") = 0);
}
