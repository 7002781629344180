#include "babplan/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

#include "babplan/digest.hpp"
#include "babplan/rng.hpp"

namespace babplan {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw std::invalid_argument(std::string(what) + ": expected an array");
  Vector v(a.size());
  int i = 0;
  for (const auto& x : a) {
    if (!x.is_number()) throw std::invalid_argument(std::string(what) + ": expected numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

json load_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string(what) + ": cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string(what) + ": parse error in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::int64_t MlpModel::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& l : layers) n += l.W.size() + l.b.size();
  return n;
}

Matrix MlpModel::forward(const Matrix& batch) const {
  if (batch.cols() != input_dim()) throw std::invalid_argument("MlpModel: input width mismatch");
  Matrix h = batch, next;
  for (const auto& l : layers) {
    affine_forward(h, l.W, l.b, next);
    if (l.relu_after) next = next.cwiseMax(0.0);
    h = std::move(next);
  }
  return h;
}

std::string model_digest(const MlpModel& m) {
  std::vector<unsigned char> buf;
  for (const auto& l : m.layers) {
    append_le_doubles(buf, l.W.data(), static_cast<size_t>(l.W.size()));
    append_le_doubles(buf, l.b.data(), static_cast<size_t>(l.b.size()));
  }
  return sha256_hex(buf.data(), buf.size());
}

MlpModel load_model(const std::string& path) {
  const json j = load_json_file(path, "load_model");
  MlpModel m;
  if (!j.contains("widths") || !j.contains("layers"))
    throw std::invalid_argument("load_model: missing widths/layers");
  m.widths = j.at("widths").get<std::vector<int>>();
  if (m.widths.size() < 2) throw std::invalid_argument("load_model: need at least two widths");
  const auto& layers = j.at("layers");
  if (!layers.is_array() || layers.size() + 1 != m.widths.size())
    throw std::invalid_argument("load_model: layer count does not match widths");
  for (size_t li = 0; li < layers.size(); ++li) {
    const auto& lj = layers[li];
    const int in = m.widths[li], out = m.widths[li + 1];
    MlpLayer layer;
    layer.W.resize(out, in);
    const auto& wj = lj.at("w");
    if (!wj.is_array() || static_cast<int>(wj.size()) != out)
      throw std::invalid_argument("load_model: weight row count mismatch");
    for (int r = 0; r < out; ++r) {
      const Vector row = vector_from_json(wj[static_cast<size_t>(r)], "load_model weights");
      if (row.size() != in) throw std::invalid_argument("load_model: weight column mismatch");
      layer.W.row(r) = row.transpose();
    }
    layer.b = vector_from_json(lj.at("b"), "load_model bias");
    if (layer.b.size() != out) throw std::invalid_argument("load_model: bias shape mismatch");
    layer.relu_after = lj.value("relu", li + 2 < m.widths.size());
    require_finite(layer.W, "load_model weights");
    require_finite(layer.b, "load_model bias");
    m.layers.push_back(std::move(layer));
  }
  if (m.layers.back().relu_after)
    throw std::invalid_argument("load_model: final layer must stay linear");
  if (j.contains("meta")) m.seed = j["meta"].value("seed", std::uint64_t{0});
  m.digest = model_digest(m);
  return m;
}

void save_model(const MlpModel& m, const std::string& path) {
  json j;
  j["schema"] = "mlp.v1";
  j["widths"] = m.widths;
  json layers = json::array();
  for (const auto& l : m.layers) {
    json lj;
    json rows = json::array();
    for (int r = 0; r < l.W.rows(); ++r) rows.push_back(vector_to_json(l.W.row(r).transpose()));
    lj["w"] = rows;
    lj["b"] = vector_to_json(l.b);
    lj["relu"] = l.relu_after;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["meta"] = {{"seed", m.seed}, {"digest", model_digest(m)}};
  write_json_file(path, j);
}

MlpModel generate_model(std::uint64_t seed, const std::vector<int>& widths) {
  if (widths.size() < 2) throw std::invalid_argument("generate_model: need at least two widths");
  for (int w : widths)
    if (w <= 0) throw std::invalid_argument("generate_model: widths must be positive");
  MlpModel m;
  m.widths = widths;
  m.seed = seed;
  Rng rng(seed);
  for (size_t li = 0; li + 1 < widths.size(); ++li) {
    const int in = widths[li], out = widths[li + 1];
    const double a = std::sqrt(6.0 / (in + out));
    MlpLayer layer;
    layer.W.resize(out, in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.W(r, c) = rng.uniform(-a, a);
    layer.b.resize(out);
    for (int r = 0; r < out; ++r) layer.b[r] = rng.uniform(-a, a);
    layer.relu_after = li + 2 < widths.size();
    m.layers.push_back(std::move(layer));
  }
  m.digest = model_digest(m);
  return m;
}

double Scenario::tracking_weight(int t) const {
  if (t < 1 || t > horizon) throw std::out_of_range("tracking_weight: step outside horizon");
  if (!weights.empty()) return weights[static_cast<size_t>(t - 1)];
  return 1.0 + gamma * (t - 1);
}

void Scenario::validate() const {
  if (x0.size() == 0 || x0.size() != x_target.size())
    throw std::invalid_argument("scenario: state/target dimensions differ");
  if (p0.size() == 0) throw std::invalid_argument("scenario: empty effector");
  if (u_lower.size() != u_upper.size() || u_lower.size() == 0)
    throw std::invalid_argument("scenario: malformed action bounds");
  if (u_lower.size() != p0.size())
    throw std::invalid_argument("scenario: action and effector dimensions must match");
  if (x0.size() % p0.size() != 0)
    throw std::invalid_argument("scenario: state must be whole keypoints of workspace dimension");
  if (horizon < 1) throw std::invalid_argument("scenario: horizon must be at least 1");
  require_finite(x0, "scenario x0");
  require_finite(x_target, "scenario x_target");
  require_finite(p0, "scenario p0");
  require_finite(u_lower, "scenario u_lower");
  require_finite(u_upper, "scenario u_upper");
  for (int j = 0; j < u_lower.size(); ++j)
    if (u_lower[j] > u_upper[j]) throw std::invalid_argument("scenario: action bounds inverted");
  if (!weights.empty() && static_cast<int>(weights.size()) != horizon)
    throw std::invalid_argument("scenario: explicit weights must cover the horizon");
  if (axis_weights.size() != 0 && axis_weights.size() != x0.size())
    throw std::invalid_argument("scenario: axis weights must match the state dimension");
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw std::invalid_argument("scenario: penalty scale must be finite and nonnegative");
  for (const auto& o : obstacles) {
    if (o.center.size() != p0.size())
      throw std::invalid_argument("scenario: obstacle center must live in the workspace");
    if (!std::isfinite(o.size) || o.size < 0.0)
      throw std::invalid_argument("scenario: obstacle size must be finite and nonnegative");
  }
  if (state_lower.size() != state_upper.size())
    throw std::invalid_argument("scenario: state bounds must come in pairs");
  if (state_lower.size() != 0 && state_lower.size() != x0.size())
    throw std::invalid_argument("scenario: state bounds must match the state dimension");
}

const char* cost_form_name(CostForm f) {
  switch (f) {
    case CostForm::kTracking: return "tracking";
    case CostForm::kTrackingObstacles: return "tracking_obstacles";
    case CostForm::kPusherPenalty: return "pusher_penalty";
  }
  return "?";
}

CostForm cost_form_from(const std::string& s) {
  if (s == "tracking") return CostForm::kTracking;
  if (s == "tracking_obstacles") return CostForm::kTrackingObstacles;
  if (s == "pusher_penalty") return CostForm::kPusherPenalty;
  throw std::invalid_argument("scenario: unknown cost form '" + s + "'");
}

Scenario load_scenario(const std::string& path) {
  const json j = load_json_file(path, "load_scenario");
  Scenario s;
  s.x0 = vector_from_json(j.at("x0"), "scenario x0");
  s.x_target = vector_from_json(j.at("x_target"), "scenario x_target");
  s.p0 = vector_from_json(j.at("p0"), "scenario p0");
  s.horizon = j.at("horizon").get<int>();
  s.u_lower = vector_from_json(j.at("u_lower"), "scenario u_lower");
  s.u_upper = vector_from_json(j.at("u_upper"), "scenario u_upper");
  if (j.contains("obstacles")) {
    for (const auto& oj : j["obstacles"]) {
      Obstacle o;
      o.center = vector_from_json(oj.at("center"), "obstacle center");
      o.size = oj.at("size").get<double>();
      s.obstacles.push_back(std::move(o));
    }
  }
  s.lambda = j.value("lambda", 100.0);
  s.gamma = j.value("gamma", 0.1);
  if (j.contains("weights")) s.weights = j["weights"].get<std::vector<double>>();
  if (j.contains("axis_weights"))
    s.axis_weights = vector_from_json(j["axis_weights"], "scenario axis_weights");
  s.cost_form = cost_form_from(j.value("cost_form", std::string("tracking")));
  const std::string fm = j.value("feature_mode", std::string("relative"));
  if (fm == "relative") {
    s.feature_mode = FeatureMode::kRelative;
  } else if (fm == "absolute") {
    s.feature_mode = FeatureMode::kAbsolute;
  } else {
    throw std::invalid_argument("scenario: unknown feature mode '" + fm + "'");
  }
  if (j.contains("state_lower"))
    s.state_lower = vector_from_json(j["state_lower"], "scenario state_lower");
  if (j.contains("state_upper"))
    s.state_upper = vector_from_json(j["state_upper"], "scenario state_upper");
  s.validate();
  return s;
}

namespace {

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema"] = "scenario.v1";
  j["x0"] = vector_to_json(s.x0);
  j["x_target"] = vector_to_json(s.x_target);
  j["p0"] = vector_to_json(s.p0);
  j["horizon"] = s.horizon;
  j["u_lower"] = vector_to_json(s.u_lower);
  j["u_upper"] = vector_to_json(s.u_upper);
  json obs = json::array();
  for (const auto& o : s.obstacles)
    obs.push_back({{"center", vector_to_json(o.center)}, {"size", o.size}});
  j["obstacles"] = std::move(obs);
  j["lambda"] = s.lambda;
  j["gamma"] = s.gamma;
  if (!s.weights.empty()) j["weights"] = s.weights;
  if (s.axis_weights.size() != 0) j["axis_weights"] = vector_to_json(s.axis_weights);
  j["cost_form"] = cost_form_name(s.cost_form);
  j["feature_mode"] = s.feature_mode == FeatureMode::kRelative ? "relative" : "absolute";
  if (s.state_lower.size() != 0) {
    j["state_lower"] = vector_to_json(s.state_lower);
    j["state_upper"] = vector_to_json(s.state_upper);
  }
  return j;
}

}  // namespace

void save_scenario(const Scenario& s, const std::string& path) {
  s.validate();
  write_json_file(path, scenario_to_json(s));
}

std::string scenario_digest(const Scenario& s) { return sha256_hex(scenario_to_json(s).dump()); }

Matrix make_features(const Scenario& s, const Matrix& states, const Matrix& effectors,
                     const Matrix& actions) {
  const int rows = static_cast<int>(states.rows());
  if (effectors.rows() != rows || actions.rows() != rows)
    throw std::invalid_argument("make_features: batch sizes differ");
  const int ks = static_cast<int>(states.cols());
  const int kd = static_cast<int>(effectors.cols());
  Matrix f(rows, ks + actions.cols());
  f.leftCols(ks) = states;
  if (s.feature_mode == FeatureMode::kRelative) {
    for (int k = 0; k < ks / kd; ++k) f.middleCols(k * kd, kd) -= effectors;
  }
  f.rightCols(actions.cols()) = actions;
  return f;
}

BuiltObjective build_objective(const MlpModel& model, const Scenario& s) {
  s.validate();
  const int ks = s.state_dim();
  const int ka = s.action_dim();
  const int kd = s.workspace_dim();
  const int nk = s.keypoints();
  const int H = s.horizon;
  if (model.input_dim() != ks + ka)
    throw std::invalid_argument("build_objective: model input must take state plus action");
  if (model.output_dim() != ks)
    throw std::invalid_argument("build_objective: model output must be the state");

  CompGraph g;
  GraphMeta meta;
  const int U = g.add_input(ka * H);
  int x_prev = g.add_constant(s.x0);
  int p_prev = g.add_constant(s.p0);

  // State minus the effector tiled over keypoints, as one linear map applied
  // to the effector (subtracted from the state by a Sum).
  Matrix tile = Matrix::Zero(ks, kd);
  for (int k = 0; k < nk; ++k) tile.block(k * kd, 0, kd, kd) = -Matrix::Identity(kd, kd);

  const Vector axis = s.axis_weights.size() != 0 ? s.axis_weights : Vector::Ones(ks);
  std::vector<int> cost_terms;

  for (int t = 1; t <= H; ++t) {
    const int u_t = g.add_slice(U, (t - 1) * ka, ka);
    int feat;
    if (s.feature_mode == FeatureMode::kRelative) {
      const int neg_tiled = g.add_linear(p_prev, tile, Vector::Zero(ks));
      const int rel = g.add_sum({x_prev, neg_tiled});
      feat = g.add_concat({rel, u_t});
    } else {
      feat = g.add_concat({x_prev, u_t});
    }
    int h = feat;
    for (const auto& layer : model.layers) {
      h = g.add_linear(h, layer.W, layer.b);
      if (layer.relu_after) {
        h = g.add_relu(h);
        meta.final_step_last_relu = h;  // last write wins: the final step's last ReLU
      }
    }
    const int x_t = h;
    const int p_t = g.add_sum({p_prev, u_t});
    meta.step_states.push_back(x_t);

    cost_terms.push_back(
        g.add_squared_distance(x_t, s.x_target, s.tracking_weight(t) * axis));
    if (s.cost_form != CostForm::kTracking) {
      for (const auto& o : s.obstacles) {
        if (s.cost_form == CostForm::kTrackingObstacles) {
          for (int k = 0; k < nk; ++k) {
            const int kp = g.add_slice(x_t, k * kd, kd);
            cost_terms.push_back(g.add_penalty_hinge(kp, o.center, o.size, s.lambda));
          }
        }
        cost_terms.push_back(g.add_penalty_hinge(p_t, o.center, o.size, s.lambda));
      }
    }
    x_prev = x_t;
    p_prev = p_t;
  }

  g.set_output(g.add_sum(cost_terms));
  g.finalize();

  BuiltObjective built;
  built.objective = std::make_shared<GraphObjective>(std::move(g), std::move(meta));
  Vector lo(ka * H), hi(ka * H);
  for (int t = 0; t < H; ++t) {
    lo.segment(t * ka, ka) = s.u_lower;
    hi.segment(t * ka, ka) = s.u_upper;
  }
  built.box = BoxDomain(std::move(lo), std::move(hi));
  return built;
}

std::shared_ptr<GraphObjective> build_network_objective(const MlpModel& model) {
  if (model.output_dim() != 1)
    throw std::invalid_argument("build_network_objective: network output must be scalar");
  CompGraph g;
  GraphMeta meta;
  int h = g.add_input(model.input_dim());
  for (const auto& layer : model.layers) {
    h = g.add_linear(h, layer.W, layer.b);
    if (layer.relu_after) {
      h = g.add_relu(h);
      meta.final_step_last_relu = h;
    }
  }
  g.set_output(h);
  g.finalize();
  return std::make_shared<GraphObjective>(std::move(g), std::move(meta));
}

std::shared_ptr<SyntheticObjective> build_synthetic(int dim) {
  return std::make_shared<SyntheticObjective>(dim);
}

}  // namespace babplan
