#include "babplan/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "babplan/rng.hpp"

namespace babplan {

double collision_penalty(const Scenario& s, const Eigen::Ref<const Vector>& state,
                         const Eigen::Ref<const Vector>& effector) {
  if (s.cost_form == CostForm::kTracking || s.obstacles.empty()) return 0.0;
  const int kd = s.workspace_dim();
  auto hinge = [&](const Eigen::Ref<const Vector>& pos, const Obstacle& o) {
    return s.lambda * std::max(0.0, o.size - (pos - o.center).norm());
  };
  double total = 0.0;
  for (const auto& o : s.obstacles) {
    if (s.cost_form == CostForm::kTrackingObstacles)
      for (int k = 0; k < s.keypoints(); ++k) total += hinge(state.segment(k * kd, kd), o);
    total += hinge(effector, o);
  }
  return total;
}

BoxDomain state_sampling_box(const Scenario& s) {
  s.validate();
  if (s.state_lower.size() != 0) return BoxDomain(s.state_lower, s.state_upper);
  const int ks = s.state_dim();
  const int kd = s.workspace_dim();
  Vector lo(ks), hi(ks);
  for (int j = 0; j < ks; ++j) {
    const int a = j % kd;
    const double pad =
        s.horizon * std::max(std::abs(s.u_lower[a]), std::abs(s.u_upper[a]));
    lo[j] = std::min(s.x0[j], s.x_target[j]) - pad;
    hi[j] = std::max(s.x0[j], s.x_target[j]) + pad;
  }
  return BoxDomain(std::move(lo), std::move(hi));
}

namespace {

void check_model(const MlpModel& model, const Scenario& s) {
  if (model.input_dim() != s.state_dim() + s.action_dim() || model.output_dim() != s.state_dim())
    throw std::invalid_argument("baseline: model dimensions do not fit the scenario");
}

// Workspace region spanned by the state sampling box: per axis, the extremes
// over all keypoint copies of that axis.
BoxDomain effector_sampling_box(const Scenario& s, const BoxDomain& sbox) {
  const int kd = s.workspace_dim();
  Vector lo(kd), hi(kd);
  for (int a = 0; a < kd; ++a) {
    double l = s.p0[a], h = s.p0[a];
    for (int k = 0; k < s.keypoints(); ++k) {
      l = std::min(l, sbox.lower()[k * kd + a]);
      h = std::max(h, sbox.upper()[k * kd + a]);
    }
    lo[a] = l;
    hi[a] = h;
  }
  return BoxDomain(std::move(lo), std::move(hi));
}

bool action_in_bounds(const Scenario& s, const Eigen::Ref<const Vector>& u) {
  for (int a = 0; a < u.size(); ++a)
    if (u[a] < s.u_lower[a] || u[a] > s.u_upper[a]) return false;
  return true;
}

// A* over the roadmap plus a virtual start node with explicit out-links.
// Edge weights and the heuristic are Euclidean state distances, so the
// heuristic is admissible and the returned cost is the graph optimum. The
// chain excludes the virtual start; empty when the goal is unreachable.
struct GraphPath {
  std::vector<int> chain;
  double cost = std::numeric_limits<double>::infinity();
};

GraphPath astar(const Roadmap& map, const Vector& start_state,
                const std::vector<int>& start_links, int goal, const std::vector<char>& valid) {
  const int n = static_cast<int>(map.states.rows());
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<size_t>(n) + 1, kInf);
  std::vector<int> from(static_cast<size_t>(n) + 1, -2);
  std::vector<char> closed(static_cast<size_t>(n) + 1, 0);
  auto state_of = [&](int i) {
    return i == n ? start_state : Vector(map.states.row(i).transpose());
  };
  auto h = [&](int i) { return (state_of(i) - map.states.row(goal).transpose()).norm(); };
  using Entry = std::pair<double, int>;  // (g + h, node)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
  g[static_cast<size_t>(n)] = 0.0;
  from[static_cast<size_t>(n)] = -1;
  open.push({h(n), n});
  while (!open.empty()) {
    const auto [f, i] = open.top();
    open.pop();
    if (closed[static_cast<size_t>(i)]) continue;
    closed[static_cast<size_t>(i)] = 1;
    if (i == goal) break;
    const Vector xi = state_of(i);
    auto relax = [&](int j) {
      if (closed[static_cast<size_t>(j)] || !valid[static_cast<size_t>(j)]) return;
      const double c = (map.states.row(j).transpose() - xi).norm();
      if (g[static_cast<size_t>(i)] + c < g[static_cast<size_t>(j)]) {
        g[static_cast<size_t>(j)] = g[static_cast<size_t>(i)] + c;
        from[static_cast<size_t>(j)] = i;
        open.push({g[static_cast<size_t>(j)] + h(j), j});
      }
    };
    const std::vector<int>& links = i == n ? start_links : map.adjacency[static_cast<size_t>(i)];
    for (int j : links) relax(j);
  }
  GraphPath out;
  if (!closed[static_cast<size_t>(goal)]) return out;
  out.cost = g[static_cast<size_t>(goal)];
  for (int i = goal; i != n; i = from[static_cast<size_t>(i)]) out.chain.push_back(i);
  std::reverse(out.chain.begin(), out.chain.end());
  return out;
}

}  // namespace

PlanPath rrt_plan(const MlpModel& model, const Scenario& s, const RrtConfig& cfg) {
  s.validate();
  check_model(model, s);
  if (cfg.max_nodes < 1 || cfg.candidate_actions < 1)
    throw std::invalid_argument("rrt: node and candidate budgets must be positive");
  const int ks = s.state_dim();
  const int ka = s.action_dim();
  Rng rng(cfg.seed);
  const BoxDomain sbox = state_sampling_box(s);

  std::vector<Vector> states{s.x0}, effectors{s.p0};
  std::vector<Vector> step_actions{Vector()};
  std::vector<int> parents{-1};

  PlanPath path;
  auto goal_dist = [&](const Vector& x) { return (x - s.x_target).norm(); };
  int best_node = 0;
  double best_dist = goal_dist(s.x0);

  auto finish = [&](int node, bool success) {
    std::vector<int> chain;
    for (int i = node; i >= 0; i = parents[static_cast<size_t>(i)])
      chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    for (size_t i = 0; i < chain.size(); ++i) {
      path.states.push_back(states[static_cast<size_t>(chain[i])]);
      path.effectors.push_back(effectors[static_cast<size_t>(chain[i])]);
      if (i > 0) path.actions.push_back(step_actions[static_cast<size_t>(chain[i])]);
    }
    path.success = success;
    path.goal_distance = goal_dist(states[static_cast<size_t>(node)]);
    return path;
  };

  if (best_dist <= cfg.goal_tolerance) return finish(0, true);

  while (static_cast<int>(states.size()) < cfg.max_nodes) {
    Vector target;
    if (rng.uniform() < cfg.goal_bias) {
      target = s.x_target;
    } else {
      target.resize(ks);
      for (int j = 0; j < ks; ++j) target[j] = rng.uniform(sbox.lower()[j], sbox.upper()[j]);
    }

    int near = 0;
    double nd = (states[0] - target).norm();
    for (size_t i = 1; i < states.size(); ++i) {
      const double d = (states[i] - target).norm();
      if (d < nd) {
        nd = d;
        near = static_cast<int>(i);
      }
    }

    Matrix acts(cfg.candidate_actions, ka);
    for (int i = 0; i < cfg.candidate_actions; ++i)
      for (int a = 0; a < ka; ++a) acts(i, a) = rng.uniform(s.u_lower[a], s.u_upper[a]);
    const Matrix st = states[static_cast<size_t>(near)].transpose().replicate(acts.rows(), 1);
    const Matrix ef = effectors[static_cast<size_t>(near)].transpose().replicate(acts.rows(), 1);
    const Matrix next = model.forward(make_features(s, st, ef, acts));
    path.model_calls += acts.rows();

    int pick = -1;
    double pd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < next.rows(); ++i) {
      const Vector np = effectors[static_cast<size_t>(near)] + acts.row(i).transpose();
      if (collision_penalty(s, next.row(i).transpose(), np) > 0.0) continue;
      const double d = (next.row(i).transpose() - target).norm();
      if (d < pd) {
        pd = d;
        pick = i;
      }
    }
    if (pick < 0) continue;

    states.push_back(next.row(pick).transpose());
    effectors.push_back(effectors[static_cast<size_t>(near)] + acts.row(pick).transpose());
    step_actions.push_back(acts.row(pick).transpose());
    parents.push_back(near);
    const int node = static_cast<int>(states.size()) - 1;

    const double gd = goal_dist(states.back());
    if (gd < best_dist) {
      best_dist = gd;
      best_node = node;
    }
    if (gd <= cfg.goal_tolerance) return finish(node, true);
  }
  return finish(best_node, false);
}

Roadmap prm_build(const MlpModel& model, const Scenario& s, const PrmConfig& cfg) {
  s.validate();
  check_model(model, s);
  if (cfg.nodes < 1) throw std::invalid_argument("prm: node budget must be positive");
  const int ks = s.state_dim();
  const int kd = s.workspace_dim();
  Rng rng(cfg.seed);
  const BoxDomain sbox = state_sampling_box(s);
  const BoxDomain ebox = effector_sampling_box(s, sbox);

  Roadmap map;
  map.delta = cfg.delta;
  map.states.resize(cfg.nodes, ks);
  map.effectors.resize(cfg.nodes, kd);
  for (int i = 0; i < cfg.nodes; ++i) {
    for (int j = 0; j < ks; ++j) map.states(i, j) = rng.uniform(sbox.lower()[j], sbox.upper()[j]);
    for (int a = 0; a < kd; ++a)
      map.effectors(i, a) = rng.uniform(ebox.lower()[a], ebox.upper()[a]);
  }

  map.adjacency.assign(static_cast<size_t>(cfg.nodes), {});
  for (int i = 0; i < cfg.nodes; ++i) {
    Matrix acts = map.effectors.rowwise() - map.effectors.row(i);
    const Matrix st = map.states.row(i).replicate(cfg.nodes, 1);
    const Matrix ef = map.effectors.row(i).replicate(cfg.nodes, 1);
    const Matrix next = model.forward(make_features(s, st, ef, acts));
    for (int j = 0; j < cfg.nodes; ++j) {
      if (j == i) continue;
      if (!action_in_bounds(s, acts.row(j).transpose())) continue;
      if ((next.row(j) - map.states.row(j)).norm() < cfg.delta)
        map.adjacency[static_cast<size_t>(i)].push_back(j);
    }
  }
  return map;
}

PlanPath prm_plan(const MlpModel& model, const Scenario& s, const Roadmap& map) {
  s.validate();
  check_model(model, s);
  const int n = static_cast<int>(map.states.rows());
  PlanPath path;
  path.states.push_back(s.x0);
  path.effectors.push_back(s.p0);
  if (n == 0) return path;

  std::vector<char> valid(static_cast<size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    valid[static_cast<size_t>(i)] =
        collision_penalty(s, map.states.row(i).transpose(), map.effectors.row(i).transpose()) ==
        0.0;

  int goal = -1;
  double gd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (!valid[static_cast<size_t>(i)]) continue;
    const double d = (map.states.row(i).transpose() - s.x_target).norm();
    if (d < gd) {
      gd = d;
      goal = i;
    }
  }
  if (goal < 0) return path;

  // Start connections share the roadmap's edge rule, one batched model pass.
  Matrix acts = map.effectors.rowwise() - s.p0.transpose();
  const Matrix st = s.x0.transpose().replicate(n, 1);
  const Matrix ef = s.p0.transpose().replicate(n, 1);
  const Matrix next = model.forward(make_features(s, st, ef, acts));
  path.model_calls += n;
  std::vector<int> start_links;
  for (int j = 0; j < n; ++j)
    if (valid[static_cast<size_t>(j)] && action_in_bounds(s, acts.row(j).transpose()) &&
        (next.row(j) - map.states.row(j)).norm() < map.delta)
      start_links.push_back(j);

  const GraphPath found = astar(map, s.x0, start_links, goal, valid);
  if (found.chain.empty()) return path;
  const std::vector<int>& chain = found.chain;

  // The stored path is the realized rollout of the planned actions, so every
  // returned edge replays exactly; the nominal nodes only steer the plan. A
  // realized pose that collides invalidates the plan.
  Vector x = s.x0, p = s.p0;
  bool clear = collision_penalty(s, x, p) == 0.0;
  for (int i : chain) {
    const Vector u = map.effectors.row(i).transpose() - p;
    x = model.forward(make_features(s, x.transpose(), p.transpose(), u.transpose()))
            .row(0)
            .transpose();
    p += u;
    path.model_calls += 1;
    clear = clear && collision_penalty(s, x, p) == 0.0;
    path.states.push_back(x);
    path.effectors.push_back(p);
    path.actions.push_back(u);
  }
  path.success = clear;
  path.goal_distance = (x - s.x_target).norm();
  return path;
}

std::vector<int> roadmap_path(const Roadmap& map, int start, int goal, double* cost) {
  const int n = static_cast<int>(map.states.rows());
  if (start < 0 || start >= n || goal < 0 || goal >= n)
    throw std::invalid_argument("roadmap_path: node index out of range");
  if (start == goal) {
    if (cost != nullptr) *cost = 0.0;
    return {start};
  }
  const std::vector<char> valid(static_cast<size_t>(n), 1);
  const GraphPath found = astar(map, map.states.row(start).transpose(),
                                map.adjacency[static_cast<size_t>(start)], goal, valid);
  if (cost != nullptr) *cost = found.cost;
  if (found.chain.empty()) return {};
  std::vector<int> chain{start};
  chain.insert(chain.end(), found.chain.begin(), found.chain.end());
  return chain;
}

double replay_error(const MlpModel& model, const Scenario& s, const PlanPath& path) {
  if (path.states.size() < 2 || path.actions.size() + 1 != path.states.size()) return 0.0;
  check_model(model, s);
  Vector x = path.states.front();
  Vector p = path.effectors.front();
  double err = 0.0;
  for (size_t t = 0; t < path.actions.size(); ++t) {
    const Matrix feats =
        make_features(s, x.transpose(), p.transpose(), path.actions[t].transpose());
    x = model.forward(feats).row(0).transpose();
    p += path.actions[t];
    err = std::max(err, (x - path.states[t + 1]).cwiseAbs().maxCoeff());
    err = std::max(err, (p - path.effectors[t + 1]).cwiseAbs().maxCoeff());
  }
  return err;
}

}  // namespace babplan
