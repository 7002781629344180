#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "babplan/model.hpp"
#include "babplan/types.hpp"

namespace babplan {

// Obstacle penalty of a (state, effector) pose under the scenario's cost
// form; a pose collides when this is strictly positive.
double collision_penalty(const Scenario& s, const Eigen::Ref<const Vector>& state,
                         const Eigen::Ref<const Vector>& effector);

// Sampling region for tree/roadmap construction (explicit scenario bounds or
// the padded default documented on Scenario).
BoxDomain state_sampling_box(const Scenario& s);

struct PlanPath {
  bool success = false;
  std::vector<Vector> states;     // states[0] = x0
  std::vector<Vector> effectors;  // aligned with states
  std::vector<Vector> actions;    // actions[i] moves states[i] -> states[i+1]
  double goal_distance = std::numeric_limits<double>::infinity();
  std::int64_t model_calls = 0;
};

struct RrtConfig {
  int max_nodes = 2000;
  int candidate_actions = 1000;  // sampled per extension
  double goal_bias = 0.5;
  double goal_tolerance = 0.05;
  std::uint64_t seed = 0;
};

// Kinodynamic tree search: sample a target (goal-biased), find the nearest
// tree node by state distance, push `candidate_actions` random actions
// through the model and keep the collision-free candidate closest to the
// target. Succeeds when a new node lands within tolerance of the goal.
PlanPath rrt_plan(const MlpModel& model, const Scenario& s, const RrtConfig& cfg);

struct PrmConfig {
  int nodes = 200;
  double delta = 0.05;  // edge admissibility and goal tolerance
  std::uint64_t seed = 0;
};

struct Roadmap {
  Matrix states;     // one node pose per row
  Matrix effectors;
  std::vector<std::vector<int>> adjacency;  // directed: i -> j
  double delta = 0.0;
};

// Samples (state, effector) nodes and connects i -> j whenever stepping from
// node i with action p_j - p_i lands within delta of x_j.
Roadmap prm_build(const MlpModel& model, const Scenario& s, const PrmConfig& cfg);

// Connects the scenario start into the roadmap, drops colliding nodes and
// edges, and runs A* (Euclidean state-distance heuristic and edge costs)
// toward the node nearest the goal.
PlanPath prm_plan(const MlpModel& model, const Scenario& s, const Roadmap& map);

// Shortest node chain between two roadmap nodes under the same A*; the
// heuristic is admissible, so `cost` is the true graph shortest distance.
// Empty when unreachable.
std::vector<int> roadmap_path(const Roadmap& map, int start, int goal, double* cost = nullptr);

// Largest state deviation when re-rolling the path's actions through the
// model from its start; 0 for an empty path.
double replay_error(const MlpModel& model, const Scenario& s, const PlanPath& path);

}  // namespace babplan
