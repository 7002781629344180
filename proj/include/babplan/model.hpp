#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "babplan/objective.hpp"
#include "babplan/types.hpp"

namespace babplan {

enum class FeatureMode {
  kRelative,  // features = concat(state - tiled effector, action)
  kAbsolute,  // features = concat(state, action)
};

struct MlpLayer {
  Matrix W;  // (out x in)
  Vector b;
  bool relu_after = false;
};

// Fully connected stack: Linear [+ ReLU] ... Linear. The stored digest is
// SHA-256 over the canonical little-endian byte stream of all weights then
// biases, layer by layer.
struct MlpModel {
  std::vector<MlpLayer> layers;
  std::vector<int> widths;  // [in, hidden..., out]
  std::uint64_t seed = 0;   // generator seed when synthesized, else 0
  std::string digest;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::int64_t parameter_count() const;

  // Batched forward through the stack (row per sample).
  Matrix forward(const Matrix& batch) const;
};

std::string model_digest(const MlpModel& m);

MlpModel load_model(const std::string& path);
void save_model(const MlpModel& m, const std::string& path);

// Deterministic synthesis: every weight and bias is uniform in [-a, a] with
// a = sqrt(6 / (fan_in + fan_out)), drawn in layer order from the seed.
// Hidden layers get ReLU, the final layer stays linear.
MlpModel generate_model(std::uint64_t seed, const std::vector<int>& widths);

struct Obstacle {
  Vector center;
  double size = 0.0;
};

enum class CostForm { kTracking, kTrackingObstacles, kPusherPenalty };

const char* cost_form_name(CostForm f);
CostForm cost_form_from(const std::string& s);

// Planning instance. State is a flat keypoint vector; the effector moves by
// the action each step (p_t = p_{t-1} + u_t), so the effector and action
// dimensions match the workspace dimension.
struct Scenario {
  Vector x0;
  Vector x_target;
  Vector p0;
  int horizon = 1;
  Vector u_lower, u_upper;  // per-step action bounds
  std::vector<Obstacle> obstacles;
  double lambda = 100.0;        // penalty scale
  double gamma = 0.1;           // tracking weight growth: w_t = 1 + gamma * (t - 1)
  std::vector<double> weights;  // optional explicit w_t, overrides gamma
  Vector axis_weights;          // optional per-axis tracking weights
  CostForm cost_form = CostForm::kTracking;
  FeatureMode feature_mode = FeatureMode::kRelative;
  // Optional sampling region for graph-planner baselines; when absent it
  // defaults to the bounding box of x0 and x_target padded by the reachable
  // action range.
  Vector state_lower, state_upper;

  int state_dim() const { return static_cast<int>(x0.size()); }
  int action_dim() const { return static_cast<int>(u_lower.size()); }
  int workspace_dim() const { return static_cast<int>(p0.size()); }
  int keypoints() const { return state_dim() / workspace_dim(); }
  double tracking_weight(int t) const;  // t in [1, horizon]
  void validate() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);
std::string scenario_digest(const Scenario& s);

// Model features for one transition, following the model's input convention:
// keypoints relative to the current effector (or absolute), concatenated with
// the action.
Matrix make_features(const Scenario& s, const Matrix& states, const Matrix& effectors,
                     const Matrix& actions);

struct BuiltObjective {
  std::shared_ptr<GraphObjective> objective;
  BoxDomain box;  // per-step bounds tiled over the horizon
};

// Unrolls the dynamics over the horizon into a single graph whose input is
// the flattened action sequence and whose output is the summed cost.
BuiltObjective build_objective(const MlpModel& model, const Scenario& s);

// Wraps a scalar-output network directly (no rollout, no cost terms); the
// graph input is the network input.
std::shared_ptr<GraphObjective> build_network_objective(const MlpModel& model);

std::shared_ptr<SyntheticObjective> build_synthetic(int dim);

}  // namespace babplan
