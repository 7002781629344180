#pragma once

#include <memory>
#include <vector>

#include "babplan/graph.hpp"
#include "babplan/types.hpp"

namespace babplan {

// Batched objective over a box domain. Searchers only need evaluation (plus
// gradients where available); bounders downcast to reach graph structure or
// the closed-form synthetic expression.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual int dim() const = 0;

  // One objective value per row. When `stats` is given, implementations that
  // expose internal nodes record per-node output extrema for later empirical
  // bounding; others ignore it.
  virtual Vector evaluate(const Matrix& batch, WatchStats* stats = nullptr) const = 0;

  virtual bool has_gradient() const { return false; }
  virtual Matrix gradient(const Matrix& batch) const;
};

// Structural annotations produced by the objective builder; bounders use them
// to place early stops and locate relaxation frontiers.
struct GraphMeta {
  std::vector<int> step_states;     // predicted state node per rollout step
  std::vector<int> hinges;          // every penalty-hinge node
  int final_step_last_relu = -1;    // last ReLU inside the final rollout step
  std::vector<int> relu_nodes;
};

enum class StopRule { kLastRelu, kEveryStepOutput, kCustom };

class GraphObjective : public Objective {
 public:
  GraphObjective(CompGraph graph, GraphMeta meta = {});

  int dim() const override;
  Vector evaluate(const Matrix& batch, WatchStats* stats = nullptr) const override;
  bool has_gradient() const override { return true; }
  Matrix gradient(const Matrix& batch) const override;

  const CompGraph& graph() const { return graph_; }
  const GraphMeta& meta() const { return meta_; }

  void set_stop_rule(StopRule rule, std::vector<int> custom = {});
  // Resolved early-stop set under the current rule. Hinge nodes are always
  // members: they are never linearly relaxed, only enclosed.
  const std::vector<int>& stop_set() const { return stop_set_; }

  // Nodes whose output extrema must be recorded during search for empirical
  // bounding: ReLU/quadratic/hinge relaxation inputs plus the stop set.
  const std::vector<int>& watch_set() const { return watch_set_; }

 private:
  void rebuild_sets();

  CompGraph graph_;
  GraphMeta meta_;
  StopRule rule_ = StopRule::kLastRelu;
  std::vector<int> custom_stop_;
  std::vector<int> stop_set_;
  std::vector<int> watch_set_;
};

// f(u) = sum_i 5 u_i^2 + cos(50 u_i) on [-1, 1]^d. Separable with 16 local
// minima per coordinate, two of them global; the exact per-interval bound
// lives with the planner's bounders.
class SyntheticObjective : public Objective {
 public:
  // Minimum of the 1-d term and its positive minimizer (the negative one is
  // symmetric), frozen from a high-resolution grid plus derivative bisection.
  static constexpr double kUnitMinimum = -0.980339434486584;
  static constexpr double kUnitArgmin = 0.06258152045359563;

  explicit SyntheticObjective(int dim);

  int dim() const override { return dim_; }
  Vector evaluate(const Matrix& batch, WatchStats* stats = nullptr) const override;
  bool has_gradient() const override { return true; }
  Matrix gradient(const Matrix& batch) const override;

  BoxDomain domain() const;

 private:
  int dim_;
};

}  // namespace babplan
