#include "babplan/objective.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace babplan {

Matrix Objective::gradient(const Matrix&) const {
  throw std::logic_error("Objective: gradient not available");
}

GraphObjective::GraphObjective(CompGraph graph, GraphMeta meta)
    : graph_(std::move(graph)), meta_(std::move(meta)) {
  if (!graph_.finalized()) graph_.finalize();
  if (meta_.relu_nodes.empty()) {
    for (int id = 0; id < graph_.size(); ++id)
      if (graph_.node(id).kind == NodeKind::kRelu) meta_.relu_nodes.push_back(id);
  }
  if (meta_.hinges.empty()) {
    for (int id = 0; id < graph_.size(); ++id)
      if (graph_.node(id).kind == NodeKind::kPenaltyHinge) meta_.hinges.push_back(id);
  }
  if (meta_.final_step_last_relu < 0 && !meta_.relu_nodes.empty())
    meta_.final_step_last_relu = meta_.relu_nodes.back();
  rebuild_sets();
}

int GraphObjective::dim() const { return graph_.input_dim(); }

Vector GraphObjective::evaluate(const Matrix& batch, WatchStats* stats) const {
  return babplan::evaluate(graph_, batch, stats != nullptr ? &watch_set_ : nullptr, stats);
}

Matrix GraphObjective::gradient(const Matrix& batch) const {
  return babplan::gradient(graph_, batch);
}

void GraphObjective::set_stop_rule(StopRule rule, std::vector<int> custom) {
  rule_ = rule;
  custom_stop_ = std::move(custom);
  rebuild_sets();
}

void GraphObjective::rebuild_sets() {
  std::set<int> stop;
  switch (rule_) {
    case StopRule::kLastRelu:
      if (meta_.final_step_last_relu >= 0) stop.insert(meta_.final_step_last_relu);
      break;
    case StopRule::kEveryStepOutput:
      stop.insert(meta_.step_states.begin(), meta_.step_states.end());
      break;
    case StopRule::kCustom:
      for (int id : custom_stop_) {
        if (id < 0 || id >= graph_.size())
          throw std::invalid_argument("stop set: unknown node id");
        stop.insert(id);
      }
      break;
  }
  stop.insert(meta_.hinges.begin(), meta_.hinges.end());
  stop_set_.assign(stop.begin(), stop.end());

  // Everything a bound propagation may need sample extrema for.
  std::set<int> watch(stop.begin(), stop.end());
  for (int id = 0; id < graph_.size(); ++id) {
    const GraphNode& n = graph_.node(id);
    if (n.kind == NodeKind::kRelu || n.kind == NodeKind::kSquaredDistance ||
        n.kind == NodeKind::kPenaltyHinge) {
      watch.insert(n.args[0]);
      watch.insert(id);
    }
  }
  watch_set_.assign(watch.begin(), watch.end());
}

SyntheticObjective::SyntheticObjective(int dim) : dim_(dim) {
  if (dim <= 0) throw std::invalid_argument("SyntheticObjective: dimension must be positive");
}

Vector SyntheticObjective::evaluate(const Matrix& batch, WatchStats*) const {
  if (batch.cols() != dim_)
    throw std::invalid_argument("SyntheticObjective: batch width mismatch");
  require_finite(batch, "synthetic batch");
  const int rows = static_cast<int>(batch.rows());
  Vector out(rows);
  for (int i = 0; i < rows; ++i) {
    const double* x = batch.row(i).data();
    double acc = 0.0;
    for (int j = 0; j < dim_; ++j) acc += 5.0 * x[j] * x[j] + std::cos(50.0 * x[j]);
    out[i] = acc;
  }
  return out;
}

Matrix SyntheticObjective::gradient(const Matrix& batch) const {
  if (batch.cols() != dim_)
    throw std::invalid_argument("SyntheticObjective: batch width mismatch");
  Matrix g(batch.rows(), dim_);
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < dim_; ++j)
      g(i, j) = 10.0 * batch(i, j) - 50.0 * std::sin(50.0 * batch(i, j));
  return g;
}

BoxDomain SyntheticObjective::domain() const {
  return BoxDomain(Vector::Constant(dim_, -1.0), Vector::Constant(dim_, 1.0));
}

}  // namespace babplan
