#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "babplan/types.hpp"

namespace babplan {

enum class NodeKind {
  kInput,
  kConstant,
  kLinear,
  kRelu,
  kSum,
  kScalarAffine,
  kSquaredDistance,
  kPenaltyHinge,
  kConcat,
  kSlice,
};

const char* node_kind_name(NodeKind kind);

struct GraphNode {
  NodeKind kind;
  std::vector<int> args;
  int dim = 0;  // output dimension

  Matrix W;  // kLinear: y = W x + b, W is (dim x in_dim)
  Vector b;

  double scale = 1.0;  // kScalarAffine: y = scale * x + offset, elementwise
  double offset = 0.0;

  Vector target;  // kSquaredDistance: y = sum_j weight_j (x_j - target_j)^2
  Vector weight;  // nonnegative per-axis weights

  Vector center;         // kPenaltyHinge: y = penalty * relu(radius - |x - center|_2)
  double radius = 0.0;
  double penalty = 1.0;

  int begin = 0;  // kSlice: y = x[begin : begin + dim]

  Vector value;  // kConstant
};

// Single-input, single-scalar-output DAG over the closed node set above.
// Arguments must refer to already-added nodes, so node ids are a topological
// order by construction.
class CompGraph {
 public:
  int add_input(int dim);
  int add_constant(Vector value);
  int add_linear(int arg, Matrix W, Vector b);
  int add_relu(int arg);
  int add_sum(std::vector<int> args);
  int add_scalar_affine(int arg, double scale, double offset);
  int add_squared_distance(int arg, Vector target, Vector weight);
  int add_penalty_hinge(int arg, Vector center, double radius, double penalty);
  int add_concat(std::vector<int> args);
  int add_slice(int arg, int begin, int len);

  void set_output(int node);

  // Validates single-input/scalar-output structure and freezes consumer
  // lists. Must be called before evaluation or bounding.
  void finalize();
  bool finalized() const { return finalized_; }

  int size() const { return static_cast<int>(nodes_.size()); }
  const GraphNode& node(int id) const { return nodes_.at(static_cast<size_t>(id)); }
  int input() const { return input_; }
  int output() const { return output_; }
  int input_dim() const;
  const std::vector<int>& consumers(int id) const { return consumers_.at(static_cast<size_t>(id)); }

 private:
  int add_node(GraphNode node);
  void check_arg(int arg, const char* ctx) const;

  std::vector<GraphNode> nodes_;
  std::vector<std::vector<int>> consumers_;
  int input_ = -1;
  int output_ = -1;
  bool finalized_ = false;
};

// Streaming per-coordinate extrema of a node's outputs over every sample fed
// through evaluate() with recording enabled.
struct NodeStats {
  Vector min, max;
  std::int64_t count = 0;
};

using WatchStats = std::unordered_map<int, NodeStats>;

// Evaluates the graph on a batch (one sample per row) and returns the scalar
// objective per row. When `watch` is given, per-node output stats are
// accumulated into `stats` for those node ids. Throws on non-finite input or
// output. Accumulation order inside every dot product is fixed, so the result
// is bit-identical for any batch decomposition and any thread count.
Vector evaluate(const CompGraph& g, const Matrix& batch,
                const std::vector<int>* watch = nullptr, WatchStats* stats = nullptr);

// Reverse-mode d(objective)/d(input) for each row. ReLU and the hinge norm
// use subgradient 0 at their kinks.
Matrix gradient(const CompGraph& g, const Matrix& batch);

// Per-node output intervals from forward interval arithmetic over the box.
struct IntervalSet {
  std::vector<Vector> lo, hi;
};

IntervalSet interval_forward(const CompGraph& g, const BoxDomain& box);

// Y = X W^T + b with a fixed accumulation order (8 interleaved partial sums
// per dot product). Shared by evaluation and bound propagation so batched and
// per-sample paths agree bitwise.
void affine_forward(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& W,
                    const Vector& b, Matrix& Y);

// C += A * B with the same fixed-order kernel (no bias).
void matmul_accumulate(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B,
                       Matrix& C);

}  // namespace babplan
