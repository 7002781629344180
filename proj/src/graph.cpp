#include "babplan/graph.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "babplan/parallel.hpp"

namespace babplan {

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::kInput: return "input";
    case NodeKind::kConstant: return "constant";
    case NodeKind::kLinear: return "linear";
    case NodeKind::kRelu: return "relu";
    case NodeKind::kSum: return "sum";
    case NodeKind::kScalarAffine: return "scalar_affine";
    case NodeKind::kSquaredDistance: return "squared_distance";
    case NodeKind::kPenaltyHinge: return "penalty_hinge";
    case NodeKind::kConcat: return "concat";
    case NodeKind::kSlice: return "slice";
  }
  return "?";
}

int CompGraph::add_node(GraphNode node) {
  if (finalized_) throw std::logic_error("CompGraph: graph is finalized");
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

void CompGraph::check_arg(int arg, const char* ctx) const {
  if (arg < 0 || arg >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument(std::string(ctx) + ": argument refers to an unknown node");
}

int CompGraph::add_input(int dim) {
  if (input_ >= 0) throw std::invalid_argument("CompGraph: a single input node is required");
  if (dim <= 0) throw std::invalid_argument("input: dimension must be positive");
  GraphNode n;
  n.kind = NodeKind::kInput;
  n.dim = dim;
  input_ = add_node(std::move(n));
  return input_;
}

int CompGraph::add_constant(Vector value) {
  if (value.size() == 0) throw std::invalid_argument("constant: empty value");
  require_finite(value, "constant value");
  GraphNode n;
  n.kind = NodeKind::kConstant;
  n.dim = static_cast<int>(value.size());
  n.value = std::move(value);
  return add_node(std::move(n));
}

int CompGraph::add_linear(int arg, Matrix W, Vector b) {
  check_arg(arg, "linear");
  if (W.rows() == 0 || W.cols() != nodes_[arg].dim)
    throw std::invalid_argument("linear: weight shape does not match argument");
  if (b.size() != W.rows()) throw std::invalid_argument("linear: bias shape mismatch");
  require_finite(W, "linear weights");
  require_finite(b, "linear bias");
  GraphNode n;
  n.kind = NodeKind::kLinear;
  n.args = {arg};
  n.dim = static_cast<int>(W.rows());
  n.W = std::move(W);
  n.b = std::move(b);
  return add_node(std::move(n));
}

int CompGraph::add_relu(int arg) {
  check_arg(arg, "relu");
  GraphNode n;
  n.kind = NodeKind::kRelu;
  n.args = {arg};
  n.dim = nodes_[arg].dim;
  return add_node(std::move(n));
}

int CompGraph::add_sum(std::vector<int> args) {
  if (args.empty()) throw std::invalid_argument("sum: needs at least one argument");
  for (int a : args) check_arg(a, "sum");
  const int dim = nodes_[args[0]].dim;
  for (int a : args) {
    if (nodes_[a].dim != dim) throw std::invalid_argument("sum: argument dimensions differ");
  }
  GraphNode n;
  n.kind = NodeKind::kSum;
  n.args = std::move(args);
  n.dim = dim;
  return add_node(std::move(n));
}

int CompGraph::add_scalar_affine(int arg, double scale, double offset) {
  check_arg(arg, "scalar_affine");
  if (!std::isfinite(scale) || !std::isfinite(offset))
    throw std::invalid_argument("scalar_affine: non-finite parameter");
  GraphNode n;
  n.kind = NodeKind::kScalarAffine;
  n.args = {arg};
  n.dim = nodes_[arg].dim;
  n.scale = scale;
  n.offset = offset;
  return add_node(std::move(n));
}

int CompGraph::add_squared_distance(int arg, Vector target, Vector weight) {
  check_arg(arg, "squared_distance");
  const int d = nodes_[arg].dim;
  if (target.size() != d || weight.size() != d)
    throw std::invalid_argument("squared_distance: target/weight shape mismatch");
  require_finite(target, "squared_distance target");
  require_finite(weight, "squared_distance weight");
  if ((weight.array() < 0.0).any())
    throw std::invalid_argument("squared_distance: weights must be nonnegative");
  GraphNode n;
  n.kind = NodeKind::kSquaredDistance;
  n.args = {arg};
  n.dim = 1;
  n.target = std::move(target);
  n.weight = std::move(weight);
  return add_node(std::move(n));
}

int CompGraph::add_penalty_hinge(int arg, Vector center, double radius, double penalty) {
  check_arg(arg, "penalty_hinge");
  if (center.size() != nodes_[arg].dim)
    throw std::invalid_argument("penalty_hinge: center shape mismatch");
  require_finite(center, "penalty_hinge center");
  if (!std::isfinite(radius) || radius < 0.0)
    throw std::invalid_argument("penalty_hinge: radius must be finite and nonnegative");
  if (!std::isfinite(penalty) || penalty < 0.0)
    throw std::invalid_argument("penalty_hinge: penalty must be finite and nonnegative");
  GraphNode n;
  n.kind = NodeKind::kPenaltyHinge;
  n.args = {arg};
  n.dim = 1;
  n.center = std::move(center);
  n.radius = radius;
  n.penalty = penalty;
  return add_node(std::move(n));
}

int CompGraph::add_concat(std::vector<int> args) {
  if (args.empty()) throw std::invalid_argument("concat: needs at least one argument");
  int dim = 0;
  for (int a : args) {
    check_arg(a, "concat");
    dim += nodes_[a].dim;
  }
  GraphNode n;
  n.kind = NodeKind::kConcat;
  n.args = std::move(args);
  n.dim = dim;
  return add_node(std::move(n));
}

int CompGraph::add_slice(int arg, int begin, int len) {
  check_arg(arg, "slice");
  if (len <= 0 || begin < 0 || begin + len > nodes_[arg].dim)
    throw std::invalid_argument("slice: range outside argument");
  GraphNode n;
  n.kind = NodeKind::kSlice;
  n.args = {arg};
  n.dim = len;
  n.begin = begin;
  return add_node(std::move(n));
}

void CompGraph::set_output(int node) {
  check_arg(node, "output");
  if (nodes_[node].dim != 1) throw std::invalid_argument("output: node must be scalar");
  output_ = node;
}

void CompGraph::finalize() {
  if (input_ < 0) throw std::invalid_argument("CompGraph: missing input node");
  if (output_ < 0) throw std::invalid_argument("CompGraph: output not set");
  consumers_.assign(nodes_.size(), {});
  for (int id = 0; id < size(); ++id) {
    for (int a : nodes_[static_cast<size_t>(id)].args)
      consumers_[static_cast<size_t>(a)].push_back(id);
  }
  finalized_ = true;
}

int CompGraph::input_dim() const {
  if (input_ < 0) throw std::logic_error("CompGraph: missing input node");
  return nodes_[static_cast<size_t>(input_)].dim;
}

namespace {

// Dot product with eight interleaved accumulators combined in a fixed tree.
// The order never depends on surrounding batch geometry, which is what makes
// batched evaluation bit-identical to per-sample evaluation.
inline double dot8(const double* a, const double* b, int n) {
  double s[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int k = 0;
  for (; k + 8 <= n; k += 8) {
    s[0] += a[k] * b[k];
    s[1] += a[k + 1] * b[k + 1];
    s[2] += a[k + 2] * b[k + 2];
    s[3] += a[k + 3] * b[k + 3];
    s[4] += a[k + 4] * b[k + 4];
    s[5] += a[k + 5] * b[k + 5];
    s[6] += a[k + 6] * b[k + 6];
    s[7] += a[k + 7] * b[k + 7];
  }
  for (int r = 0; k < n; ++k, ++r) s[r] += a[k] * b[k];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

}  // namespace

void affine_forward(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& W,
                    const Vector& b, Matrix& Y) {
  const int rows = static_cast<int>(X.rows());
  const int in = static_cast<int>(X.cols());
  const int out = static_cast<int>(W.rows());
  if (W.cols() != in || b.size() != out)
    throw std::invalid_argument("affine_forward: shape mismatch");
  Y.resize(rows, out);
  for (int i = 0; i < rows; ++i) {
    const double* xi = X.row(i).data();
    for (int o = 0; o < out; ++o) Y(i, o) = dot8(xi, W.row(o).data(), in) + b[o];
  }
}

void matmul_accumulate(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B,
                       Matrix& C) {
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  const int n = static_cast<int>(B.cols());
  if (B.rows() != k || C.rows() != m || C.cols() != n)
    throw std::invalid_argument("matmul_accumulate: shape mismatch");
  const Matrix Bt = B.transpose();  // contiguous rows for the dot kernel
  for (int i = 0; i < m; ++i) {
    const double* ai = A.row(i).data();
    for (int j = 0; j < n; ++j) C(i, j) += dot8(ai, Bt.row(j).data(), k);
  }
}

namespace {

// Forward values for one batch chunk. Node buffers are released as soon as
// every consumer has read them; watched nodes flush their extrema into
// `stats` before release.
void forward_chunk(const CompGraph& g, const Eigen::Ref<const Matrix>& batch, Vector& out,
                   std::int64_t out_offset, const std::vector<int>* watch, WatchStats* stats,
                   std::mutex* stats_mu) {
  const int rows = static_cast<int>(batch.rows());
  const int n = g.size();
  std::vector<Matrix> vals(static_cast<size_t>(n));
  std::vector<int> pending(static_cast<size_t>(n));
  for (int id = 0; id < n; ++id) {
    pending[static_cast<size_t>(id)] = static_cast<int>(g.consumers(id).size());
    if (id == g.output()) ++pending[static_cast<size_t>(id)];  // retained for the result
  }

  std::vector<char> watched(static_cast<size_t>(n), 0);
  if (watch != nullptr) {
    for (int id : *watch) watched.at(static_cast<size_t>(id)) = 1;
  }

  WatchStats local;
  auto record = [&](int id, const Matrix& v) {
    if (!watched[static_cast<size_t>(id)]) return;
    NodeStats& ns = local[id];
    if (ns.count == 0) {
      ns.min = v.colwise().minCoeff();
      ns.max = v.colwise().maxCoeff();
    } else {
      ns.min = ns.min.cwiseMin(v.colwise().minCoeff().transpose());
      ns.max = ns.max.cwiseMax(v.colwise().maxCoeff().transpose());
    }
    ns.count += v.rows();
  };

  for (int id = 0; id < n; ++id) {
    const GraphNode& node = g.node(id);
    Matrix v;
    switch (node.kind) {
      case NodeKind::kInput:
        v = batch;
        break;
      case NodeKind::kConstant:
        v = node.value.transpose().replicate(rows, 1);
        break;
      case NodeKind::kLinear:
        affine_forward(vals[static_cast<size_t>(node.args[0])], node.W, node.b, v);
        break;
      case NodeKind::kRelu:
        v = vals[static_cast<size_t>(node.args[0])].cwiseMax(0.0);
        break;
      case NodeKind::kSum: {
        v = vals[static_cast<size_t>(node.args[0])];
        for (size_t a = 1; a < node.args.size(); ++a)
          v += vals[static_cast<size_t>(node.args[a])];
        break;
      }
      case NodeKind::kScalarAffine:
        v = node.scale * vals[static_cast<size_t>(node.args[0])].array() + node.offset;
        break;
      case NodeKind::kSquaredDistance: {
        const Matrix& x = vals[static_cast<size_t>(node.args[0])];
        v.resize(rows, 1);
        for (int i = 0; i < rows; ++i) {
          double acc = 0.0;
          for (int j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - node.target[j];
            acc += node.weight[j] * d * d;
          }
          v(i, 0) = acc;
        }
        break;
      }
      case NodeKind::kPenaltyHinge: {
        const Matrix& x = vals[static_cast<size_t>(node.args[0])];
        v.resize(rows, 1);
        for (int i = 0; i < rows; ++i) {
          double acc = 0.0;
          for (int j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - node.center[j];
            acc += d * d;
          }
          const double m = node.radius - std::sqrt(acc);
          v(i, 0) = m > 0.0 ? node.penalty * m : 0.0;
        }
        break;
      }
      case NodeKind::kConcat: {
        v.resize(rows, node.dim);
        int col = 0;
        for (int a : node.args) {
          const Matrix& x = vals[static_cast<size_t>(a)];
          v.middleCols(col, x.cols()) = x;
          col += static_cast<int>(x.cols());
        }
        break;
      }
      case NodeKind::kSlice:
        v = vals[static_cast<size_t>(node.args[0])].middleCols(node.begin, node.dim);
        break;
    }
    record(id, v);
    vals[static_cast<size_t>(id)] = std::move(v);
    for (int a : node.args) {
      if (--pending[static_cast<size_t>(a)] == 0) vals[static_cast<size_t>(a)].resize(0, 0);
    }
  }

  const Matrix& result = vals[static_cast<size_t>(g.output())];
  if (!result.allFinite())
    throw std::runtime_error("evaluate: non-finite objective value (malformed weights?)");
  out.segment(out_offset, rows) = result.col(0);

  if (stats != nullptr && !local.empty()) {
    std::unique_lock<std::mutex> lk;
    if (stats_mu != nullptr) lk = std::unique_lock<std::mutex>(*stats_mu);
    for (auto& [id, ns] : local) {
      NodeStats& dst = (*stats)[id];
      if (dst.count == 0) {
        dst = ns;
      } else {
        dst.min = dst.min.cwiseMin(ns.min);
        dst.max = dst.max.cwiseMax(ns.max);
        dst.count += ns.count;
      }
    }
  }
}

constexpr std::int64_t kChunkRows = 8192;

}  // namespace

Vector evaluate(const CompGraph& g, const Matrix& batch, const std::vector<int>* watch,
                WatchStats* stats) {
  if (!g.finalized()) throw std::logic_error("evaluate: graph not finalized");
  if (batch.cols() != g.input_dim())
    throw std::invalid_argument("evaluate: batch width does not match the input dimension");
  require_finite(batch, "evaluate batch");
  const std::int64_t rows = batch.rows();
  Vector out(rows);
  if (rows == 0) return out;

  std::mutex stats_mu;
  const std::int64_t chunks = (rows + kChunkRows - 1) / kChunkRows;
  parallel_chunks(chunks, [&](std::int64_t cb, std::int64_t ce) {
    for (std::int64_t c = cb; c < ce; ++c) {
      const std::int64_t b = c * kChunkRows;
      const std::int64_t e = std::min<std::int64_t>(rows, b + kChunkRows);
      forward_chunk(g, batch.middleRows(b, e - b), out, b, watch, stats, &stats_mu);
    }
  });
  return out;
}

Matrix gradient(const CompGraph& g, const Matrix& batch) {
  if (!g.finalized()) throw std::logic_error("gradient: graph not finalized");
  if (batch.cols() != g.input_dim())
    throw std::invalid_argument("gradient: batch width does not match the input dimension");
  require_finite(batch, "gradient batch");
  const int rows = static_cast<int>(batch.rows());
  const int n = g.size();

  // Forward values are all retained: reverse mode needs them.
  std::vector<Matrix> vals(static_cast<size_t>(n));
  for (int id = 0; id < n; ++id) {
    const GraphNode& node = g.node(id);
    Matrix v;
    switch (node.kind) {
      case NodeKind::kInput: v = batch; break;
      case NodeKind::kConstant: v = node.value.transpose().replicate(rows, 1); break;
      case NodeKind::kLinear:
        affine_forward(vals[static_cast<size_t>(node.args[0])], node.W, node.b, v);
        break;
      case NodeKind::kRelu: v = vals[static_cast<size_t>(node.args[0])].cwiseMax(0.0); break;
      case NodeKind::kSum: {
        v = vals[static_cast<size_t>(node.args[0])];
        for (size_t a = 1; a < node.args.size(); ++a)
          v += vals[static_cast<size_t>(node.args[a])];
        break;
      }
      case NodeKind::kScalarAffine:
        v = node.scale * vals[static_cast<size_t>(node.args[0])].array() + node.offset;
        break;
      case NodeKind::kSquaredDistance: {
        const Matrix& x = vals[static_cast<size_t>(node.args[0])];
        v.resize(rows, 1);
        for (int i = 0; i < rows; ++i) {
          double acc = 0.0;
          for (int j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - node.target[j];
            acc += node.weight[j] * d * d;
          }
          v(i, 0) = acc;
        }
        break;
      }
      case NodeKind::kPenaltyHinge: {
        const Matrix& x = vals[static_cast<size_t>(node.args[0])];
        v.resize(rows, 1);
        for (int i = 0; i < rows; ++i) {
          const double d = (x.row(i).transpose() - node.center).norm();
          const double m = node.radius - d;
          v(i, 0) = m > 0.0 ? node.penalty * m : 0.0;
        }
        break;
      }
      case NodeKind::kConcat: {
        v.resize(rows, node.dim);
        int col = 0;
        for (int a : node.args) {
          const Matrix& x = vals[static_cast<size_t>(a)];
          v.middleCols(col, x.cols()) = x;
          col += static_cast<int>(x.cols());
        }
        break;
      }
      case NodeKind::kSlice:
        v = vals[static_cast<size_t>(node.args[0])].middleCols(node.begin, node.dim);
        break;
    }
    vals[static_cast<size_t>(id)] = std::move(v);
  }

  std::vector<Matrix> adj(static_cast<size_t>(n));
  auto bump = [&](int id, int cols) {
    Matrix& a = adj[static_cast<size_t>(id)];
    if (a.size() == 0) a = Matrix::Zero(rows, cols);
  };
  bump(g.output(), 1);
  adj[static_cast<size_t>(g.output())].setOnes();

  for (int id = n - 1; id >= 0; --id) {
    const Matrix& a = adj[static_cast<size_t>(id)];
    if (a.size() == 0) continue;
    const GraphNode& node = g.node(id);
    switch (node.kind) {
      case NodeKind::kInput:
      case NodeKind::kConstant:
        break;
      case NodeKind::kLinear: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        adj[static_cast<size_t>(arg)].noalias() += a * node.W;
        break;
      }
      case NodeKind::kRelu: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        const Matrix& x = vals[static_cast<size_t>(arg)];
        adj[static_cast<size_t>(arg)].array() += a.array() * (x.array() > 0.0).cast<double>();
        break;
      }
      case NodeKind::kSum:
        for (int arg : node.args) {
          bump(arg, g.node(arg).dim);
          adj[static_cast<size_t>(arg)] += a;
        }
        break;
      case NodeKind::kScalarAffine: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        adj[static_cast<size_t>(arg)] += node.scale * a;
        break;
      }
      case NodeKind::kSquaredDistance: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        const Matrix& x = vals[static_cast<size_t>(arg)];
        Matrix& dst = adj[static_cast<size_t>(arg)];
        for (int i = 0; i < rows; ++i) {
          const double s = a(i, 0);
          if (s == 0.0) continue;
          for (int j = 0; j < x.cols(); ++j)
            dst(i, j) += s * 2.0 * node.weight[j] * (x(i, j) - node.target[j]);
        }
        break;
      }
      case NodeKind::kPenaltyHinge: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        const Matrix& x = vals[static_cast<size_t>(arg)];
        Matrix& dst = adj[static_cast<size_t>(arg)];
        for (int i = 0; i < rows; ++i) {
          const double s = a(i, 0);
          if (s == 0.0) continue;
          const Vector diff = x.row(i).transpose() - node.center;
          const double d = diff.norm();
          // Subgradient 0 both at the hinge kink and at the norm's origin.
          if (d <= 0.0 || node.radius - d <= 0.0) continue;
          dst.row(i) -= (s * node.penalty / d) * diff.transpose();
        }
        break;
      }
      case NodeKind::kConcat: {
        int col = 0;
        for (int arg : node.args) {
          const int w = g.node(arg).dim;
          bump(arg, w);
          adj[static_cast<size_t>(arg)] += a.middleCols(col, w);
          col += w;
        }
        break;
      }
      case NodeKind::kSlice: {
        const int arg = node.args[0];
        bump(arg, g.node(arg).dim);
        adj[static_cast<size_t>(arg)].middleCols(node.begin, node.dim) += a;
        break;
      }
    }
  }

  Matrix g_in = adj[static_cast<size_t>(g.input())];
  if (g_in.size() == 0) g_in = Matrix::Zero(rows, g.input_dim());
  return g_in;
}

IntervalSet interval_forward(const CompGraph& g, const BoxDomain& box) {
  if (!g.finalized()) throw std::logic_error("interval_forward: graph not finalized");
  if (box.dim() != g.input_dim())
    throw std::invalid_argument("interval_forward: box does not match the input dimension");
  const int n = g.size();
  IntervalSet iv;
  iv.lo.resize(static_cast<size_t>(n));
  iv.hi.resize(static_cast<size_t>(n));

  for (int id = 0; id < n; ++id) {
    const GraphNode& node = g.node(id);
    Vector lo(node.dim), hi(node.dim);
    switch (node.kind) {
      case NodeKind::kInput:
        lo = box.lower();
        hi = box.upper();
        break;
      case NodeKind::kConstant:
        lo = node.value;
        hi = node.value;
        break;
      case NodeKind::kLinear: {
        const Vector& al = iv.lo[static_cast<size_t>(node.args[0])];
        const Vector& ah = iv.hi[static_cast<size_t>(node.args[0])];
        for (int o = 0; o < node.dim; ++o) {
          double l = node.b[o], h = node.b[o];
          for (int j = 0; j < al.size(); ++j) {
            const double w = node.W(o, j);
            if (w >= 0.0) {
              l += w * al[j];
              h += w * ah[j];
            } else {
              l += w * ah[j];
              h += w * al[j];
            }
          }
          lo[o] = l;
          hi[o] = h;
        }
        break;
      }
      case NodeKind::kRelu:
        lo = iv.lo[static_cast<size_t>(node.args[0])].cwiseMax(0.0);
        hi = iv.hi[static_cast<size_t>(node.args[0])].cwiseMax(0.0);
        break;
      case NodeKind::kSum: {
        lo.setZero();
        hi.setZero();
        for (int a : node.args) {
          lo += iv.lo[static_cast<size_t>(a)];
          hi += iv.hi[static_cast<size_t>(a)];
        }
        break;
      }
      case NodeKind::kScalarAffine: {
        const Vector& al = iv.lo[static_cast<size_t>(node.args[0])];
        const Vector& ah = iv.hi[static_cast<size_t>(node.args[0])];
        if (node.scale >= 0.0) {
          lo = node.scale * al.array() + node.offset;
          hi = node.scale * ah.array() + node.offset;
        } else {
          lo = node.scale * ah.array() + node.offset;
          hi = node.scale * al.array() + node.offset;
        }
        break;
      }
      case NodeKind::kSquaredDistance: {
        const Vector& al = iv.lo[static_cast<size_t>(node.args[0])];
        const Vector& ah = iv.hi[static_cast<size_t>(node.args[0])];
        double l = 0.0, h = 0.0;
        for (int j = 0; j < al.size(); ++j) {
          const double a = al[j] - node.target[j];
          const double b = ah[j] - node.target[j];
          const double mx = std::max(a * a, b * b);
          const double mn = (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
          l += node.weight[j] * mn;
          h += node.weight[j] * mx;
        }
        lo[0] = l;
        hi[0] = h;
        break;
      }
      case NodeKind::kPenaltyHinge: {
        const Vector& al = iv.lo[static_cast<size_t>(node.args[0])];
        const Vector& ah = iv.hi[static_cast<size_t>(node.args[0])];
        double d2_lo = 0.0, d2_hi = 0.0;
        for (int j = 0; j < al.size(); ++j) {
          const double a = al[j] - node.center[j];
          const double b = ah[j] - node.center[j];
          d2_hi += std::max(a * a, b * b);
          d2_lo += (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
        }
        // The hinge is nonincreasing in the distance, so the interval flips.
        const double m_lo = node.radius - std::sqrt(d2_hi);
        const double m_hi = node.radius - std::sqrt(d2_lo);
        lo[0] = m_lo > 0.0 ? node.penalty * m_lo : 0.0;
        hi[0] = m_hi > 0.0 ? node.penalty * m_hi : 0.0;
        break;
      }
      case NodeKind::kConcat: {
        int col = 0;
        for (int a : node.args) {
          const int w = g.node(a).dim;
          lo.segment(col, w) = iv.lo[static_cast<size_t>(a)];
          hi.segment(col, w) = iv.hi[static_cast<size_t>(a)];
          col += w;
        }
        break;
      }
      case NodeKind::kSlice:
        lo = iv.lo[static_cast<size_t>(node.args[0])].segment(node.begin, node.dim);
        hi = iv.hi[static_cast<size_t>(node.args[0])].segment(node.begin, node.dim);
        break;
    }
    iv.lo[static_cast<size_t>(id)] = std::move(lo);
    iv.hi[static_cast<size_t>(id)] = std::move(hi);
  }
  return iv;
}

}  // namespace babplan
