#include "babplan/crown.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace babplan {

ReluRelaxation relax_relu(const Vector& l, const Vector& u, AlphaPolicy policy) {
  if (l.size() != u.size()) throw std::invalid_argument("relax_relu: bound sizes differ");
  const int n = static_cast<int>(l.size());
  ReluRelaxation r;
  r.lower_slope.resize(n);
  r.lower_offset = Vector::Zero(n);
  r.upper_slope.resize(n);
  r.upper_offset = Vector::Zero(n);
  for (int j = 0; j < n; ++j) {
    if (!(l[j] <= u[j]))
      throw std::invalid_argument("relax_relu: lower exceeds upper at " + std::to_string(j));
    if (l[j] >= 0.0) {  // active (degenerate intervals land here when l >= 0)
      r.lower_slope[j] = 1.0;
      r.upper_slope[j] = 1.0;
    } else if (u[j] <= 0.0) {  // inactive
      r.lower_slope[j] = 0.0;
      r.upper_slope[j] = 0.0;
    } else {  // unstable: chord above, free slope below
      const double s = u[j] / (u[j] - l[j]);
      r.upper_slope[j] = s;
      r.upper_offset[j] = -u[j] * l[j] / (u[j] - l[j]);
      switch (policy) {
        case AlphaPolicy::kAdaptive: r.lower_slope[j] = u[j] >= -l[j] ? 1.0 : 0.0; break;
        case AlphaPolicy::kZero: r.lower_slope[j] = 0.0; break;
        case AlphaPolicy::kOne: r.lower_slope[j] = 1.0; break;
      }
    }
  }
  return r;
}

namespace {

struct Accum {
  Matrix lo, up;  // (rows x node_dim); empty until the node receives flow
  bool present = false;
};

void ensure(Accum& a, int rows, int dim) {
  if (!a.present) {
    a.lo = Matrix::Zero(rows, dim);
    a.up = Matrix::Zero(rows, dim);
    a.present = true;
  }
}

const std::pair<Vector, Vector>& need_bounds(const PreactBounds& pre, int node,
                                             const char* why) {
  if (!pre.has(node))
    throw std::logic_error(std::string("backward_propagate: missing bounds for node ") +
                           std::to_string(node) + " (" + why + ")");
  return pre.at(node);
}

// Linear envelopes of sum_j w_j (x_j - t_j)^2 over [l, u]: tangent at the
// midpoint from below (valid everywhere by convexity), chord from above
// (valid on the interval).
struct QuadEnvelope {
  Vector lo_slope, up_slope;
  double lo_off = 0.0, up_off = 0.0;
};

QuadEnvelope quad_envelope(const GraphNode& n, const Vector& l, const Vector& u) {
  const int d = static_cast<int>(l.size());
  QuadEnvelope e;
  e.lo_slope.resize(d);
  e.up_slope.resize(d);
  for (int j = 0; j < d; ++j) {
    if (!(l[j] <= u[j])) throw std::invalid_argument("quad envelope: inverted interval");
    const double w = n.weight[j], t = n.target[j];
    const double m = 0.5 * (l[j] + u[j]);
    e.lo_slope[j] = 2.0 * w * (m - t);
    e.lo_off += -w * (m - t) * (m + t);
    const double s = w * (l[j] + u[j] - 2.0 * t);
    e.up_slope[j] = s;
    e.up_off += w * (l[j] - t) * (l[j] - t) - s * l[j];
  }
  return e;
}

}  // namespace

BackwardBounds backward_propagate(const CompGraph& g, int from, const std::vector<int>& stop_set,
                                  const PreactBounds& pre, AlphaPolicy alpha) {
  if (!g.finalized()) throw std::logic_error("backward_propagate: graph not finalized");
  if (from < 0 || from >= g.size()) throw std::invalid_argument("backward_propagate: bad node");
  const int n = g.size();
  const int rows = g.node(from).dim;

  std::vector<char> stop(static_cast<size_t>(n), 0);
  for (int s : stop_set) {
    if (s < 0 || s >= n) throw std::invalid_argument("backward_propagate: bad stop node");
    stop[static_cast<size_t>(s)] = 1;
  }

  // Region of the DAG feeding `from`.
  std::vector<char> reach(static_cast<size_t>(n), 0);
  {
    std::vector<int> dfs{from};
    reach[static_cast<size_t>(from)] = 1;
    while (!dfs.empty()) {
      const int v = dfs.back();
      dfs.pop_back();
      for (int a : g.node(v).args) {
        if (!reach[static_cast<size_t>(a)]) {
          reach[static_cast<size_t>(a)] = 1;
          dfs.push_back(a);
        }
      }
    }
  }

  // Remaining in-region consumers per node (edge multiplicity counts). A node
  // is released only when every consumer has contributed its coefficients.
  std::vector<int> countdown(static_cast<size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    if (!reach[static_cast<size_t>(v)]) continue;
    for (int a : g.node(v).args) ++countdown[static_cast<size_t>(a)];
  }

  std::vector<Accum> acc(static_cast<size_t>(n));
  Vector b_lo = Vector::Zero(rows), b_up = Vector::Zero(rows);
  ensure(acc[static_cast<size_t>(from)], rows, rows);
  acc[static_cast<size_t>(from)].lo = Matrix::Identity(rows, rows);
  acc[static_cast<size_t>(from)].up = Matrix::Identity(rows, rows);

  std::vector<char> propagated(static_cast<size_t>(n), 0);
  std::vector<int> queue{from};

  auto push_if_ready = [&](int w) {
    if (countdown[static_cast<size_t>(w)] == 0) {
      const NodeKind k = g.node(w).kind;
      if (k != NodeKind::kInput && k != NodeKind::kConstant) queue.push_back(w);
    }
  };

  while (!queue.empty()) {
    const int v = queue.back();
    queue.pop_back();
    const GraphNode& node = g.node(v);
    for (int a : node.args) {
      --countdown[static_cast<size_t>(a)];
      push_if_ready(a);
    }
    // Stop-set members and hinges hold their coefficients as anchors. Hinges
    // are never relaxed linearly: their output interval is all that is used.
    if (v != from && (stop[static_cast<size_t>(v)] || node.kind == NodeKind::kPenaltyHinge))
      continue;
    Accum& av = acc[static_cast<size_t>(v)];
    if (!av.present) continue;
    if (node.kind == NodeKind::kInput || node.kind == NodeKind::kConstant) continue;

    switch (node.kind) {
      case NodeKind::kLinear: {
        const int arg = node.args[0];
        Accum& aw = acc[static_cast<size_t>(arg)];
        ensure(aw, rows, g.node(arg).dim);
        matmul_accumulate(av.lo, node.W, aw.lo);
        matmul_accumulate(av.up, node.W, aw.up);
        b_lo += av.lo * node.b;
        b_up += av.up * node.b;
        break;
      }
      case NodeKind::kRelu: {
        const int arg = node.args[0];
        const auto& [l, u] = need_bounds(pre, arg, "relu preactivation");
        const ReluRelaxation rel = relax_relu(l, u, alpha);
        Accum& aw = acc[static_cast<size_t>(arg)];
        ensure(aw, rows, g.node(arg).dim);
        for (int r = 0; r < rows; ++r) {
          for (int j = 0; j < node.dim; ++j) {
            const double c_lo = av.lo(r, j);
            if (c_lo >= 0.0) {
              aw.lo(r, j) += c_lo * rel.lower_slope[j];
              b_lo[r] += c_lo * rel.lower_offset[j];
            } else {
              aw.lo(r, j) += c_lo * rel.upper_slope[j];
              b_lo[r] += c_lo * rel.upper_offset[j];
            }
            const double c_up = av.up(r, j);
            if (c_up >= 0.0) {
              aw.up(r, j) += c_up * rel.upper_slope[j];
              b_up[r] += c_up * rel.upper_offset[j];
            } else {
              aw.up(r, j) += c_up * rel.lower_slope[j];
              b_up[r] += c_up * rel.lower_offset[j];
            }
          }
        }
        break;
      }
      case NodeKind::kSum: {
        for (int arg : node.args) {
          Accum& aw = acc[static_cast<size_t>(arg)];
          ensure(aw, rows, g.node(arg).dim);
          aw.lo += av.lo;
          aw.up += av.up;
        }
        break;
      }
      case NodeKind::kScalarAffine: {
        const int arg = node.args[0];
        Accum& aw = acc[static_cast<size_t>(arg)];
        ensure(aw, rows, g.node(arg).dim);
        aw.lo += node.scale * av.lo;
        aw.up += node.scale * av.up;
        b_lo += node.offset * av.lo.rowwise().sum();
        b_up += node.offset * av.up.rowwise().sum();
        break;
      }
      case NodeKind::kSquaredDistance: {
        const int arg = node.args[0];
        const auto& [l, u] = need_bounds(pre, arg, "quadratic input");
        const QuadEnvelope e = quad_envelope(node, l, u);
        Accum& aw = acc[static_cast<size_t>(arg)];
        ensure(aw, rows, g.node(arg).dim);
        for (int r = 0; r < rows; ++r) {
          const double c_lo = av.lo(r, 0);
          if (c_lo >= 0.0) {
            aw.lo.row(r) += c_lo * e.lo_slope.transpose();
            b_lo[r] += c_lo * e.lo_off;
          } else {
            aw.lo.row(r) += c_lo * e.up_slope.transpose();
            b_lo[r] += c_lo * e.up_off;
          }
          const double c_up = av.up(r, 0);
          if (c_up >= 0.0) {
            aw.up.row(r) += c_up * e.up_slope.transpose();
            b_up[r] += c_up * e.up_off;
          } else {
            aw.up.row(r) += c_up * e.lo_slope.transpose();
            b_up[r] += c_up * e.lo_off;
          }
        }
        break;
      }
      case NodeKind::kConcat: {
        int col = 0;
        for (int arg : node.args) {
          const int w = g.node(arg).dim;
          Accum& aw = acc[static_cast<size_t>(arg)];
          ensure(aw, rows, w);
          aw.lo += av.lo.middleCols(col, w);
          aw.up += av.up.middleCols(col, w);
          col += w;
        }
        break;
      }
      case NodeKind::kSlice: {
        const int arg = node.args[0];
        Accum& aw = acc[static_cast<size_t>(arg)];
        ensure(aw, rows, g.node(arg).dim);
        aw.lo.middleCols(node.begin, node.dim) += av.lo;
        aw.up.middleCols(node.begin, node.dim) += av.up;
        break;
      }
      default:
        throw std::logic_error("backward_propagate: unexpected node kind");
    }
    propagated[static_cast<size_t>(v)] = 1;
    // Release the matrices; anchors keep theirs.
    av.lo.resize(0, 0);
    av.up.resize(0, 0);
    av.present = false;
  }

  BackwardBounds out;
  out.lower.offset = std::move(b_lo);
  out.upper.offset = std::move(b_up);
  for (int id = 0; id < n; ++id) {
    Accum& a = acc[static_cast<size_t>(id)];
    if (!a.present || propagated[static_cast<size_t>(id)]) continue;
    const GraphNode& node = g.node(id);
    if (node.kind == NodeKind::kConstant) {  // exact: fold into the offsets
      out.lower.offset += a.lo * node.value;
      out.upper.offset += a.up * node.value;
      continue;
    }
    out.lower.terms.push_back({id, a.lo});
    out.upper.terms.push_back({id, std::move(a.up)});
  }
  return out;
}

namespace {

Vector concretize(const LinearBounds& lb, const PreactBounds& anchors, bool lower) {
  Vector res = lb.offset;
  for (const auto& term : lb.terms) {
    const auto& [lo, hi] = need_bounds(anchors, term.node, "anchor");
    if (lo.size() != term.coeff.cols())
      throw std::invalid_argument("concretize: anchor bound width mismatch");
    for (int r = 0; r < term.coeff.rows(); ++r) {
      double acc = 0.0;
      for (int j = 0; j < term.coeff.cols(); ++j) {
        const double c = term.coeff(r, j);
        // Lower forms take each anchor's worst (smallest) attainable value.
        const bool take_lo = lower ? c >= 0.0 : c < 0.0;
        acc += c * (take_lo ? lo[j] : hi[j]);
      }
      res[r] += acc;
    }
  }
  return res;
}

}  // namespace

Vector concretize_lower(const LinearBounds& lb, const PreactBounds& anchors) {
  return concretize(lb, anchors, true);
}

Vector concretize_upper(const LinearBounds& ub, const PreactBounds& anchors) {
  return concretize(ub, anchors, false);
}

bool bound_mode_sound(BoundMode mode) { return mode != BoundMode::kEarlyStopEmpirical; }

const char* bound_mode_name(BoundMode mode) {
  switch (mode) {
    case BoundMode::kFullCrown: return "full-crown";
    case BoundMode::kEarlyStopEmpirical: return "early-stop-empirical";
    case BoundMode::kEarlyStopInterval: return "early-stop-interval";
  }
  return "?";
}

BoundMode parse_bound_mode(const std::string& name) {
  if (name == "full-crown") return BoundMode::kFullCrown;
  if (name == "early-stop-empirical") return BoundMode::kEarlyStopEmpirical;
  if (name == "early-stop-interval") return BoundMode::kEarlyStopInterval;
  throw std::invalid_argument("unknown bound mode '" + name + "'");
}

const char* alpha_policy_name(AlphaPolicy policy) {
  switch (policy) {
    case AlphaPolicy::kAdaptive: return "adaptive";
    case AlphaPolicy::kZero: return "zero";
    case AlphaPolicy::kOne: return "one";
  }
  return "?";
}

AlphaPolicy parse_alpha_policy(const std::string& name) {
  if (name == "adaptive") return AlphaPolicy::kAdaptive;
  if (name == "zero") return AlphaPolicy::kZero;
  if (name == "one") return AlphaPolicy::kOne;
  throw std::invalid_argument("unknown alpha policy '" + name + "'");
}

namespace {

void hinge_interval(const GraphNode& n, const Vector& al, const Vector& ah, double& lo,
                    double& hi) {
  double d2_lo = 0.0, d2_hi = 0.0;
  for (int j = 0; j < al.size(); ++j) {
    const double a = al[j] - n.center[j];
    const double b = ah[j] - n.center[j];
    d2_hi += std::max(a * a, b * b);
    d2_lo += (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a * a, b * b);
  }
  const double m_lo = n.radius - std::sqrt(d2_hi);
  const double m_hi = n.radius - std::sqrt(d2_lo);
  lo = m_lo > 0.0 ? n.penalty * m_lo : 0.0;
  hi = m_hi > 0.0 ? n.penalty * m_hi : 0.0;
}

}  // namespace

PreactBounds crown_node_bounds(const CompGraph& g, const BoxDomain& box,
                               const std::vector<int>& targets, AlphaPolicy alpha) {
  PreactBounds pre;
  pre.provenance = BoundProvenance::kInterval;
  pre.bounds[g.input()] = {box.lower(), box.upper()};

  std::vector<int> wanted = targets;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  // Ascending ids are a topological order, so every backward pass only relies
  // on bounds resolved earlier.
  static const std::vector<int> no_stop;
  for (int id : wanted) {
    if (id < 0 || id >= g.size()) throw std::invalid_argument("crown_node_bounds: bad node");
    if (pre.has(id)) continue;
    const GraphNode& node = g.node(id);
    if (node.kind == NodeKind::kConstant) {
      pre.bounds[id] = {node.value, node.value};
      continue;
    }
    if (node.kind == NodeKind::kPenaltyHinge) {
      // Derived from the argument's bounds; the hinge itself is only ever
      // enclosed, never propagated through.
      const auto& [al, ah] = need_bounds(pre, node.args[0], "hinge input");
      double lo, hi;
      hinge_interval(node, al, ah, lo, hi);
      pre.bounds[id] = {Vector::Constant(1, lo), Vector::Constant(1, hi)};
      continue;
    }
    const BackwardBounds bb = backward_propagate(g, id, no_stop, pre, alpha);
    Vector lo = concretize_lower(bb.lower, pre);
    Vector hi = concretize_upper(bb.upper, pre);
    // Guard against rounding inversions on degenerate coordinates.
    for (int j = 0; j < lo.size(); ++j)
      if (lo[j] > hi[j]) std::swap(lo[j], hi[j]);
    pre.bounds[id] = {std::move(lo), std::move(hi)};
  }
  return pre;
}

namespace {

// Nodes whose bounds a backward pass from the output may consult: relaxation
// inputs, hinge inputs (to derive hinge output enclosures) and hinge nodes.
std::vector<int> relaxation_interfaces(const CompGraph& g) {
  std::vector<int> out;
  for (int id = 0; id < g.size(); ++id) {
    const GraphNode& n = g.node(id);
    if (n.kind == NodeKind::kRelu || n.kind == NodeKind::kSquaredDistance) {
      out.push_back(n.args[0]);
    } else if (n.kind == NodeKind::kPenaltyHinge) {
      out.push_back(n.args[0]);
      out.push_back(id);
    }
  }
  return out;
}

}  // namespace

double lower_bound(const GraphObjective& obj, const BoxDomain& box, BoundMode mode,
                   const WatchStats* stats, AlphaPolicy alpha) {
  const CompGraph& g = obj.graph();
  if (box.dim() != g.input_dim()) throw std::invalid_argument("lower_bound: box dim mismatch");

  PreactBounds pre;
  if (mode == BoundMode::kFullCrown) {
    pre = crown_node_bounds(g, box, relaxation_interfaces(g), alpha);
  } else {
    const IntervalSet iv = interval_forward(g, box);
    pre.provenance = BoundProvenance::kInterval;
    for (int id = 0; id < g.size(); ++id)
      pre.bounds[id] = {iv.lo[static_cast<size_t>(id)], iv.hi[static_cast<size_t>(id)]};
    if (mode == BoundMode::kEarlyStopEmpirical && stats != nullptr) {
      pre.provenance = BoundProvenance::kEmpirical;
      for (const auto& [id, ns] : *stats) {
        if (ns.count == 0) continue;  // interval fallback stays in place
        pre.bounds[id] = {ns.min, ns.max};
        pre.sample_counts[id] = ns.count;
      }
    }
    pre.bounds[g.input()] = {box.lower(), box.upper()};
  }

  const std::vector<int> stops =
      mode == BoundMode::kFullCrown ? std::vector<int>{} : obj.stop_set();
  const BackwardBounds bb = backward_propagate(g, g.output(), stops, pre, alpha);
  const Vector lo = concretize_lower(bb.lower, pre);
  return lo[0];
}

}  // namespace babplan
