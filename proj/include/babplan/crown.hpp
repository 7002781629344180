#pragma once

#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "babplan/graph.hpp"
#include "babplan/objective.hpp"
#include "babplan/types.hpp"

namespace babplan {

// Slope of the linear lower envelope for an unstable ReLU.
enum class AlphaPolicy {
  kAdaptive,  // 1 when u >= |l| (lean toward the wider side), else 0
  kZero,      // always 0; the only policy whose bounds shrink monotonically
              // with the box, see decision notes
  kOne,
};

// Elementwise sandwich lower_slope*z + lower_offset <= relu(z) <=
// upper_slope*z + upper_offset valid on [l, u].
struct ReluRelaxation {
  Vector lower_slope, lower_offset;
  Vector upper_slope, upper_offset;
};

// Requires l <= u elementwise. A degenerate coordinate (l == u) is treated as
// active when l >= 0 and inactive otherwise.
ReluRelaxation relax_relu(const Vector& l, const Vector& u, AlphaPolicy policy);

// Where a node's output interval came from. Empirical bounds are extrema of
// recorded samples: valid for every recorded point, not for the whole box.
enum class BoundProvenance { kInterval, kEmpirical };

struct PreactBounds {
  std::unordered_map<int, std::pair<Vector, Vector>> bounds;  // node -> (lo, hi)
  std::unordered_map<int, std::int64_t> sample_counts;        // empirical only
  BoundProvenance provenance = BoundProvenance::kInterval;

  bool has(int node) const { return bounds.count(node) != 0; }
  const std::pair<Vector, Vector>& at(int node) const { return bounds.at(node); }
};

// One-sided linear form anchored at frontier nodes:
//   value >=/<= offset + sum_t coeff_t . output(node_t).
struct LinearTerm {
  int node;
  Matrix coeff;  // (rows x node_dim)
};

struct LinearBounds {
  std::vector<LinearTerm> terms;
  Vector offset;  // per output row
};

struct BackwardBounds {
  LinearBounds lower, upper;
};

// Backward substitution from `from` down to the stop set and the graph input.
// The traversal releases a node only after all of its consumers inside the
// reachable subgraph have contributed (out-degree countdown). Stop-set nodes
// and hinge nodes absorb their incoming coefficients unrelaxed; ReLU and
// quadratic nodes substitute their sign-selected envelopes, which requires
// `pre` to carry bounds for their argument nodes.
BackwardBounds backward_propagate(const CompGraph& g, int from,
                                  const std::vector<int>& stop_set, const PreactBounds& pre,
                                  AlphaPolicy alpha = AlphaPolicy::kAdaptive);

// Tightest box-consistent value of the lower form: for each anchor,
// coefficients meet the anchor's lower bound where positive and its upper
// bound where negative (and conversely for upper forms).
Vector concretize_lower(const LinearBounds& lb, const PreactBounds& anchors);
Vector concretize_upper(const LinearBounds& ub, const PreactBounds& anchors);

enum class BoundMode {
  kFullCrown,           // relax every ReLU; preactivations bounded recursively
  kEarlyStopEmpirical,  // stop-set anchors + sample extrema (heuristic)
  kEarlyStopInterval,   // stop-set anchors + interval arithmetic (sound)
};

bool bound_mode_sound(BoundMode mode);
const char* bound_mode_name(BoundMode mode);
BoundMode parse_bound_mode(const std::string& name);
const char* alpha_policy_name(AlphaPolicy policy);
AlphaPolicy parse_alpha_policy(const std::string& name);

// Lower bound of the scalar objective over the box. `stats` supplies recorded
// sample extrema and is required only by the empirical mode; nodes missing
// from it fall back to interval bounds. The empirical mode is not sound over
// the box, but it never exceeds the objective at any recorded sample.
double lower_bound(const GraphObjective& obj, const BoxDomain& box, BoundMode mode,
                   const WatchStats* stats = nullptr,
                   AlphaPolicy alpha = AlphaPolicy::kAdaptive);

// Box bounds for every node listed in `targets`, each obtained by backward
// substitution from that node (full-chain recursion, sound).
PreactBounds crown_node_bounds(const CompGraph& g, const BoxDomain& box,
                               const std::vector<int>& targets, AlphaPolicy alpha);

}  // namespace babplan
