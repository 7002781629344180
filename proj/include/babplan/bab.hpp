#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "babplan/crown.hpp"
#include "babplan/objective.hpp"
#include "babplan/rng.hpp"
#include "babplan/search.hpp"
#include "babplan/types.hpp"

namespace babplan {

struct SubdomainRecord {
  BoxDomain box;
  double lf = -std::numeric_limits<double>::infinity();
  double uf = std::numeric_limits<double>::infinity();
  Vector best;                  // minimizer candidate inside the box
  std::vector<TopSample> top;   // best recorded samples, ascending
  std::int64_t samples = 0;
  int depth = 0;
  std::int64_t id = 0, parent = -1;
  double log_vol = 0.0;  // relative to the root box
};

// Active frontier of the subdivision. The incumbent is the best upper bound
// ever observed, so it never increases.
class DomainPool {
 public:
  void insert(SubdomainRecord rec);
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const std::vector<SubdomainRecord>& records() const { return records_; }
  std::vector<SubdomainRecord>& records() { return records_; }
  double min_lf() const;

 private:
  std::vector<SubdomainRecord> records_;
};

struct Termination {
  int max_iterations = 50;
  double wall_clock_ms = 0.0;  // 0 disables
  double target_objective = -std::numeric_limits<double>::infinity();
};

struct PlannerConfig {
  int batch = 4;             // subdomains split per iteration
  double eta = 0.75;         // greedy fraction of the pick-out batch
  double temperature = 0.05; // softmax temperature over scaled lower bounds
  double top_percent = 1.0;  // sample share steering the split heuristic
  double min_width = 1e-6;   // boxes this thin are searched but never split
  BoundMode bound_mode = BoundMode::kEarlyStopEmpirical;
  AlphaPolicy alpha = AlphaPolicy::kAdaptive;
  SearcherConfig search;
  Termination term;
  std::uint64_t seed = 0;
};

// Lower-bound provider per subdomain. The search report of the subdomain is
// available for empirical modes.
class Bounder {
 public:
  virtual ~Bounder() = default;
  virtual double lower(const BoxDomain& box, const SearchReport* report) const = 0;
  virtual bool sound() const = 0;
};

class CrownBounder : public Bounder {
 public:
  CrownBounder(std::shared_ptr<const GraphObjective> obj, BoundMode mode, AlphaPolicy alpha);
  double lower(const BoxDomain& box, const SearchReport* report) const override;
  bool sound() const override { return bound_mode_sound(mode_); }

 private:
  std::shared_ptr<const GraphObjective> obj_;
  BoundMode mode_;
  AlphaPolicy alpha_;
};

// Exact minimum of the separable benchmark objective: per coordinate the
// minimum of 5x^2 + cos(50x) over [a, b], via the cached interior critical
// points of the 1-d term.
class SeparableBounder : public Bounder {
 public:
  SeparableBounder();
  double lower(const BoxDomain& box, const SearchReport* report) const override;
  bool sound() const override { return true; }

  static double term_min(double a, double b);      // min of 5x^2+cos(50x) on [a,b]
  static const std::vector<double>& critical_points();  // stationary points in [-1, 1]

 private:
};

// Selects the batch to subdivide: the round(eta*n) lowest-uf records, then
// the remainder without replacement with weight exp(-scaled_lf / T) where
// scaled_lf is min-max normalized over the remaining candidates (uniform when
// they all tie). Selected records are removed from the pool.
std::vector<SubdomainRecord> pick_out(DomainPool& pool, int n, double eta, double temperature,
                                      Rng& rng);

// Bisects along the axis maximizing width_j * |n_lo_j - n_hi_j| counted over
// the record's best samples (width-only when no samples are available; ties
// break to the lowest axis). Axes already at the width floor are skipped.
// Stored samples and the warm start are routed to the child containing them.
struct SplitResult {
  SubdomainRecord lo, hi;
  int axis = -1;
};

SplitResult split(const SubdomainRecord& rec, double top_percent, double min_width,
                  std::int64_t next_id);

// Removes every record with lf strictly above the incumbent. Returns the
// removed normalized volume. `on_prune`, when given, sees each removed record.
double prune(DomainPool& pool, double incumbent_uf,
             const std::function<void(const SubdomainRecord&)>* on_prune = nullptr);

struct TraceRow {
  int iter = 0;
  double uf = 0.0;
  double min_lf = 0.0;
  double pruned_vol = 0.0;    // cumulative, fraction of the root volume
  double selected_vol = 0.0;  // volume picked this iteration
  std::int64_t pool_size = 0;
  std::int64_t samples = 0;   // cumulative objective evaluations
  double wall_ms = 0.0;
};

struct PlanResult {
  double uf = std::numeric_limits<double>::infinity();
  Vector best;
  double min_lf = -std::numeric_limits<double>::infinity();
  bool certified = false;  // bounds were sound, so [min_lf, uf] brackets the optimum
  std::vector<TraceRow> trace;
  std::int64_t samples = 0;
  int iterations = 0;
  std::string stop_reason;
};

// Observation points into the planner loop, used by audits and tests.
struct PlanHooks {
  std::function<void(const SubdomainRecord&)> on_prune;
};

// Branch-and-bound minimization: search the root, bound it, then repeatedly
// pick out, split, search the children (warm-started), bound them, update the
// incumbent and prune. The bounder defaults to the exact separable bound for
// the synthetic objective and to the configured linear-relaxation mode for
// graph objectives. A warm start seeds the root search, so the result never
// does worse than it.
PlanResult plan(std::shared_ptr<const Objective> objective, const BoxDomain& root,
                const PlannerConfig& cfg, std::shared_ptr<const Bounder> bounder = nullptr,
                const Vector* warm_start = nullptr, const PlanHooks* hooks = nullptr);

// Plain sampler baseline sharing the trace schema (bound columns stay empty).
PlanResult sample_only_plan(std::shared_ptr<const Objective> objective, const BoxDomain& root,
                            const PlannerConfig& cfg, const Vector* warm_start = nullptr);

}  // namespace babplan
