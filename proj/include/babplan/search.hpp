#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "babplan/objective.hpp"
#include "babplan/types.hpp"

namespace babplan {

enum class SearchMethod { kCem, kMppi, kGd };

const char* search_method_name(SearchMethod m);
SearchMethod parse_search_method(const std::string& name);

struct CemParams {
  int agents = 4;         // independent instances with their own Gaussians
  int elites = 10;        // refit set size per agent
  double jitter = 1e-3;   // variance floor
  double init_sigma = 0.5;  // initial sigma as a fraction of box width
};

struct MppiParams {
  double noise_frac = 0.25;    // base noise sigma as a fraction of box width
  double temperature = 10.0;   // base softmax temperature
  std::vector<double> noise_ratios{0.5, 1.0, 2.0};
  std::vector<double> temperature_ratios{1.0};
};

struct GdParams {
  double base_step = 0.01;  // scaled by box width and by each instance ratio
  std::vector<double> step_ratios{0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 5.0, 10.0};
};

struct SearcherConfig {
  SearchMethod method = SearchMethod::kCem;
  int samples_per_iter = 1000;  // total across agents/instances
  int iterations = 10;
  std::uint64_t seed = 0;
  int top_capacity = 512;  // retained best samples, drives the split heuristic
  CemParams cem;
  MppiParams mppi;
  GdParams gd;
};

struct TopSample {
  double value;
  Vector u;
};

struct SearchReport {
  double uf = std::numeric_limits<double>::infinity();
  Vector best;
  std::vector<TopSample> top;      // ascending by value, capped at top_capacity
  WatchStats stats;                // per watched node, when the objective has one
  std::vector<double> uf_history;  // incumbent after each iteration
  std::vector<std::int64_t> samples_history;  // cumulative evaluations per iteration
  std::int64_t samples = 0;
  bool ok = true;
  std::string error;
};

// Minimizes over the box with the configured sampler. The warm start (box
// center when absent) is clamped into the box and evaluated, so the report
// never does worse than it. All drawn samples are clamped into the box.
SearchReport search(const Objective& f, const BoxDomain& box, const SearcherConfig& cfg,
                    const Vector* warm_start = nullptr);

// Independent searches, one per box, seeded with cfg.seed ^ box_index. A
// failure in one box is captured in its report and does not abort siblings.
std::vector<SearchReport> batch_search(const Objective& f, const std::vector<BoxDomain>& boxes,
                                       const SearcherConfig& cfg,
                                       const std::vector<const Vector*>* warm_starts = nullptr);

}  // namespace babplan
