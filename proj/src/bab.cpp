#include "babplan/bab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace babplan {

void DomainPool::insert(SubdomainRecord rec) { records_.push_back(std::move(rec)); }

double DomainPool::min_lf() const {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& r : records_) m = std::min(m, r.lf);
  return m;
}

CrownBounder::CrownBounder(std::shared_ptr<const GraphObjective> obj, BoundMode mode,
                           AlphaPolicy alpha)
    : obj_(std::move(obj)), mode_(mode), alpha_(alpha) {
  if (!obj_) throw std::invalid_argument("CrownBounder: null objective");
}

double CrownBounder::lower(const BoxDomain& box, const SearchReport* report) const {
  const WatchStats* stats = report != nullptr && report->ok ? &report->stats : nullptr;
  return lower_bound(*obj_, box, mode_, stats, alpha_);
}

SeparableBounder::SeparableBounder() { critical_points(); }

const std::vector<double>& SeparableBounder::critical_points() {
  static const std::vector<double> pts = [] {
    auto dg = [](double x) { return 10.0 * x - 50.0 * std::sin(50.0 * x); };
    std::vector<double> out;
    const int n = 400000;
    double px = -1.0, pv = dg(px);
    for (int i = 1; i <= n; ++i) {
      const double x = -1.0 + 2.0 * i / n;
      const double v = dg(x);
      if (pv == 0.0) {
        out.push_back(px);
      } else if ((pv < 0.0) != (v < 0.0)) {
        double a = px, b = x, fa = pv;
        for (int it = 0; it < 80; ++it) {
          const double m = 0.5 * (a + b);
          const double fm = dg(m);
          if (fm == 0.0) {
            a = b = m;
            break;
          }
          if ((fa < 0.0) != (fm < 0.0)) {
            b = m;
          } else {
            a = m;
            fa = fm;
          }
        }
        out.push_back(0.5 * (a + b));
      }
      px = x;
      pv = v;
    }
    if (pv == 0.0) out.push_back(px);
    return out;
  }();
  return pts;
}

double SeparableBounder::term_min(double a, double b) {
  if (!(a <= b)) throw std::invalid_argument("term_min: empty interval");
  auto g = [](double x) { return 5.0 * x * x + std::cos(50.0 * x); };
  double m = std::min(g(a), g(b));
  for (double c : critical_points())
    if (c > a && c < b) m = std::min(m, g(c));
  return m;
}

double SeparableBounder::lower(const BoxDomain& box, const SearchReport*) const {
  double total = 0.0;
  for (int j = 0; j < box.dim(); ++j) total += term_min(box.lower()[j], box.upper()[j]);
  return total;
}

std::vector<SubdomainRecord> pick_out(DomainPool& pool, int n, double eta, double temperature,
                                      Rng& rng) {
  auto& recs = pool.records();
  const int total = static_cast<int>(recs.size());
  n = std::min(n, total);
  if (n <= 0) return {};

  std::vector<int> order(static_cast<size_t>(total));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return recs[static_cast<size_t>(a)].uf != recs[static_cast<size_t>(b)].uf
               ? recs[static_cast<size_t>(a)].uf < recs[static_cast<size_t>(b)].uf
               : a < b;
  });

  const int n1 = std::clamp(static_cast<int>(std::llround(eta * n)), 0, n);
  std::vector<int> chosen(order.begin(), order.begin() + n1);
  std::vector<int> rem(order.begin() + n1, order.end());

  const double temp = std::max(temperature, 1e-12);
  for (int need = n - n1; need > 0; --need) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int idx : rem) {
      const double lf = recs[static_cast<size_t>(idx)].lf;
      if (std::isfinite(lf)) {
        lo = std::min(lo, lf);
        hi = std::max(hi, lf);
      }
    }
    const bool degenerate = !(hi > lo);
    std::vector<double> w(rem.size());
    double sum = 0.0;
    for (size_t i = 0; i < rem.size(); ++i) {
      double scaled = 0.5;
      if (!degenerate) {
        const double lf = recs[static_cast<size_t>(rem[i])].lf;
        scaled = std::isfinite(lf) ? (lf - lo) / (hi - lo) : (lf < 0.0 ? 0.0 : 1.0);
      }
      w[i] = degenerate ? 1.0 : std::exp(-scaled / temp);
      sum += w[i];
    }
    const double u = rng.uniform() * sum;
    double acc = 0.0;
    size_t sel = rem.size() - 1;
    for (size_t i = 0; i < rem.size(); ++i) {
      acc += w[i];
      if (u < acc) {
        sel = i;
        break;
      }
    }
    chosen.push_back(rem[sel]);
    rem.erase(rem.begin() + static_cast<std::ptrdiff_t>(sel));
  }

  std::vector<char> taken(static_cast<size_t>(total), 0);
  std::vector<SubdomainRecord> out;
  out.reserve(chosen.size());
  for (int idx : chosen) {
    taken[static_cast<size_t>(idx)] = 1;
    out.push_back(std::move(recs[static_cast<size_t>(idx)]));
  }
  std::vector<SubdomainRecord> keep;
  keep.reserve(static_cast<size_t>(total) - chosen.size());
  for (int i = 0; i < total; ++i)
    if (!taken[static_cast<size_t>(i)]) keep.push_back(std::move(recs[static_cast<size_t>(i)]));
  recs = std::move(keep);
  return out;
}

SplitResult split(const SubdomainRecord& rec, double top_percent, double min_width,
                  std::int64_t next_id) {
  const BoxDomain& box = rec.box;
  const int d = box.dim();
  const Vector width = box.width();

  int k = 0;
  if (!rec.top.empty()) {
    const std::int64_t stored = static_cast<std::int64_t>(rec.top.size());
    if (rec.samples > 0) {
      k = static_cast<int>(std::clamp<std::int64_t>(
          std::llround(top_percent / 100.0 * static_cast<double>(rec.samples)), 1, stored));
    } else {
      k = static_cast<int>(stored);
    }
  }

  auto best_axis = [&](bool use_samples) {
    int axis = -1;
    double best = -1.0;
    for (int j = 0; j < d; ++j) {
      if (width[j] <= min_width) continue;
      double score = width[j];
      if (use_samples) {
        const double mid = 0.5 * (box.lower()[j] + box.upper()[j]);
        int n_lo = 0;
        for (int i = 0; i < k; ++i)
          if (rec.top[static_cast<size_t>(i)].u[j] <= mid) ++n_lo;
        score = width[j] * std::abs(2 * n_lo - k);
      }
      if (score > best) {
        best = score;
        axis = j;
      }
    }
    return std::pair<int, double>{axis, best};
  };

  auto [axis, score] = k > 0 ? best_axis(true) : best_axis(false);
  if (k > 0 && axis >= 0 && score == 0.0) axis = best_axis(false).first;
  if (axis < 0) throw std::invalid_argument("split: no axis above the width floor");

  const double mid = 0.5 * (box.lower()[axis] + box.upper()[axis]);
  Vector lo_hi = box.upper(), hi_lo = box.lower();
  lo_hi[axis] = mid;
  hi_lo[axis] = mid;

  SplitResult res;
  res.axis = axis;
  res.lo.box = BoxDomain(box.lower(), lo_hi);
  res.hi.box = BoxDomain(hi_lo, box.upper());
  for (SubdomainRecord* child : {&res.lo, &res.hi}) {
    child->depth = rec.depth + 1;
    child->parent = rec.id;
    child->log_vol = rec.log_vol + std::log(0.5);
  }
  res.lo.id = next_id;
  res.hi.id = next_id + 1;

  for (const TopSample& s : rec.top)
    (s.u[axis] <= mid ? res.lo : res.hi).top.push_back(s);
  for (SubdomainRecord* child : {&res.lo, &res.hi}) {
    if (!child->top.empty()) {
      child->uf = child->top.front().value;
      child->best = child->top.front().u;
    }
  }
  return res;
}

double prune(DomainPool& pool, double incumbent_uf,
             const std::function<void(const SubdomainRecord&)>* on_prune) {
  auto& recs = pool.records();
  double removed = 0.0;
  std::vector<SubdomainRecord> keep;
  keep.reserve(recs.size());
  for (auto& r : recs) {
    if (r.lf > incumbent_uf) {
      removed += std::exp(r.log_vol);
      if (on_prune != nullptr && *on_prune) (*on_prune)(r);
    } else {
      keep.push_back(std::move(r));
    }
  }
  recs = std::move(keep);
  return removed;
}

namespace {

void merge_report(SubdomainRecord& rec, SearchReport&& rep, int top_capacity) {
  rec.samples += rep.samples;
  if (rep.uf < rec.uf) {
    rec.uf = rep.uf;
    rec.best = rep.best;
  }
  if (rec.top.empty()) {
    rec.top = std::move(rep.top);
  } else if (!rep.top.empty()) {
    std::vector<TopSample> merged;
    merged.reserve(rec.top.size() + rep.top.size());
    std::merge(rec.top.begin(), rec.top.end(), rep.top.begin(), rep.top.end(),
               std::back_inserter(merged),
               [](const TopSample& a, const TopSample& b) { return a.value < b.value; });
    if (static_cast<int>(merged.size()) > top_capacity) merged.resize(static_cast<size_t>(top_capacity));
    rec.top = std::move(merged);
  }
}

}  // namespace

PlanResult plan(std::shared_ptr<const Objective> objective, const BoxDomain& root,
                const PlannerConfig& cfg, std::shared_ptr<const Bounder> bounder,
                const Vector* warm_start, const PlanHooks* hooks) {
  const std::function<void(const SubdomainRecord&)>* on_prune =
      hooks != nullptr && hooks->on_prune ? &hooks->on_prune : nullptr;
  if (!objective) throw std::invalid_argument("plan: null objective");
  if (root.dim() != objective->dim()) throw std::invalid_argument("plan: box dimension mismatch");
  if (cfg.batch <= 0) throw std::invalid_argument("plan: batch must be positive");

  if (!bounder) {
    if (auto go = std::dynamic_pointer_cast<const GraphObjective>(objective)) {
      bounder = std::make_shared<CrownBounder>(go, cfg.bound_mode, cfg.alpha);
    } else if (std::dynamic_pointer_cast<const SyntheticObjective>(objective)) {
      bounder = std::make_shared<SeparableBounder>();
    } else {
      throw std::invalid_argument("plan: objective needs an explicit bounder");
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto out_of_time = [&] {
    return cfg.term.wall_clock_ms > 0.0 && elapsed_ms() >= cfg.term.wall_clock_ms;
  };

  PlanResult result;
  DomainPool pool;
  Rng pick_rng(mix_seed(cfg.seed, 1));
  std::int64_t next_id = 1;
  double pruned_cum = 0.0;
  double retired_min_lf = std::numeric_limits<double>::infinity();

  auto current_min_lf = [&] {
    const double m = std::min(pool.min_lf(), retired_min_lf);
    return std::isfinite(m) || pool.size() > 0 ? m : result.uf;
  };
  auto push_trace = [&](int iter, double selected_vol) {
    TraceRow row;
    row.iter = iter;
    row.uf = result.uf;
    row.min_lf = current_min_lf();
    row.pruned_vol = pruned_cum;
    row.selected_vol = selected_vol;
    row.pool_size = static_cast<std::int64_t>(pool.size());
    row.samples = result.samples;
    row.wall_ms = elapsed_ms();
    result.trace.push_back(row);
  };

  {
    SearcherConfig scfg = cfg.search;
    scfg.seed = mix_seed(cfg.seed, 0);
    const std::vector<const Vector*> warms{warm_start};
    std::vector<SearchReport> reports = batch_search(*objective, {root}, scfg, &warms);
    SearchReport& rep = reports[0];
    if (!rep.ok) throw std::runtime_error("plan: root search failed: " + rep.error);

    SubdomainRecord rec;
    rec.box = root;
    rec.id = 0;
    rec.log_vol = 0.0;
    rec.lf = bounder->lower(root, &rep);
    merge_report(rec, std::move(reports[0]), cfg.search.top_capacity);
    result.uf = rec.uf;
    result.best = rec.best;
    result.samples = rec.samples;
    pool.insert(std::move(rec));
    pruned_cum += prune(pool, result.uf, on_prune);
    push_trace(0, 1.0);
  }

  std::string stop;
  int iter = 0;
  while (true) {
    if (result.uf <= cfg.term.target_objective) {
      stop = "target";
      break;
    }
    if (pool.empty()) {
      stop = "pool-exhausted";
      break;
    }
    if (iter >= cfg.term.max_iterations) {
      stop = "max-iterations";
      break;
    }
    if (out_of_time()) {
      stop = "wall-clock";
      break;
    }
    ++iter;

    std::vector<SubdomainRecord> picked =
        pick_out(pool, cfg.batch, cfg.eta, cfg.temperature, pick_rng);
    double selected_vol = 0.0;
    for (const auto& r : picked) selected_vol += std::exp(r.log_vol);

    std::vector<SubdomainRecord> children;
    children.reserve(picked.size() * 2);
    for (SubdomainRecord& rec : picked) {
      if (rec.box.max_width() <= cfg.min_width) {
        retired_min_lf = std::min(retired_min_lf, rec.lf);
        continue;
      }
      SplitResult sr = split(rec, cfg.top_percent, cfg.min_width, next_id);
      next_id += 2;
      children.push_back(std::move(sr.lo));
      children.push_back(std::move(sr.hi));
    }

    if (!children.empty()) {
      std::vector<BoxDomain> boxes;
      std::vector<const Vector*> warms;
      boxes.reserve(children.size());
      warms.reserve(children.size());
      for (const auto& c : children) {
        boxes.push_back(c.box);
        warms.push_back(c.best.size() > 0 ? &c.best : nullptr);
      }
      SearcherConfig scfg = cfg.search;
      scfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(iter) + 1);
      std::vector<SearchReport> reports = batch_search(*objective, boxes, scfg, &warms);

      for (size_t i = 0; i < children.size(); ++i) {
        SubdomainRecord& c = children[i];
        const SearchReport& rep = reports[i];
        result.samples += rep.samples;
        c.lf = bounder->lower(c.box, &rep);
        merge_report(c, std::move(reports[i]), cfg.search.top_capacity);
        if (c.uf < result.uf) {
          result.uf = c.uf;
          result.best = c.best;
        }
        pool.insert(std::move(c));
      }
    }

    pruned_cum += prune(pool, result.uf, on_prune);
    push_trace(iter, selected_vol);
  }

  result.min_lf = current_min_lf();
  result.certified = bounder->sound();
  result.iterations = iter;
  result.stop_reason = stop;
  return result;
}

PlanResult sample_only_plan(std::shared_ptr<const Objective> objective, const BoxDomain& root,
                            const PlannerConfig& cfg, const Vector* warm_start) {
  if (!objective) throw std::invalid_argument("sample_only_plan: null objective");
  if (root.dim() != objective->dim())
    throw std::invalid_argument("sample_only_plan: box dimension mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  SearcherConfig scfg = cfg.search;
  scfg.seed = mix_seed(cfg.seed, 0);
  const std::vector<const Vector*> warms{warm_start};
  std::vector<SearchReport> reports = batch_search(*objective, {root}, scfg, &warms);
  SearchReport& rep = reports[0];
  if (!rep.ok) throw std::runtime_error("sample_only_plan: search failed: " + rep.error);
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  PlanResult result;
  result.uf = rep.uf;
  result.best = rep.best;
  result.min_lf = -std::numeric_limits<double>::infinity();
  result.certified = false;
  result.samples = rep.samples;
  result.iterations = static_cast<int>(rep.uf_history.size());
  result.stop_reason = "sampler-budget";
  for (size_t i = 0; i < rep.uf_history.size(); ++i) {
    TraceRow row;
    row.iter = static_cast<int>(i);
    row.uf = rep.uf_history[i];
    row.min_lf = -std::numeric_limits<double>::infinity();
    row.pruned_vol = 0.0;
    row.selected_vol = i == 0 ? 1.0 : 0.0;
    row.pool_size = 1;
    row.samples = rep.samples_history[i];
    row.wall_ms = i + 1 == rep.uf_history.size() ? wall : 0.0;
    result.trace.push_back(row);
  }
  return result;
}

}  // namespace babplan
