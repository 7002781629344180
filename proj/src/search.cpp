#include "babplan/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "babplan/parallel.hpp"
#include "babplan/rng.hpp"

namespace babplan {

const char* search_method_name(SearchMethod m) {
  switch (m) {
    case SearchMethod::kCem: return "cem";
    case SearchMethod::kMppi: return "mppi";
    case SearchMethod::kGd: return "gd";
  }
  return "?";
}

SearchMethod parse_search_method(const std::string& name) {
  if (name == "cem") return SearchMethod::kCem;
  if (name == "mppi") return SearchMethod::kMppi;
  if (name == "gd") return SearchMethod::kGd;
  throw std::invalid_argument("unknown search method '" + name + "'");
}

namespace {

Vector clamp_to(const BoxDomain& box, Vector u) {
  for (int j = 0; j < u.size(); ++j) u[j] = std::clamp(u[j], box.lower()[j], box.upper()[j]);
  return u;
}

// Funnels every evaluated batch into the running report: incumbent, top-K
// samples (max-heap keyed on value) and watched-node extrema.
class SampleSink {
 public:
  SampleSink(const Objective& f, int capacity) : f_(f), cap_(std::max(capacity, 1)) {}

  Vector consume(const Matrix& batch) {
    Vector v = f_.evaluate(batch, &report_.stats);
    report_.samples += batch.rows();
    for (int i = 0; i < v.size(); ++i) {
      if (v[i] < report_.uf) {
        report_.uf = v[i];
        report_.best = batch.row(i).transpose();
      }
      if (static_cast<int>(heap_.size()) < cap_) {
        heap_.push_back({v[i], batch.row(i).transpose()});
        std::push_heap(heap_.begin(), heap_.end(), value_less);
      } else if (v[i] < heap_.front().value) {
        std::pop_heap(heap_.begin(), heap_.end(), value_less);
        heap_.back() = {v[i], batch.row(i).transpose()};
        std::push_heap(heap_.begin(), heap_.end(), value_less);
      }
    }
    return v;
  }

  void mark_iteration() {
    report_.uf_history.push_back(report_.uf);
    report_.samples_history.push_back(report_.samples);
  }

  double current_uf() const { return report_.uf; }
  const Vector& current_best() const { return report_.best; }

  SearchReport finish() {
    std::sort(heap_.begin(), heap_.end(),
              [](const TopSample& a, const TopSample& b) { return a.value < b.value; });
    report_.top = std::move(heap_);
    return std::move(report_);
  }

 private:
  static bool value_less(const TopSample& a, const TopSample& b) { return a.value < b.value; }
  const Objective& f_;
  int cap_;
  std::vector<TopSample> heap_;
  SearchReport report_;
};

// Ensemble of independent diagonal-Gaussian instances refit on their own
// elites every iteration; the global incumbent is re-injected as an extra
// sample so the report can never regress with added budget.
SearchReport run_cem(const Objective& f, const BoxDomain& box, const SearcherConfig& cfg,
                     const Vector* warm) {
  const int d = box.dim();
  const CemParams& p = cfg.cem;
  const int agents = std::max(1, p.agents);
  const int spi = std::max(1, cfg.samples_per_iter / agents);
  Rng rng(cfg.seed);
  SampleSink sink(f, cfg.top_capacity);

  const Vector width = box.upper() - box.lower();
  Vector var_floor(d), var0(d);
  for (int j = 0; j < d; ++j) {
    const double fs = p.jitter * width[j];
    var_floor[j] = fs * fs;
    const double s0 = p.init_sigma * width[j];
    var0[j] = std::max(s0 * s0, var_floor[j]);
  }

  std::vector<Vector> mu(static_cast<size_t>(agents)), var(static_cast<size_t>(agents), var0);
  for (int a = 0; a < agents; ++a) {
    Vector m(d);
    for (int j = 0; j < d; ++j) m[j] = rng.uniform(box.lower()[j], box.upper()[j]);
    mu[static_cast<size_t>(a)] = std::move(m);
  }
  Vector incumbent = warm != nullptr ? clamp_to(box, *warm) : box.center();
  mu[0] = incumbent;

  for (int it = 0; it < cfg.iterations; ++it) {
    Matrix batch(agents * spi + 1, d);
    for (int a = 0; a < agents; ++a) {
      const Vector& m = mu[static_cast<size_t>(a)];
      const Vector& v = var[static_cast<size_t>(a)];
      for (int i = 0; i < spi; ++i) {
        const int row = a * spi + i;
        for (int j = 0; j < d; ++j) {
          const double x = m[j] + std::sqrt(v[j]) * rng.normal();
          batch(row, j) = std::clamp(x, box.lower()[j], box.upper()[j]);
        }
      }
    }
    batch.row(agents * spi) = incumbent.transpose();

    const Vector vals = sink.consume(batch);

    for (int a = 0; a < agents; ++a) {
      std::vector<int> idx(static_cast<size_t>(spi));
      std::iota(idx.begin(), idx.end(), a * spi);
      if (a == 0) idx.push_back(agents * spi);
      const int n_el = std::min<int>(static_cast<int>(idx.size()), std::max(1, p.elites));
      std::partial_sort(idx.begin(), idx.begin() + n_el, idx.end(), [&](int x, int y) {
        return vals[x] != vals[y] ? vals[x] < vals[y] : x < y;
      });
      Vector m = Vector::Zero(d), v = Vector::Zero(d);
      for (int e = 0; e < n_el; ++e) m += batch.row(idx[static_cast<size_t>(e)]).transpose();
      m /= n_el;
      for (int e = 0; e < n_el; ++e) {
        const Vector diff = batch.row(idx[static_cast<size_t>(e)]).transpose() - m;
        v += diff.cwiseProduct(diff);
      }
      v /= n_el;
      mu[static_cast<size_t>(a)] = std::move(m);
      var[static_cast<size_t>(a)] = v.cwiseMax(var_floor);
    }

    incumbent = sink.current_best();
    sink.mark_iteration();
  }
  return sink.finish();
}

// One instance per (noise ratio, temperature ratio) pair, each keeping a mean
// action updated by exponentially weighted averaging of its own samples.
SearchReport run_mppi(const Objective& f, const BoxDomain& box, const SearcherConfig& cfg,
                      const Vector* warm) {
  const int d = box.dim();
  const MppiParams& p = cfg.mppi;
  std::vector<double> noise = p.noise_ratios.empty() ? std::vector<double>{1.0} : p.noise_ratios;
  std::vector<double> temps =
      p.temperature_ratios.empty() ? std::vector<double>{1.0} : p.temperature_ratios;
  const int instances = static_cast<int>(noise.size() * temps.size());
  const int m = std::max(1, cfg.samples_per_iter / instances);
  Rng rng(cfg.seed);
  SampleSink sink(f, cfg.top_capacity);

  const Vector width = box.upper() - box.lower();
  Vector init = warm != nullptr ? clamp_to(box, *warm) : box.center();
  std::vector<Vector> mu(static_cast<size_t>(instances), init);

  for (int it = 0; it < cfg.iterations; ++it) {
    Matrix batch(instances * m + 1, d);
    for (int inst = 0; inst < instances; ++inst) {
      const double nr = noise[static_cast<size_t>(inst) % noise.size()];
      const Vector& mean = mu[static_cast<size_t>(inst)];
      for (int i = 0; i < m; ++i) {
        const int row = inst * m + i;
        for (int j = 0; j < d; ++j) {
          const double x = mean[j] + p.noise_frac * nr * width[j] * rng.normal();
          batch(row, j) = std::clamp(x, box.lower()[j], box.upper()[j]);
        }
      }
    }
    batch.row(instances * m) = (it == 0 ? init : Vector(sink.current_best())).transpose();

    const Vector vals = sink.consume(batch);

    for (int inst = 0; inst < instances; ++inst) {
      const double tr = temps[static_cast<size_t>(inst) / noise.size()];
      const double T = std::max(1e-12, p.temperature * tr);
      double vmin = vals[inst * m];
      for (int i = 1; i < m; ++i) vmin = std::min(vmin, vals[inst * m + i]);
      Vector acc = Vector::Zero(d);
      double wsum = 0.0;
      for (int i = 0; i < m; ++i) {
        const double w = std::exp(-(vals[inst * m + i] - vmin) / T);
        acc += w * batch.row(inst * m + i).transpose();
        wsum += w;
      }
      mu[static_cast<size_t>(inst)] = clamp_to(box, acc / wsum);
    }
    sink.mark_iteration();
  }
  return sink.finish();
}

// Multi-start projected descent with a step-size ratio assigned round-robin
// over the starts. Gradients are exact reverse-mode values (subgradient 0 at
// kinks); each iterate is projected back onto the box.
SearchReport run_gd(const Objective& f, const BoxDomain& box, const SearcherConfig& cfg,
                    const Vector* warm) {
  if (!f.has_gradient())
    throw std::invalid_argument("gd search requires an objective with gradients");
  const int d = box.dim();
  const GdParams& p = cfg.gd;
  const std::vector<double> ratios =
      p.step_ratios.empty() ? std::vector<double>{1.0} : p.step_ratios;
  const int starts = std::max(1, cfg.samples_per_iter);
  Rng rng(cfg.seed);
  SampleSink sink(f, cfg.top_capacity);

  const Vector width = box.upper() - box.lower();
  Matrix pts(starts, d);
  for (int i = 0; i < starts; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform(box.lower()[j], box.upper()[j]);
  pts.row(0) = (warm != nullptr ? clamp_to(box, *warm) : box.center()).transpose();

  for (int it = 0; it < cfg.iterations; ++it) {
    sink.consume(pts);
    const Matrix grad = f.gradient(pts);
    for (int i = 0; i < starts; ++i) {
      const double step = p.base_step * ratios[static_cast<size_t>(i) % ratios.size()];
      for (int j = 0; j < d; ++j) {
        const double x = pts(i, j) - step * width[j] * grad(i, j);
        pts(i, j) = std::clamp(x, box.lower()[j], box.upper()[j]);
      }
    }
    sink.mark_iteration();
  }
  return sink.finish();
}

}  // namespace

SearchReport search(const Objective& f, const BoxDomain& box, const SearcherConfig& cfg,
                    const Vector* warm_start) {
  if (box.dim() != f.dim()) throw std::invalid_argument("search: box dimension mismatch");
  if (cfg.iterations <= 0 || cfg.samples_per_iter <= 0)
    throw std::invalid_argument("search: iterations and samples per iteration must be positive");
  switch (cfg.method) {
    case SearchMethod::kCem: return run_cem(f, box, cfg, warm_start);
    case SearchMethod::kMppi: return run_mppi(f, box, cfg, warm_start);
    case SearchMethod::kGd: return run_gd(f, box, cfg, warm_start);
  }
  throw std::logic_error("search: unknown method");
}

std::vector<SearchReport> batch_search(const Objective& f, const std::vector<BoxDomain>& boxes,
                                       const SearcherConfig& cfg,
                                       const std::vector<const Vector*>* warm_starts) {
  if (warm_starts != nullptr && warm_starts->size() != boxes.size())
    throw std::invalid_argument("batch_search: warm start list size mismatch");
  std::vector<SearchReport> out(boxes.size());
  parallel_chunks(static_cast<std::int64_t>(boxes.size()), [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      SearcherConfig local = cfg;
      local.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
      const Vector* warm = warm_starts != nullptr ? (*warm_starts)[static_cast<size_t>(i)] : nullptr;
      try {
        out[static_cast<size_t>(i)] = search(f, boxes[static_cast<size_t>(i)], local, warm);
      } catch (const std::exception& ex) {
        out[static_cast<size_t>(i)].ok = false;
        out[static_cast<size_t>(i)].error = ex.what();
      }
    }
  });
  return out;
}

}  // namespace babplan
