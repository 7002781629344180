#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "babplan/graph.hpp"
#include "babplan/objective.hpp"
#include "babplan/rng.hpp"

using namespace babplan;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> vals) {
  Matrix m(static_cast<std::int64_t>(vals.size()),
           static_cast<std::int64_t>(vals.begin()->size()));
  int i = 0;
  for (const auto& r : vals) {
    int j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> vals) {
  Vector v(static_cast<std::int64_t>(vals.size()));
  int j = 0;
  for (double x : vals) v[j++] = x;
  return v;
}

// y = relu(W x + b) summed, with a hinge on a 2-d slice.
CompGraph small_graph() {
  CompGraph g;
  const int in = g.add_input(3);
  Matrix W = rows({{1.0, -2.0, 0.5}, {0.0, 1.0, 1.0}});
  const int lin = g.add_linear(in, W, vec({0.1, -0.2}));
  const int act = g.add_relu(lin);
  const int sq = g.add_squared_distance(act, vec({0.0, 0.0}), vec({1.0, 2.0}));
  const int sl = g.add_slice(in, 0, 2);
  const int hinge = g.add_penalty_hinge(sl, vec({0.5, 0.5}), 0.3, 10.0);
  const int out = g.add_sum({sq, hinge});
  g.set_output(out);
  g.finalize();
  return g;
}

double small_graph_by_hand(const Vector& x) {
  const double z0 = x[0] - 2 * x[1] + 0.5 * x[2] + 0.1;
  const double z1 = x[1] + x[2] - 0.2;
  const double a0 = std::max(0.0, z0), a1 = std::max(0.0, z1);
  const double sq = a0 * a0 + 2 * a1 * a1;
  const double dist = std::hypot(x[0] - 0.5, x[1] - 0.5);
  return sq + 10.0 * std::max(0.0, 0.3 - dist);
}

}  // namespace

TEST_CASE("evaluate matches a hand-computed expression") {
  CompGraph g = small_graph();
  Rng rng(7);
  Matrix batch(40, 3);
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < 3; ++j) batch(i, j) = rng.uniform(-2.0, 2.0);
  const Vector got = evaluate(g, batch);
  for (int i = 0; i < batch.rows(); ++i)
    CHECK(got[i] == doctest::Approx(small_graph_by_hand(batch.row(i).transpose())).epsilon(1e-12));
}

TEST_CASE("evaluate is bitwise stable under batch decomposition") {
  CompGraph g = small_graph();
  Rng rng(11);
  Matrix batch(33, 3);
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < 3; ++j) batch(i, j) = rng.uniform(-1.0, 1.0);
  const Vector whole = evaluate(g, batch);
  for (int i = 0; i < batch.rows(); ++i) {
    const Vector one = evaluate(g, batch.row(i));
    CHECK(whole[i] == one[0]);  // exact: fixed-order accumulation
  }
}

TEST_CASE("watch stats record exact per-node extrema") {
  CompGraph g = small_graph();
  const std::vector<int> watch{1};  // the linear node feeding relu
  Matrix batch = rows({{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}});
  WatchStats stats;
  evaluate(g, batch, &watch, &stats);
  REQUIRE(stats.count(1) == 1);
  const NodeStats& st = stats.at(1);
  CHECK(st.count == 3);
  // Column 0 of the preactivation: {1.1, -1.9, 0.6}; column 1: {-0.2, 0.8, 0.8}.
  CHECK(st.min[0] == doctest::Approx(-1.9));
  CHECK(st.max[0] == doctest::Approx(1.1));
  CHECK(st.min[1] == doctest::Approx(-0.2));
  CHECK(st.max[1] == doctest::Approx(0.8));
}

TEST_CASE("watch stats merge over separate passes like one pass") {
  CompGraph g = small_graph();
  Rng rng(3);
  Matrix batch(20, 3);
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < 3; ++j) batch(i, j) = rng.uniform(-2.0, 2.0);
  const std::vector<int> watch{1, 2};
  WatchStats whole, split;
  evaluate(g, batch, &watch, &whole);
  evaluate(g, batch.topRows(7), &watch, &split);
  evaluate(g, batch.bottomRows(13), &watch, &split);
  for (int id : watch) {
    CHECK(split.at(id).count == whole.at(id).count);
    CHECK(split.at(id).min == whole.at(id).min);
    CHECK(split.at(id).max == whole.at(id).max);
  }
}

TEST_CASE("gradient matches central differences away from kinks") {
  CompGraph g = small_graph();
  auto f = [&](const Vector& x) { return evaluate(g, x.transpose())[0]; };
  Rng rng(5);
  int checked = 0;
  while (checked < 12) {
    Vector x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-2.0, 2.0);
    // Keep clear of relu and hinge kinks so the numerical derivative is valid.
    const double z0 = x[0] - 2 * x[1] + 0.5 * x[2] + 0.1;
    const double z1 = x[1] + x[2] - 0.2;
    const double dist = std::hypot(x[0] - 0.5, x[1] - 0.5);
    if (std::abs(z0) < 1e-3 || std::abs(z1) < 1e-3 || std::abs(dist - 0.3) < 1e-3 || dist < 1e-3)
      continue;
    const Matrix got = gradient(g, x.transpose());
    const Vector want = oracles::finite_diff(f, x);
    for (int j = 0; j < 3; ++j) CHECK(got(0, j) == doctest::Approx(want[j]).epsilon(1e-5));
    ++checked;
  }
}

TEST_CASE("interval forward encloses sampled node outputs") {
  CompGraph g = small_graph();
  const BoxDomain box(vec({-1.0, -0.5, 0.0}), vec({1.0, 0.5, 2.0}));
  const IntervalSet iv = interval_forward(g, box);
  Rng rng(9);
  Matrix batch(200, 3);
  for (int i = 0; i < batch.rows(); ++i)
    for (int j = 0; j < 3; ++j) batch(i, j) = rng.uniform(box.lower()[j], box.upper()[j]);
  std::vector<int> all(static_cast<size_t>(g.size()));
  for (int id = 0; id < g.size(); ++id) all[static_cast<size_t>(id)] = id;
  WatchStats stats;
  evaluate(g, batch, &all, &stats);
  for (int id = 0; id < g.size(); ++id) {
    const NodeStats& st = stats.at(id);
    for (int j = 0; j < st.min.size(); ++j) {
      CHECK(iv.lo[static_cast<size_t>(id)][j] <= st.min[j] + 1e-12);
      CHECK(iv.hi[static_cast<size_t>(id)][j] >= st.max[j] - 1e-12);
    }
  }
}

TEST_CASE("builder rejects malformed graphs") {
  CompGraph g;
  const int in = g.add_input(2);
  CHECK_THROWS_AS(g.add_slice(in, 1, 5), std::invalid_argument);  // out of range
  const int lin = g.add_linear(in, Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK_THROWS_AS(g.set_output(lin), std::invalid_argument);  // output must be scalar
  CHECK_THROWS_AS(g.finalize(), std::invalid_argument);       // output never set
}

TEST_CASE("evaluate rejects non-finite input") {
  CompGraph g = small_graph();
  Matrix bad = rows({{0.0, std::numeric_limits<double>::quiet_NaN(), 0.0}});
  CHECK_THROWS_AS(evaluate(g, bad), std::invalid_argument);
}

TEST_CASE("synthetic objective value, gradient, and frozen constants") {
  SyntheticObjective f(3);
  auto scalar = [&](const Vector& u) { return f.evaluate(u.transpose())[0]; };
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    Vector u(3);
    for (int j = 0; j < 3; ++j) u[j] = rng.uniform(-1.0, 1.0);
    double want = 0.0;
    for (int j = 0; j < 3; ++j) want += 5 * u[j] * u[j] + std::cos(50 * u[j]);
    CHECK(scalar(u) == doctest::Approx(want).epsilon(1e-12));
    const Vector g = oracles::finite_diff(scalar, u);
    const Matrix got = f.gradient(u.transpose());
    for (int j = 0; j < 3; ++j) CHECK(got(0, j) == doctest::Approx(g[j]).epsilon(1e-4));
  }

  // The frozen 1-d constants agree with a fresh dense grid plus refinement.
  auto term = [](const Vector& u) { return 5 * u[0] * u[0] + std::cos(50 * u[0]); };
  const BoxDomain unit(vec({-1.0}), vec({1.0}));
  oracles::GridMin coarse = oracles::grid_min(term, unit, 200001);
  CHECK(coarse.value == doctest::Approx(SyntheticObjective::kUnitMinimum).epsilon(1e-7));
  CHECK(std::abs(coarse.argmin[0]) ==
        doctest::Approx(SyntheticObjective::kUnitArgmin).epsilon(1e-4));
}
