// Derivative engine: spatial jets and parameter gradients of the full
// attention + convex-network model, verified against central finite
// differences over a sweep of random configurations.
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "pinnafe/engine.hpp"
#include "pinnafe/errors.hpp"
#include "pinnafe/rng.hpp"

using namespace pinnafe;

namespace {

FeaturePoolSpec pool_for(int d) {
  switch (d) {
    case 1: return FeaturePoolSpec::preset("ot1d");
    case 2: return FeaturePoolSpec::preset("smooth2d");
    default: return FeaturePoolSpec::preset("smooth3d");
  }
}

Model make_model(int d, AggMode agg, int heads, int d_k, int m_out, int depth,
                 int width, uint64_t seed) {
  ModelDims dims;
  dims.d = d;
  dims.n = pool_for(d).size();
  dims.heads = heads;
  dims.d_k = d_k;
  dims.m_out = m_out;
  dims.depth = depth;
  dims.width = width;
  dims.agg = agg;
  Model m;
  m.params = ModelParams::init(dims, seed);
  m.pool = pool_for(d);
  return m;
}

// Relative error with an absolute floor, suited to FD comparisons.
double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// Central-difference spatial check of one engine at one point.
void check_spatial_fd(const Engine& eng, const double* x, int d, double tol) {
  Jet out = eng.eval_jet(x);
  const double h = 1e-5;
  for (int a = 0; a < d; ++a) {
    double xp[3] = {x[0], x[1], x[2]}, xm[3] = {x[0], x[1], x[2]};
    xp[a] += h;
    xm[a] -= h;
    double fp = eng.eval_value(xp), fm = eng.eval_value(xm);
    double f0 = eng.eval_value(x);
    CHECK(rel_err(out.g(a), (fp - fm) / (2 * h)) < tol);
    CHECK(rel_err(jet_h(out, a, a, d), (fp - 2 * f0 + fm) / (h * h)) < 50 * tol);
  }
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      double xpp[3] = {x[0], x[1], x[2]}, xpm[3] = {x[0], x[1], x[2]};
      double xmp[3] = {x[0], x[1], x[2]}, xmm[3] = {x[0], x[1], x[2]};
      xpp[a] += h; xpp[b] += h;
      xpm[a] += h; xpm[b] -= h;
      xmp[a] -= h; xmp[b] += h;
      xmm[a] -= h; xmm[b] -= h;
      double fd = (eng.eval_value(xpp) - eng.eval_value(xpm) -
                   eng.eval_value(xmp) + eng.eval_value(xmm)) /
                  (4 * h * h);
      CHECK(rel_err(jet_h(out, a, b, d), fd) < 50 * tol);
    }
}

// FD check of the parameter gradient of L(theta) = dot(seed, out-jet).
void check_param_fd(Engine& eng, const double* x, int d, const Jet& seed,
                    double tol, Rng& rng) {
  Workspace ws;
  eng.make_workspace(ws);
  ws.zero_grad();
  Jet out = eng.forward(x, d, ws);
  (void)out;
  eng.backward(seed, d, ws);
  std::vector<double> grad = ws.grad;
  eng.finalize_grad(grad.data());

  auto value = [&](void) -> double {
    Workspace w2;
    eng.make_workspace(w2);
    Jet o = eng.forward(x, d, w2);
    double s = 0.0;
    for (int c = 0; c < jet_comps(d); ++c) s += seed.c[c] * o.c[c];
    return s;
  };

  const int np = eng.param_count();
  const double h = 1e-6;
  // probe a random subset of parameters (full sweep is the acceptance job)
  int checks = std::min(np, 25);
  for (int t = 0; t < checks; ++t) {
    int j = int(rng.below(uint64_t(np)));
    double save = eng.model().params.theta[size_t(j)];
    eng.model().params.theta[size_t(j)] = save + h;
    eng.refresh();
    double fp = value();
    eng.model().params.theta[size_t(j)] = save - h;
    eng.refresh();
    double fm = value();
    eng.model().params.theta[size_t(j)] = save;
    eng.refresh();
    double fd = (fp - fm) / (2 * h);
    CHECK(rel_err(grad[size_t(j)], fd) < tol);
  }
}

}  // namespace

TEST_CASE("spatial jets match finite differences across configurations") {
  Rng rng(2024);
  struct Cfg { int d; AggMode agg; int heads, d_k, m_out, depth, width; };
  const Cfg cfgs[] = {
      {1, AggMode::Convex, 2, 4, 3, 2, 8},
      {2, AggMode::Convex, 2, 4, 4, 3, 12},
      {2, AggMode::Concat, 3, 4, 5, 2, 10},
      {2, AggMode::Identity, 2, 4, 4, 2, 8},
      {3, AggMode::Convex, 2, 4, 6, 2, 10},
      {3, AggMode::Concat, 2, 3, 4, 3, 8},
  };
  int k = 0;
  for (const auto& c : cfgs) {
    Model m = make_model(c.d, c.agg, c.heads, c.d_k, c.m_out, c.depth, c.width,
                         1000 + uint64_t(k++));
    Engine eng(std::move(m));
    for (int t = 0; t < 3; ++t) {
      double x[3] = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                     rng.uniform(0.1, 0.9)};
      check_spatial_fd(eng, x, c.d, 1e-5);
    }
  }
}

TEST_CASE("parameter gradients match finite differences") {
  Rng rng(501);
  struct Cfg { int d; AggMode agg; int heads, d_k, m_out, depth, width; };
  const Cfg cfgs[] = {
      {1, AggMode::Convex, 2, 3, 3, 2, 6},
      {2, AggMode::Convex, 2, 4, 4, 2, 8},
      {2, AggMode::Concat, 2, 3, 4, 2, 8},
      {2, AggMode::Identity, 2, 3, 4, 3, 8},
      {3, AggMode::Convex, 2, 3, 5, 2, 8},
  };
  int k = 0;
  for (const auto& c : cfgs) {
    Model m = make_model(c.d, c.agg, c.heads, c.d_k, c.m_out, c.depth, c.width,
                         7000 + uint64_t(k++));
    Engine eng(std::move(m));
    double x[3] = {rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                   rng.uniform(0.2, 0.8)};
    // seeds: value-only, gradient-only, hessian-only, and mixed
    Jet seeds[4];
    seeds[0].c[0] = 1.0;
    seeds[1].g(0) = 1.0;
    jet_h(seeds[2], 0, 0, c.d) = 1.0;
    for (int cc = 0; cc < jet_comps(c.d); ++cc)
      seeds[3].c[cc] = rng.uniform(-1, 1);
    for (const Jet& s : seeds) check_param_fd(eng, x, c.d, s, 2e-4, rng);
  }
}

TEST_CASE("value-only forward agrees with the full jet value") {
  Model m = make_model(2, AggMode::Convex, 2, 4, 4, 3, 12, 99);
  Engine eng(std::move(m));
  Workspace ws;
  eng.make_workspace(ws);
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    double x[2] = {rng.uniform01(), rng.uniform01()};
    Jet full = eng.forward(x, 2, ws);
    Jet v = eng.forward(x, 0, ws);
    CHECK(v.v() == doctest::Approx(full.v()).epsilon(1e-15));
    CHECK(eng.eval_value(x) == doctest::Approx(full.v()).epsilon(1e-15));
  }
}

TEST_CASE("analytic bypass short-circuits evaluation and has zero gradient") {
  Model m = make_model(2, AggMode::Convex, 2, 4, 4, 2, 8, 11);
  m.bypass = [](const double* x, int order_dim) {
    Jet j;
    j.c[0] = x[0] * x[0] + 3.0 * x[1];
    if (order_dim > 0) {
      j.g(0) = 2.0 * x[0];
      j.g(1) = 3.0;
      jet_h(j, 0, 0, order_dim) = 2.0;
    }
    return j;
  };
  Engine eng(std::move(m));
  double x[2] = {0.4, 0.7};
  Jet out = eng.eval_jet(x);
  CHECK(out.v() == doctest::Approx(0.16 + 2.1));
  CHECK(out.g(0) == doctest::Approx(0.8));
  CHECK(jet_h(out, 0, 0, 2) == 2.0);

  Workspace ws;
  eng.make_workspace(ws);
  ws.zero_grad();
  eng.forward(x, 2, ws);
  Jet seed;
  seed.c[0] = 1.0;
  seed.g(1) = 2.0;
  eng.backward(seed, 2, ws);
  std::vector<double> g = ws.grad;
  eng.finalize_grad(g.data());
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("identity aggregation ignores attention parameters") {
  // In ablation mode the heads are inert: the projection consumes the raw
  // features directly, and no Q/K/V offsets exist in the layout.
  ModelDims dims;
  dims.d = 2;
  dims.n = 7;
  dims.agg = AggMode::Identity;
  dims.heads = 4;
  dims.d_k = 8;
  dims.m_out = 4;
  dims.depth = 2;
  dims.width = 8;
  auto layout = ModelLayout::build(dims);
  CHECK(layout.q.empty());
  CHECK(layout.k.empty());
  CHECK(layout.v.empty());

  ModelDims cd = dims;
  cd.agg = AggMode::Convex;
  auto clayout = ModelLayout::build(cd);
  CHECK(clayout.total > layout.total);
  CHECK(clayout.q.size() == 4);
}

TEST_CASE("non-finite evaluation is reported") {
  Model m = make_model(2, AggMode::Convex, 2, 4, 4, 2, 8, 5);
  m.bypass = [](const double*, int) {
    Jet j;
    j.c[0] = std::numeric_limits<double>::quiet_NaN();
    return j;
  };
  Engine eng(std::move(m));
  double x[2] = {0.5, 0.5};
  CHECK_THROWS_AS(eng.eval_jet(x), NonFiniteError);
}

TEST_CASE("checkpoint round-trips parameters bit-exactly") {
  Model m = make_model(2, AggMode::Concat, 3, 4, 5, 3, 16, 42);
  std::string path = "engine_ckpt_test.bin";
  save_checkpoint(path, m.params, 42, m.pool.tag());
  uint64_t seed = 0;
  std::string tag;
  ModelParams back = load_checkpoint(path, &seed, &tag);
  CHECK(seed == 42);
  CHECK(tag == m.pool.tag());
  CHECK(back.dims == m.params.dims);
  REQUIRE(back.theta.size() == m.params.theta.size());
  for (size_t i = 0; i < back.theta.size(); ++i)
    CHECK(back.theta[i] == m.params.theta[i]);
  std::remove(path.c_str());
}
