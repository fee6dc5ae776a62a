// Intensity densities (histogram, smoothing, floor, pdf/cdf) and the
// monotone transport map: structural guards, identity byte round-trip,
// pushforward bookkeeping, and a short end-to-end equalization run.
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pinnafe/density.hpp"
#include "pinnafe/errors.hpp"
#include "pinnafe/image.hpp"
#include "pinnafe/ot1d.hpp"
#include "pinnafe/rng.hpp"

using namespace pinnafe;

namespace {

double sum256(const std::array<double, 256>& a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

}  // namespace

TEST_CASE("histograms bin where expected and normalize") {
  std::vector<double> vals;
  for (int i = 0; i < 300; ++i) vals.push_back(0.2);
  for (int i = 0; i < 100; ++i) vals.push_back(0.8);
  IntensityDensity d = IntensityDensity::from_samples(vals);
  CHECK(d.raw[size_t(int(0.2 * 256))] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(d.raw[size_t(int(0.8 * 256))] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sum256(d.raw) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sum256(d.mass) == doctest::Approx(1.0).epsilon(1e-12));
  // out-of-range samples clamp to the end bins
  IntensityDensity e = IntensityDensity::from_samples({-0.5, 1.5});
  CHECK(e.raw[0] == doctest::Approx(0.5));
  CHECK(e.raw[255] == doctest::Approx(0.5));
  CHECK_THROWS_AS(IntensityDensity::from_samples({}), SizeMismatch);
}

TEST_CASE("binomial smoothing spreads a spike and conserves mass") {
  IntensityDensity d;
  d.raw[100] = 1.0;
  d.rebuild_mass();
  CHECK(d.mass[98] == doctest::Approx(1.0 / 16).epsilon(1e-14));
  CHECK(d.mass[99] == doctest::Approx(4.0 / 16).epsilon(1e-14));
  CHECK(d.mass[100] == doctest::Approx(6.0 / 16).epsilon(1e-14));
  CHECK(d.mass[101] == doctest::Approx(4.0 / 16).epsilon(1e-14));
  CHECK(d.mass[102] == doctest::Approx(1.0 / 16).epsilon(1e-14));
  CHECK(sum256(d.mass) == doctest::Approx(1.0).epsilon(1e-14));

  // at the edge, the outside taps fold back into the inside ones
  IntensityDensity e;
  e.raw[0] = 1.0;
  e.rebuild_mass();
  CHECK(e.mass[0] == doctest::Approx(6.0 / 11).epsilon(1e-14));
  CHECK(e.mass[1] == doctest::Approx(4.0 / 11).epsilon(1e-14));
  CHECK(e.mass[2] == doctest::Approx(1.0 / 11).epsilon(1e-14));
  CHECK(sum256(e.mass) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("flooring keeps the density positive and normalized") {
  IntensityDensity d;
  d.raw[40] = 1.0;
  d.rebuild_mass();
  d.apply_floor(0.5);
  CHECK(sum256(d.mass) == doctest::Approx(1.0).epsilon(1e-12));
  double lo = *std::min_element(d.mass.begin(), d.mass.end());
  // lifted mass sums to at most 1 + floor_frac before renormalization
  CHECK(lo >= 0.5 / 256.0 / 1.5 - 1e-15);
}

TEST_CASE("uniform density has flat pdf, linear cdf, zero slope") {
  IntensityDensity u = IntensityDensity::uniform();
  for (double y : {0.0, 0.1, 0.37, 0.5, 0.93, 1.0}) {
    CHECK(u.pdf(y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(u.pdf_prime(y) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(u.cdf(y) == doctest::Approx(y).epsilon(1e-10));
    CHECK(u.raw_cdf(y) == doctest::Approx(y).epsilon(1e-10));
  }
}

TEST_CASE("pdf integrates to one and matches its stated derivative") {
  Rng rng(314);
  std::vector<double> vals;
  for (int i = 0; i < 5000; ++i) {
    double v = rng.uniform01();
    vals.push_back(v * v);  // skewed toward 0
  }
  IntensityDensity d = IntensityDensity::from_samples(vals);
  CHECK(d.cdf(0.0) == 0.0);
  CHECK(d.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-10));
  // monotone
  double prev = 0.0;
  for (int k = 0; k <= 100; ++k) {
    double c = d.cdf(k / 100.0);
    CHECK(c >= prev - 1e-14);
    prev = c;
  }
  // derivative by centered difference well inside a linear segment
  for (int k : {30, 77, 140, 200}) {
    double y = (k + 0.8) / 256.0;  // segment midpoints sit at half-integers
    double h = 1e-7;
    double fd = (d.pdf(y + h) - d.pdf(y - h)) / (2 * h);
    CHECK(d.pdf_prime(y) == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("staircase cdf of a one-bin histogram ramps inside the bin") {
  IntensityDensity d = IntensityDensity::from_samples({0.5});  // bin 128
  CHECK(d.raw_cdf(128.0 / 256.0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.raw_cdf(128.5 / 256.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.raw_cdf(129.0 / 256.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.raw_cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ks distance: zero on self, symmetric, hand value for a spike") {
  IntensityDensity u = IntensityDensity::uniform();
  IntensityDensity d;
  d.raw[0] = 1.0;
  d.rebuild_mass();
  CHECK(ks_distance(u, u) == 0.0);
  CHECK(ks_distance(d, u) == doctest::Approx(ks_distance(u, d)).epsilon(1e-15));
  // spike smooths to [6,4,1]/11 in bins 0..2; the gap peaks at bin 2:
  // |3/256 - 1| = 253/256
  CHECK(ks_distance(d, u) == doctest::Approx(253.0 / 256.0).epsilon(1e-12));
}

TEST_CASE("identity map fixes nodes and round-trips gray bytes") {
  MonotoneMap id = MonotoneMap::identity();
  REQUIRE(id.t.size() == 256);
  for (int k = 0; k < 256; ++k) {
    CHECK(id.t[size_t(k)] == double(k) / 255.0);
    CHECK(id(MonotoneMap::node(k)) ==
          doctest::Approx(MonotoneMap::node(k)).epsilon(1e-14));
  }
  // all 256 byte levels survive application + quantization unchanged
  Image img(16, 16, 1);
  for (int i = 0; i < 256; ++i) img.data[size_t(i)] = float(i) / 255.0f;
  Image out = apply_enhancement(img, id);
  for (int i = 0; i < 256; ++i) {
    int before = int(std::lround(double(img.data[size_t(i)]) * 255.0));
    int after = int(std::lround(double(out.data[size_t(i)]) * 255.0));
    CHECK(after == before);
  }
}

TEST_CASE("map construction rescales, counts dips, and stays monotone") {
  std::vector<double> raw(256);
  for (int k = 0; k < 256; ++k) raw[size_t(k)] = 0.3 + 0.4 * k / 255.0;
  MonotoneMap m = MonotoneMap::from_node_values(raw);
  CHECK(m.raw_violations == 0);
  CHECK(m.t.front() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(m.t.back() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.t[128] == doctest::Approx(128.0 / 255.0).epsilon(1e-12));

  raw[100] = raw[99] - 0.01;  // one dip
  MonotoneMap v = MonotoneMap::from_node_values(raw);
  CHECK(v.raw_violations == 1);  // the one decreasing step
  for (int k = 1; k < 256; ++k) CHECK(v.t[size_t(k)] >= v.t[size_t(k - 1)]);
  CHECK(v.t[100] == v.t[99]);  // running max flattens the dip

  CHECK_THROWS_AS(MonotoneMap::from_node_values(std::vector<double>(255, 0.0)),
                  SizeMismatch);
  CHECK_THROWS_AS(MonotoneMap::from_node_values(std::vector<double>(256, 0.5)),
                  TrainingDiverged);
}

TEST_CASE("interpolation between nodes is linear") {
  std::vector<double> raw(256);
  for (int k = 0; k < 256; ++k) raw[size_t(k)] = double(k) / 255.0;
  MonotoneMap m = MonotoneMap::from_node_values(raw);
  double a = MonotoneMap::node(10), b = MonotoneMap::node(11);
  CHECK(m(0.5 * (a + b)) == doctest::Approx(0.5 * (m.t[10] + m.t[11])).epsilon(1e-12));
  // clamping outside [0,1]
  CHECK(m(-1.0) == m.t.front());
  CHECK(m(2.0) == m.t.back());
}

TEST_CASE("pushforward through the identity is the identity on bins") {
  Rng rng(2718);
  std::vector<double> vals;
  for (int i = 0; i < 4000; ++i) vals.push_back(rng.uniform01());
  IntensityDensity d = IntensityDensity::from_samples(vals);
  IntensityDensity p = pushforward(d, MonotoneMap::identity());
  for (int k = 0; k < 256; ++k) CHECK(p.raw[size_t(k)] == d.raw[size_t(k)]);
  CHECK(sum256(p.raw) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identity map matches the uniform cdf exactly") {
  double sup =
      map_cdf_sup_distance(MonotoneMap::identity(), IntensityDensity::uniform());
  CHECK(sup <= 1e-12);
}

TEST_CASE("short equalization run reduces the histogram gap") {
  // skewed source: mass piled toward dark values
  Rng rng(99);
  std::vector<double> vals;
  for (int i = 0; i < 20000; ++i) {
    double v = rng.uniform01();
    vals.push_back(v * v * v);
  }
  IntensityDensity source = IntensityDensity::from_samples(vals);
  source.apply_floor(0.05);
  IntensityDensity target = IntensityDensity::uniform();

  EnhanceConfig cfg;
  cfg.n_interior = 96;
  cfg.adam.epochs = 600;
  cfg.bfgs_iters = 40;
  cfg.seed = 7;
  cfg.threads = 1;
  cfg.log_every = 100;
  EnhanceResult res = train_enhancement_map(source, target, cfg);

  CHECK(res.ks_before > 0.1);
  CHECK(res.ks_after < res.ks_before);
  CHECK(res.map.raw_violations == 0);
  for (int k = 1; k < 256; ++k)
    CHECK(res.map.t[size_t(k)] >= res.map.t[size_t(k - 1)]);
  CHECK(std::isfinite(res.final_loss));
  CHECK(res.cdf_sup_error >= 0.0);
  REQUIRE(!res.history.empty());
  bool saw_adam = false, saw_lbfgs = false;
  for (const auto& row : res.history) {
    if (row.stage == "adam") saw_adam = true;
    if (row.stage == "lbfgs") saw_lbfgs = true;
  }
  CHECK(saw_adam);
  CHECK(saw_lbfgs);
  CHECK(res.wall_seconds > 0.0);
}
