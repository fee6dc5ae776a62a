#pragma once
#include <array>
#include <functional>
#include <string>

#include "pinnafe/engine.hpp"
#include "pinnafe/feature_pool.hpp"

namespace pinnafe {

// A Dirichlet problem det(D^2 u) = f on an axis-aligned box with boundary
// data g, plus (when known) the exact solution for error reporting and for
// driving losses through an analytic bypass.
struct ProblemSpec {
  std::string name;
  int d = 2;
  FeaturePoolSpec pool;
  std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};

  std::function<double(const double*)> f;
  std::function<double(const double*)> g;
  std::function<double(const double*)> u_exact;              // may be empty
  std::function<Jet(const double*, int)> u_exact_jet;        // may be empty

  // Optional exclusion band around a data singularity.  Points with
  // band_metric(x) < band_delta are excluded from sampling and (by default)
  // from evaluation; finite-difference probes avoid stepping into the band.
  std::function<double(const double*)> band_metric;  // empty = no band
  double band_delta = 1e-3;

  bool has_band() const { return bool(band_metric); }
  bool in_band(const double* x) const {
    return has_band() && band_metric(x) < band_delta;
  }
  bool inside(const double* x) const {
    for (int a = 0; a < d; ++a)
      if (x[a] < lo[size_t(a)] || x[a] > hi[size_t(a)]) return false;
    return true;
  }
};

// u* = exp((x^2+y^2)/2), f = (1+x^2+y^2) exp(x^2+y^2) on [0,1]^2
ProblemSpec case_smooth2d();
// u* = -sqrt(2-x^2-y^2), f = 2/(2-x^2-y^2)^2 on [0,1]^2; data singularity at
// the corner (1,1), excluded via the band 2-x^2-y^2 < delta
ProblemSpec case_singular2d(double delta = 1e-3);
// u* = exp(r^2/2), f = (1+r^2) exp(3 r^2/2) on [0,1]^3
ProblemSpec case_smooth3d();
// 1D: u'' = 2, u(0)=0, u(1)=1, exact u = x^2 (used by small trainer tests)
ProblemSpec toy1d();

ProblemSpec problem_by_name(const std::string& name);

struct Metrics {
  double mae = 0.0;
  double maxae = 0.0;
  double l2 = 0.0;  // root mean square error
  long n_points = 0;
  long n_excluded = 0;
};

// Errors of the trained field against u_exact over a uniform tensor grid
// (boundary included).  Band points are skipped unless include_band is set.
// Throws ExactSolutionMissing when the problem has no exact solution.
Metrics evaluate(const Engine& eng, const ProblemSpec& prob,
                 int grid_per_axis, bool include_band = false,
                 int threads = 1);

// Text dump of the field over the same grid: x, y[, z], u_exact, u_pred,
// abs_err.  When png is true also writes a grayscale heatmap of |error|
// (the central z-slice in 3D) next to it.
void export_field(const Engine& eng, const ProblemSpec& prob,
                  int grid_per_axis, const std::string& csv_path, bool png);

}  // namespace pinnafe
