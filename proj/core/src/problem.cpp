#include "pinnafe/problem.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "pinnafe/errors.hpp"
#include "pinnafe/image.hpp"
#include "pinnafe/parallel.hpp"

namespace pinnafe {

namespace {

double r2(const double* x, int d) {
  double s = 0.0;
  for (int a = 0; a < d; ++a) s += x[a] * x[a];
  return s;
}

// u = exp(r^2/2): grad = u x, hess = u (I + x x^T)
Jet exp_bowl_jet(const double* x, int od, int d) {
  Jet j;
  double u = std::exp(0.5 * r2(x, d));
  j.c[0] = u;
  if (od == 0) return j;
  for (int a = 0; a < d; ++a) j.g(a) = u * x[a];
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b)
      jet_h(j, a, b, od) = u * ((a == b ? 1.0 : 0.0) + x[a] * x[b]);
  return j;
}

// u = -sqrt(2 - r^2): grad = x/s, hess = I/s + x x^T / s^3, s = sqrt(2-r^2)
Jet sqrt_cone_jet(const double* x, int od) {
  const int d = 2;
  Jet j;
  double q = 2.0 - r2(x, d);
  double s = std::sqrt(q);
  j.c[0] = -s;
  if (od == 0) return j;
  for (int a = 0; a < d; ++a) j.g(a) = x[a] / s;
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b)
      jet_h(j, a, b, od) =
          (a == b ? 1.0 / s : 0.0) + x[a] * x[b] / (s * q);
  return j;
}

}  // namespace

ProblemSpec case_smooth2d() {
  ProblemSpec p;
  p.name = "smooth2d";
  p.d = 2;
  p.pool = FeaturePoolSpec::preset("smooth2d");
  p.f = [](const double* x) {
    double r = x[0] * x[0] + x[1] * x[1];
    return (1.0 + r) * std::exp(r);
  };
  p.u_exact = [](const double* x) {
    return std::exp(0.5 * (x[0] * x[0] + x[1] * x[1]));
  };
  p.g = p.u_exact;
  p.u_exact_jet = [](const double* x, int od) { return exp_bowl_jet(x, od, 2); };
  return p;
}

ProblemSpec case_singular2d(double delta) {
  ProblemSpec p;
  p.name = "singular2d";
  p.d = 2;
  p.pool = FeaturePoolSpec::preset("singular2d");
  p.f = [](const double* x) {
    double q = 2.0 - x[0] * x[0] - x[1] * x[1];
    return 2.0 / (q * q);
  };
  p.u_exact = [](const double* x) {
    return -std::sqrt(2.0 - x[0] * x[0] - x[1] * x[1]);
  };
  p.g = p.u_exact;
  p.u_exact_jet = [](const double* x, int od) { return sqrt_cone_jet(x, od); };
  p.band_metric = [](const double* x) {
    return 2.0 - x[0] * x[0] - x[1] * x[1];
  };
  p.band_delta = delta;
  return p;
}

ProblemSpec case_smooth3d() {
  ProblemSpec p;
  p.name = "smooth3d";
  p.d = 3;
  p.pool = FeaturePoolSpec::preset("smooth3d");
  p.f = [](const double* x) {
    double r = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    return (1.0 + r) * std::exp(1.5 * r);
  };
  p.u_exact = [](const double* x) {
    return std::exp(0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  };
  p.g = p.u_exact;
  p.u_exact_jet = [](const double* x, int od) { return exp_bowl_jet(x, od, 3); };
  return p;
}

ProblemSpec toy1d() {
  ProblemSpec p;
  p.name = "toy1d";
  p.d = 1;
  p.pool = FeaturePoolSpec::preset("ot1d");
  p.f = [](const double*) { return 2.0; };
  p.u_exact = [](const double* x) { return x[0] * x[0]; };
  p.g = p.u_exact;
  p.u_exact_jet = [](const double* x, int od) {
    Jet j;
    j.c[0] = x[0] * x[0];
    if (od > 0) {
      j.g(0) = 2.0 * x[0];
      jet_h(j, 0, 0, od) = 2.0;
    }
    return j;
  };
  return p;
}

ProblemSpec problem_by_name(const std::string& name) {
  if (name == "smooth2d") return case_smooth2d();
  if (name == "singular2d") return case_singular2d();
  if (name == "smooth3d") return case_smooth3d();
  if (name == "toy1d") return toy1d();
  throw ConfigError("unknown problem '" + name + "'");
}

namespace {

template <typename Fn>
void for_grid(const ProblemSpec& p, int grid, const Fn& fn) {
  const int d = p.d;
  long total = 1;
  for (int a = 0; a < d; ++a) total *= grid;
  std::vector<double> x(static_cast<size_t>(d));
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int a = 0; a < d; ++a) {
      long i = rem % grid;
      rem /= grid;
      x[size_t(a)] = p.lo[size_t(a)] +
                     (p.hi[size_t(a)] - p.lo[size_t(a)]) * double(i) / double(grid - 1);
    }
    fn(x.data(), idx);
  }
}

}  // namespace

Metrics evaluate(const Engine& eng, const ProblemSpec& prob, int grid,
                 bool include_band, int threads) {
  if (!prob.u_exact)
    throw ExactSolutionMissing("problem '" + prob.name +
                               "' has no exact solution to evaluate against");
  long total = 1;
  for (int a = 0; a < prob.d; ++a) total *= grid;

  struct Partial {
    double abs_sum = 0.0, sq_sum = 0.0, mx = 0.0;
    long n = 0, excl = 0;
  };
  int t = std::max(1, threads);
  std::vector<Partial> parts(static_cast<size_t>(t));

  parallel_for(size_t(total), t, [&](size_t lo_i, size_t hi_i, int tid) {
    Workspace ws;
    eng.make_workspace(ws);
    Partial& pp = parts[size_t(tid)];
    std::vector<double> x(size_t(prob.d));
    for (size_t idx = lo_i; idx < hi_i; ++idx) {
      size_t rem = idx;
      for (int a = 0; a < prob.d; ++a) {
        size_t i = rem % size_t(grid);
        rem /= size_t(grid);
        x[size_t(a)] = prob.lo[size_t(a)] +
                       (prob.hi[size_t(a)] - prob.lo[size_t(a)]) * double(i) /
                           double(grid - 1);
      }
      if (!include_band && prob.in_band(x.data())) {
        pp.excl++;
        continue;
      }
      double err = std::abs(eng.eval_value(x.data()) - prob.u_exact(x.data()));
      pp.abs_sum += err;
      pp.sq_sum += err * err;
      pp.mx = std::max(pp.mx, err);
      pp.n++;
    }
  });

  Metrics m;
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& pp : parts) {
    abs_sum += pp.abs_sum;
    sq_sum += pp.sq_sum;
    m.maxae = std::max(m.maxae, pp.mx);
    m.n_points += pp.n;
    m.n_excluded += pp.excl;
  }
  if (m.n_points > 0) {
    m.mae = abs_sum / double(m.n_points);
    m.l2 = std::sqrt(sq_sum / double(m.n_points));
  }
  return m;
}

void export_field(const Engine& eng, const ProblemSpec& prob, int grid,
                  const std::string& csv_path, bool png) {
  if (!prob.u_exact)
    throw ExactSolutionMissing("field export needs the exact solution");
  FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw IoError("cannot write " + csv_path);
  std::fprintf(f, "x,y%s,u_exact,u_pred,abs_err\n", prob.d == 3 ? ",z" : "");
  Workspace ws;
  eng.make_workspace(ws);
  std::vector<double> errs;
  const bool slice3d = prob.d == 3;
  const int mid = grid / 2;
  for_grid(prob, grid, [&](const double* x, long) {
    double up = eng.eval_value(x);
    double ue = prob.u_exact(x);
    for (int a = 0; a < prob.d; ++a) std::fprintf(f, "%.17g,", x[a]);
    std::fprintf(f, "%.17g,%.17g,%.17g\n", ue, up, std::abs(up - ue));
  });
  std::fclose(f);

  if (!png) return;
  // |error| heatmap over the (x,y) plane; central z slice in 3D
  Image img(grid, grid, 1);
  double mx = 1e-300;
  std::vector<double> vals(size_t(grid) * size_t(grid));
  for (int iy = 0; iy < grid; ++iy)
    for (int ix = 0; ix < grid; ++ix) {
      double x[3] = {double(ix) / (grid - 1), double(iy) / (grid - 1),
                     slice3d ? double(mid) / (grid - 1) : 0.0};
      double e = prob.in_band(x) && !slice3d
                     ? 0.0
                     : std::abs(eng.eval_value(x) - prob.u_exact(x));
      vals[size_t(iy) * size_t(grid) + size_t(ix)] = e;
      mx = std::max(mx, e);
    }
  for (int iy = 0; iy < grid; ++iy)
    for (int ix = 0; ix < grid; ++ix)
      img.at(ix, iy, 0) =
          float(vals[size_t(iy) * size_t(grid) + size_t(ix)] / mx);
  std::string png_path = csv_path;
  auto dot = png_path.rfind('.');
  if (dot != std::string::npos) png_path.resize(dot);
  save_png(png_path + ".png", img);
}

}  // namespace pinnafe
