#include "pinnafe/collocation.hpp"

#include <algorithm>
#include <cmath>

#include "pinnafe/errors.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

namespace {

void push_point(std::vector<double>& flat, const double* x, int d) {
  flat.insert(flat.end(), x, x + d);
}

// Evenly spaced positions along the rectangle perimeter, counterclockwise
// from (lo,lo).  Each arc-length position maps to one point, so corners are
// never duplicated regardless of the count.
std::vector<double> perimeter_walk(const ProblemSpec& prob, int n) {
  const double lx = prob.hi[0] - prob.lo[0];
  const double ly = prob.hi[1] - prob.lo[1];
  const double per = 2.0 * (lx + ly);
  std::vector<double> pts;
  pts.reserve(size_t(n) * 2);
  for (int k = 0; k < n; ++k) {
    double t = per * double(k) / double(n);
    double x, y;
    if (t < lx) {
      x = prob.lo[0] + t;
      y = prob.lo[1];
    } else if (t < lx + ly) {
      x = prob.hi[0];
      y = prob.lo[1] + (t - lx);
    } else if (t < 2 * lx + ly) {
      x = prob.hi[0] - (t - lx - ly);
      y = prob.hi[1];
    } else {
      x = prob.lo[0];
      y = prob.hi[1] - (t - 2 * lx - ly);
    }
    pts.push_back(x);
    pts.push_back(y);
  }
  return pts;
}

// Inclusive k*k grids on all six faces of the box, with shared edges and
// corners deduplicated by sorting.
std::vector<double> face_grids(const ProblemSpec& prob, int k) {
  struct P3 {
    double x, y, z;
    bool operator<(const P3& o) const {
      if (x != o.x) return x < o.x;
      if (y != o.y) return y < o.y;
      return z < o.z;
    }
    bool operator==(const P3& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  std::vector<P3> pts;
  auto axis_val = [&](int a, int i) {
    return prob.lo[size_t(a)] +
           (prob.hi[size_t(a)] - prob.lo[size_t(a)]) * double(i) / double(k - 1);
  };
  for (int fixed = 0; fixed < 3; ++fixed) {
    int u = (fixed + 1) % 3, v = (fixed + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      double fv = side ? prob.hi[size_t(fixed)] : prob.lo[size_t(fixed)];
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          double c[3];
          c[fixed] = fv;
          c[u] = axis_val(u, i);
          c[v] = axis_val(v, j);
          pts.push_back({c[0], c[1], c[2]});
        }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> flat;
  flat.reserve(pts.size() * 3);
  for (const auto& p : pts) {
    flat.push_back(p.x);
    flat.push_back(p.y);
    flat.push_back(p.z);
  }
  return flat;
}

}  // namespace

CollocationSet sample_collocation(const ProblemSpec& prob, int n_interior,
                                  int n_boundary, uint64_t seed) {
  CollocationSet set;
  set.d = prob.d;
  Rng rng = substream(seed, "collocation.interior");

  set.interior.reserve(size_t(n_interior) * size_t(prob.d));
  set.f_int.reserve(size_t(n_interior));
  long attempts = 0;
  const long max_attempts = 1000L * std::max(1, n_interior);
  while (set.n_interior() < n_interior) {
    if (++attempts > max_attempts)
      throw ConfigError("interior sampling exhausted: exclusion band too wide");
    double x[3] = {0, 0, 0};
    for (int a = 0; a < prob.d; ++a)
      x[a] = rng.uniform(prob.lo[size_t(a)], prob.hi[size_t(a)]);
    if (prob.in_band(x)) continue;
    push_point(set.interior, x, prob.d);
    set.f_int.push_back(prob.f(x));
  }

  if (prob.d == 1) {
    set.boundary = {prob.lo[0], prob.hi[0]};
  } else if (prob.d == 2) {
    set.boundary = perimeter_walk(prob, std::max(4, n_boundary));
  } else {
    int k = std::max(2, int(std::lround(std::sqrt(double(n_boundary) / 6.0))));
    set.boundary = face_grids(prob, k);
  }
  int n_bd = int(set.boundary.size()) / prob.d;
  set.g_bd.resize(size_t(n_bd));
  for (int i = 0; i < n_bd; ++i) set.g_bd[size_t(i)] = prob.g(set.boundary_at(i));
  return set;
}

void add_anchors(CollocationSet& set, const ProblemSpec& prob, int n_anchor,
                 bool boundary_only, uint64_t seed) {
  Rng rng = substream(seed, "collocation.anchors");
  set.anchors.clear();
  set.anchor_u.clear();
  set.anchors.reserve(size_t(n_anchor) * size_t(prob.d));
  set.anchor_u.reserve(size_t(n_anchor));
  if (boundary_only) {
    if (prob.d == 2) {
      // random arc-length positions on the perimeter
      const double lx = prob.hi[0] - prob.lo[0];
      const double ly = prob.hi[1] - prob.lo[1];
      const double per = 2.0 * (lx + ly);
      for (int i = 0; i < n_anchor; ++i) {
        double t = rng.uniform01() * per;
        double x[2];
        if (t < lx) {
          x[0] = prob.lo[0] + t;
          x[1] = prob.lo[1];
        } else if (t < lx + ly) {
          x[0] = prob.hi[0];
          x[1] = prob.lo[1] + (t - lx);
        } else if (t < 2 * lx + ly) {
          x[0] = prob.hi[0] - (t - lx - ly);
          x[1] = prob.hi[1];
        } else {
          x[0] = prob.lo[0];
          x[1] = prob.hi[1] - (t - 2 * lx - ly);
        }
        push_point(set.anchors, x, 2);
        set.anchor_u.push_back(prob.g(x));
      }
    } else {
      // random facet, random in-facet coordinates
      for (int i = 0; i < n_anchor; ++i) {
        double x[3] = {0, 0, 0};
        for (int a = 0; a < prob.d; ++a)
          x[a] = rng.uniform(prob.lo[size_t(a)], prob.hi[size_t(a)]);
        int fixed = int(rng.below(uint64_t(prob.d)));
        x[fixed] = rng.below(2) ? prob.hi[size_t(fixed)] : prob.lo[size_t(fixed)];
        push_point(set.anchors, x, prob.d);
        set.anchor_u.push_back(prob.g(x));
      }
    }
  } else {
    if (!prob.u_exact) throw ExactSolutionMissing(prob.name);
    long attempts = 0;
    const long max_attempts = 1000L * std::max(1, n_anchor);
    while (set.n_anchors() < n_anchor) {
      if (++attempts > max_attempts)
        throw ConfigError("anchor sampling exhausted: exclusion band too wide");
      double x[3] = {0, 0, 0};
      for (int a = 0; a < prob.d; ++a)
        x[a] = rng.uniform(prob.lo[size_t(a)], prob.hi[size_t(a)]);
      if (prob.in_band(x)) continue;
      push_point(set.anchors, x, prob.d);
      set.anchor_u.push_back(prob.u_exact(x));
    }
  }
}

}  // namespace pinnafe
