#include "pinnafe/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "pinnafe/errors.hpp"

namespace pinnafe {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// phi(a) = f(x0 + a p); evaluations share the trial-point buffers.
struct LineEval {
  const Objective& obj;
  const std::vector<double>& x0;
  const std::vector<double>& p;
  std::vector<double> xt, gt;
  double f = 0.0, dphi = 0.0;

  LineEval(const Objective& o, const std::vector<double>& x,
           const std::vector<double>& dir)
      : obj(o), x0(x), p(dir), xt(x.size()), gt(x.size()) {}

  void at(double a) {
    for (size_t i = 0; i < x0.size(); ++i) xt[i] = x0[i] + a * p[i];
    f = obj(xt, &gt);
    dphi = dot(gt, p);
  }
};

// Strong-Wolfe line search; returns the accepted step (0 on failure) and
// leaves the accepted point/gradient in ev.
double wolfe_search(LineEval& ev, double f0, double dphi0, double c1,
                    double c2, int max_steps) {
  double a_prev = 0.0, f_prev = f0;
  double a = 1.0;
  const double a_max = 1e6;

  auto zoom = [&](double lo, double f_lo, double dphi_lo, double hi,
                  double f_hi) {
    for (int k = 0; k < max_steps; ++k) {
      // quadratic interpolation using phi(lo), phi'(lo), phi(hi); fall back
      // to bisection when the model step leaves the bracket interior
      double denom = f_hi - f_lo - dphi_lo * (hi - lo);
      double aj = denom > 0.0
                      ? lo - 0.5 * dphi_lo * (hi - lo) * (hi - lo) / denom
                      : 0.5 * (lo + hi);
      double lo_b = std::min(lo, hi), hi_b = std::max(lo, hi);
      double width = hi_b - lo_b;
      if (!(aj > lo_b + 0.1 * width && aj < hi_b - 0.1 * width))
        aj = 0.5 * (lo + hi);
      ev.at(aj);
      if (ev.f > f0 + c1 * aj * dphi0 || ev.f >= f_lo) {
        hi = aj;
        f_hi = ev.f;
      } else {
        if (std::abs(ev.dphi) <= -c2 * dphi0) return aj;
        if (ev.dphi * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = aj;
        f_lo = ev.f;
        dphi_lo = ev.dphi;
      }
      if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    // settle for sufficient decrease alone if the bracket carries one
    ev.at(lo);
    return (lo > 0.0 && ev.f <= f0 + c1 * lo * dphi0) ? lo : 0.0;
  };

  double dphi_prev = dphi0;
  for (int i = 0; i < max_steps; ++i) {
    ev.at(a);
    if (!std::isfinite(ev.f)) {  // overshot into a non-finite region
      a = 0.5 * (a_prev + a);
      continue;
    }
    if (ev.f > f0 + c1 * a * dphi0 || (i > 0 && ev.f >= f_prev))
      return zoom(a_prev, f_prev, dphi_prev, a, ev.f);
    if (std::abs(ev.dphi) <= -c2 * dphi0) return a;
    if (ev.dphi >= 0.0) return zoom(a, ev.f, ev.dphi, a_prev, f_prev);
    a_prev = a;
    f_prev = ev.f;
    dphi_prev = ev.dphi;
    a = std::min(2.0 * a, a_max);
  }
  return 0.0;
}

}  // namespace

OptResult lbfgs_minimize(const Objective& obj, std::vector<double>& x,
                         const LbfgsOptions& opt) {
  const size_t n = x.size();
  OptResult res;
  std::vector<double> g(n), p(n);
  double f = obj(x, &g);
  res.f = f;
  res.grad_norm = max_norm(g);
  if (res.grad_norm <= opt.grad_tol) {
    res.status = OptStatus::Converged;
    return res;
  }

  const bool dense = int(n) <= opt.dense_threshold;
  std::vector<double> H;  // dense inverse-Hessian estimate (row-major)
  if (dense) {
    H.assign(n * n, 0.0);
    for (size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
  }
  std::deque<Pair> mem;
  std::vector<double> q(n), alpha_buf;
  std::vector<double> hy(n);

  for (int it = 0; it < opt.max_iters; ++it) {
    // search direction p = -H g
    if (dense) {
      for (size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (size_t j = 0; j < n; ++j) s += H[i * n + j] * g[j];
        p[i] = -s;
      }
    } else {
      q = g;
      alpha_buf.assign(mem.size(), 0.0);
      for (size_t k = mem.size(); k-- > 0;) {
        const Pair& pr = mem[k];
        double a = pr.rho * dot(pr.s, q);
        alpha_buf[k] = a;
        for (size_t i = 0; i < n; ++i) q[i] -= a * pr.y[i];
      }
      double gamma = 1.0;
      if (!mem.empty()) {
        const Pair& last = mem.back();
        gamma = dot(last.s, last.y) / dot(last.y, last.y);
      }
      for (size_t i = 0; i < n; ++i) q[i] *= gamma;
      for (size_t k = 0; k < mem.size(); ++k) {
        const Pair& pr = mem[k];
        double b = pr.rho * dot(pr.y, q);
        for (size_t i = 0; i < n; ++i) q[i] += (alpha_buf[k] - b) * pr.s[i];
      }
      for (size_t i = 0; i < n; ++i) p[i] = -q[i];
    }

    double dphi0 = dot(g, p);
    if (dphi0 >= 0.0) {  // defective direction: restart from steepest descent
      mem.clear();
      if (dense) {
        std::fill(H.begin(), H.end(), 0.0);
        for (size_t i = 0; i < n; ++i) H[i * n + i] = 1.0;
      }
      for (size_t i = 0; i < n; ++i) p[i] = -g[i];
      dphi0 = dot(g, p);
      if (dphi0 >= 0.0) {
        res.status = OptStatus::Converged;  // gradient is numerically zero
        res.iters = it;
        res.f = f;
        res.grad_norm = max_norm(g);
        return res;
      }
    }

    LineEval ev(obj, x, p);
    double step = wolfe_search(ev, f, dphi0, opt.c1, opt.c2, opt.max_line_steps);
    if (step <= 0.0) {
      // When the certifiable decrease along the search direction is smaller
      // than the rounding noise of f itself, the iterate is numerically
      // stationary; only a genuinely unusable direction is a failure.
      const double f_resolution =
          std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
      res.status = opt.c1 * std::abs(dphi0) <= f_resolution
                       ? OptStatus::Converged
                       : OptStatus::LineSearchFailed;
      res.iters = it;
      res.f = f;
      res.grad_norm = max_norm(g);
      return res;
    }

    // curvature pair from the accepted step
    Pair pr;
    pr.s.resize(n);
    pr.y.resize(n);
    for (size_t i = 0; i < n; ++i) {
      pr.s[i] = ev.xt[i] - x[i];
      pr.y[i] = ev.gt[i] - g[i];
    }
    double sy = dot(pr.s, pr.y);
    x = ev.xt;
    g = ev.gt;
    f = ev.f;

    if (sy > 1e-14 * std::max(1.0, dot(pr.y, pr.y))) {
      if (dense) {
        // H <- (I - r s y^T) H (I - r y s^T) + r s s^T
        double r = 1.0 / sy;
        for (size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (size_t j = 0; j < n; ++j) s += H[i * n + j] * pr.y[j];
          hy[i] = s;
        }
        double yhy = dot(hy, pr.y);
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < n; ++j)
            H[i * n + j] += r * r * (sy + yhy) * pr.s[i] * pr.s[j] -
                            r * (hy[i] * pr.s[j] + pr.s[i] * hy[j]);
      } else {
        pr.rho = 1.0 / sy;
        mem.push_back(std::move(pr));
        if (int(mem.size()) > std::max(1, opt.memory)) mem.pop_front();
      }
    }

    res.iters = it + 1;
    res.f = f;
    res.grad_norm = max_norm(g);
    if (opt.on_iter) opt.on_iter(it + 1, f, res.grad_norm);
    if (res.grad_norm <= opt.grad_tol ||
        (opt.f_tol > 0.0 && f <= opt.f_tol)) {
      res.status = OptStatus::Converged;
      return res;
    }
  }
  res.status = OptStatus::BudgetExhausted;
  return res;
}

}  // namespace pinnafe
