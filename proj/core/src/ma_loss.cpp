#include "pinnafe/ma_loss.hpp"

#include <cmath>

#include "pinnafe/errors.hpp"
#include "pinnafe/parallel.hpp"

namespace pinnafe {

double ma_residual(Engine& eng, const double* x, double f_x, Workspace& ws) {
  const int d = eng.model().params.dims.d;
  Jet out = eng.forward(x, d, ws);
  return det_packed(d, out.c.data() + 1 + d) - f_x;
}

double residual_gradient_norm(Engine& eng, const ProblemSpec& prob,
                              const double* x, double r_at_x, Workspace& ws) {
  const int d = prob.d;
  double acc = 0.0;
  for (int a = 0; a < d; ++a) {
    const double h = 1e-3 * (prob.hi[size_t(a)] - prob.lo[size_t(a)]);
    double xp[3], xm[3];
    for (int b = 0; b < d; ++b) xp[b] = xm[b] = x[b];
    xp[a] += h;
    xm[a] -= h;
    bool plus_ok = prob.inside(xp) && !prob.in_band(xp);
    bool minus_ok = prob.inside(xm) && !prob.in_band(xm);
    double g;
    if (plus_ok && minus_ok) {
      double rp = ma_residual(eng, xp, prob.f(xp), ws);
      double rm = ma_residual(eng, xm, prob.f(xm), ws);
      g = (rp - rm) / (2.0 * h);
    } else if (plus_ok) {
      g = (ma_residual(eng, xp, prob.f(xp), ws) - r_at_x) / h;
    } else if (minus_ok) {
      g = (r_at_x - ma_residual(eng, xm, prob.f(xm), ws)) / h;
    } else {
      throw SingularError("no admissible probe for residual gradient at axis " +
                          std::to_string(a));
    }
    acc += g * g;
  }
  return std::sqrt(acc);
}

void interior_residuals(Engine& eng, const ProblemSpec& prob,
                        const CollocationSet& set, std::vector<double>& r_out,
                        std::vector<double>* gnorm_out, int threads) {
  const size_t n = size_t(set.n_interior());
  r_out.resize(n);
  if (gnorm_out) gnorm_out->resize(n);
  parallel_for(n, threads, [&](size_t lo, size_t hi, int) {
    Workspace ws;
    eng.make_workspace(ws);
    for (size_t i = lo; i < hi; ++i) {
      const double* x = set.interior_at(int(i));
      r_out[i] = ma_residual(eng, x, set.f_int[i], ws);
      if (gnorm_out)
        (*gnorm_out)[i] = residual_gradient_norm(eng, prob, x, r_out[i], ws);
    }
  });
}

static void check_simplex(const std::vector<double>& w, size_t need) {
  if (w.size() != need)
    throw SizeMismatch("weights: have " + std::to_string(w.size()) +
                       ", need " + std::to_string(need));
  for (double wi : w)
    if (!(wi >= 0.0))
      throw SimplexViolation("negative or non-finite weight");
  double s = stable_sum(w.data(), w.size());
  if (std::abs(s - 1.0) > 1e-10)
    throw SimplexViolation("weights sum to " + std::to_string(s));
}

double pde_loss(const std::vector<double>& residuals,
                const std::vector<double>& weighted) {
  check_simplex(weighted, residuals.size());
  double acc = 0.0, comp = 0.0;
  for (size_t i = 0; i < residuals.size(); ++i) {
    double term = weighted[i] * residuals[i] * residuals[i];
    double t = acc + term;
    if (std::abs(acc) >= std::abs(term))
      comp += (acc - t) + term;
    else
      comp += (term - t) + acc;
    acc = t;
  }
  return acc + comp;
}

namespace {

// Mean of per-point squared mismatches over an arbitrary point list, with
// block partials combined in block order.
double mean_sq_mismatch(Engine& eng, const std::vector<double>& pts,
                        const std::vector<double>& targets, int d,
                        int threads) {
  const size_t n = targets.size();
  if (n == 0) return 0.0;
  int t = std::max(1, threads);
  std::vector<double> partial(size_t(t), 0.0);
  parallel_for(n, t, [&](size_t lo, size_t hi, int tid) {
    Workspace ws;
    eng.make_workspace(ws);
    double acc = 0.0;
    for (size_t i = lo; i < hi; ++i) {
      Jet out = eng.forward(pts.data() + i * size_t(d), 0, ws);
      double e = out.c[0] - targets[i];
      acc += e * e;
    }
    partial[size_t(tid)] = acc;
  });
  return stable_sum(partial.data(), partial.size()) / double(n);
}

}  // namespace

double bc_loss(Engine& eng, const CollocationSet& set, int threads) {
  return mean_sq_mismatch(eng, set.boundary, set.g_bd, set.d, threads);
}

double supervised_loss(Engine& eng, const CollocationSet& set, int threads) {
  return mean_sq_mismatch(eng, set.anchors, set.anchor_u, set.d, threads);
}

LossBreakdown loss_value(Engine& eng, const ProblemSpec& prob,
                         const CollocationSet& set,
                         const std::vector<double>& weights,
                         const LossParams& lp, LossRecipe recipe,
                         int threads) {
  LossBreakdown out;
  if (recipe == LossRecipe::Supervised) {
    out.sup = supervised_loss(eng, set, threads);
    out.total = out.sup;
    return out;
  }
  if (recipe == LossRecipe::Pde || recipe == LossRecipe::Total) {
    std::vector<double> r;
    interior_residuals(eng, prob, set, r, nullptr, threads);
    out.pde = pde_loss(r, weights);
  }
  if (recipe == LossRecipe::Bc || recipe == LossRecipe::Total)
    out.bc = bc_loss(eng, set, threads);
  out.total = lp.lambda_pde * out.pde + lp.lambda_bc * out.bc;
  return out;
}

LossBreakdown loss_param_gradient(Engine& eng, const ProblemSpec& prob,
                                  const CollocationSet& set,
                                  const std::vector<double>& weights,
                                  const LossParams& lp, LossRecipe recipe,
                                  std::vector<double>& grad, int threads) {
  const int d = set.d;
  const int np = eng.param_count();
  const int t = std::max(1, threads);
  LossBreakdown out;

  std::vector<Workspace> ws(static_cast<size_t>(t));
  for (auto& w : ws) {
    eng.make_workspace(w);
    w.zero_grad();
  }
  std::vector<double> partial(size_t(t), 0.0);

  const bool want_pde =
      recipe == LossRecipe::Pde || recipe == LossRecipe::Total;
  const bool want_bc = recipe == LossRecipe::Bc || recipe == LossRecipe::Total;

  if (want_pde) {
    check_simplex(weights, size_t(set.n_interior()));
    std::fill(partial.begin(), partial.end(), 0.0);
    parallel_for(size_t(set.n_interior()), t, [&](size_t lo, size_t hi, int tid) {
      Workspace& w = ws[size_t(tid)];
      double acc = 0.0;
      for (size_t i = lo; i < hi; ++i) {
        const double* x = set.interior_at(int(i));
        Jet o = eng.forward(x, d, w);
        const double* hess = o.c.data() + 1 + d;
        double r = det_packed(d, hess) - set.f_int[i];
        acc += weights[i] * r * r;
        double dd[6];
        det_packed_grad(d, hess, dd);
        Jet seed;
        double coef = weights[i] * lp.lambda_pde * 2.0 * r;
        for (int k = 0; k < tri_size(d); ++k) seed.c[size_t(1 + d + k)] = coef * dd[k];
        eng.backward(seed, d, w);
      }
      partial[size_t(tid)] = acc;
    });
    out.pde = stable_sum(partial.data(), partial.size());
  }

  if (want_bc && set.n_boundary() > 0) {
    const double scale = lp.lambda_bc * 2.0 / double(set.n_boundary());
    std::fill(partial.begin(), partial.end(), 0.0);
    parallel_for(size_t(set.n_boundary()), t, [&](size_t lo, size_t hi, int tid) {
      Workspace& w = ws[size_t(tid)];
      double acc = 0.0;
      for (size_t i = lo; i < hi; ++i) {
        Jet o = eng.forward(set.boundary_at(int(i)), 0, w);
        double e = o.c[0] - set.g_bd[i];
        acc += e * e;
        Jet seed;
        seed.c[0] = scale * e;
        eng.backward(seed, 0, w);
      }
      partial[size_t(tid)] = acc;
    });
    out.bc = stable_sum(partial.data(), partial.size()) / double(set.n_boundary());
  }

  if (recipe == LossRecipe::Supervised) {
    const size_t n = size_t(set.n_anchors());
    if (n > 0) {
      const double scale = 2.0 / double(n);
      std::fill(partial.begin(), partial.end(), 0.0);
      parallel_for(n, t, [&](size_t lo, size_t hi, int tid) {
        Workspace& w = ws[size_t(tid)];
        double acc = 0.0;
        for (size_t i = lo; i < hi; ++i) {
          Jet o = eng.forward(set.anchor_at(int(i)), 0, w);
          double e = o.c[0] - set.anchor_u[i];
          acc += e * e;
          Jet seed;
          seed.c[0] = scale * e;
          eng.backward(seed, 0, w);
        }
        partial[size_t(tid)] = acc;
      });
      out.sup = stable_sum(partial.data(), partial.size()) / double(n);
    }
    out.total = out.sup;
  } else {
    out.total = lp.lambda_pde * out.pde + lp.lambda_bc * out.bc;
  }

  grad.assign(size_t(np), 0.0);
  for (int k = 0; k < t; ++k)
    for (int j = 0; j < np; ++j) grad[size_t(j)] += ws[size_t(k)].grad[size_t(j)];
  eng.finalize_grad(grad.data());
  return out;
}

}  // namespace pinnafe
