#include "pinnafe/register2d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "pinnafe/engine.hpp"
#include "pinnafe/errors.hpp"
#include "pinnafe/lbfgs.hpp"
#include "pinnafe/parallel.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

FlowField FlowField::identity(int w, int h) {
  FlowField f;
  f.w = w;
  f.h = h;
  f.tx.resize(size_t(w) * size_t(h));
  f.ty.resize(size_t(w) * size_t(h));
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i) {
      f.tx[f.idx(i, j)] = cx(i, w);
      f.ty[f.idx(i, j)] = cy(j, h);
    }
  return f;
}

RegisterConfig::RegisterConfig() {
  dims.d = 2;
  dims.n = FeaturePoolSpec::preset("smooth2d").size();
  dims.heads = 2;
  dims.d_k = 4;
  dims.m_out = 4;
  dims.depth = 3;
  dims.width = 24;
  dims.agg = AggMode::Convex;
  adam_anchor.epochs = 400;
  adam_anchor.lr = 1e-2;
  adam_anchor.lr_decay_every = 0;
  adam.epochs = 800;
  adam.lr = 3e-3;
  adam.lr_decay_every = 0;
}

namespace {

using Clock = std::chrono::steady_clock;

// Bilinear intensity interpolant over unit-square coordinates with clamped
// edges (same sample convention as PlaneDensity: centers at (i+0.5)/w).
struct Interp {
  const Image& g;

  double at(double x, double y) const {
    double u = std::clamp(x, 0.0, 1.0) * g.w - 0.5;
    double v = std::clamp(y, 0.0, 1.0) * g.h - 0.5;
    int i0 = std::clamp(int(std::floor(u)), 0, g.w - 1);
    int j0 = std::clamp(int(std::floor(v)), 0, g.h - 1);
    int i1 = std::min(i0 + 1, g.w - 1), j1 = std::min(j0 + 1, g.h - 1);
    double tx = std::clamp(u - i0, 0.0, 1.0);
    double ty = std::clamp(v - j0, 0.0, 1.0);
    return (1 - tx) * (1 - ty) * g.at(i0, j0) + tx * (1 - ty) * g.at(i1, j0) +
           (1 - tx) * ty * g.at(i0, j1) + tx * ty * g.at(i1, j1);
  }

  void grad(double x, double y, double* gx, double* gy) const {
    double u = std::clamp(x, 0.0, 1.0) * g.w - 0.5;
    double v = std::clamp(y, 0.0, 1.0) * g.h - 0.5;
    int i0 = std::clamp(int(std::floor(u)), 0, g.w - 1);
    int j0 = std::clamp(int(std::floor(v)), 0, g.h - 1);
    int i1 = std::min(i0 + 1, g.w - 1), j1 = std::min(j0 + 1, g.h - 1);
    double tx = std::clamp(u - i0, 0.0, 1.0);
    double ty = std::clamp(v - j0, 0.0, 1.0);
    *gx = ((1 - ty) * (g.at(i1, j0) - g.at(i0, j0)) +
           ty * (g.at(i1, j1) - g.at(i0, j1))) *
          double(g.w);
    *gy = ((1 - tx) * (g.at(i0, j1) - g.at(i0, j0)) +
           tx * (g.at(i1, j1) - g.at(i1, j0))) *
          double(g.h);
  }
};

struct RegPoints {
  std::vector<double> interior;  // n_int * 2
  std::vector<double> boundary;  // n_bd * 2
  std::vector<double> sim;       // n_sim * 2 (uniform grid)
};

RegPoints make_points(const RegisterConfig& cfg) {
  RegPoints pts;
  Rng rng = substream(cfg.seed, "register.interior");
  pts.interior.resize(size_t(cfg.n_interior) * 2);
  for (auto& v : pts.interior) v = rng.uniform01();
  int nb = std::max(4, cfg.n_boundary);
  pts.boundary.reserve(size_t(nb) * 2);
  for (int k = 0; k < nb; ++k) {
    double t = 4.0 * double(k) / double(nb);
    double x, y;
    if (t < 1.0) {
      x = t;
      y = 0.0;
    } else if (t < 2.0) {
      x = 1.0;
      y = t - 1.0;
    } else if (t < 3.0) {
      x = 3.0 - t;
      y = 1.0;
    } else {
      x = 0.0;
      y = 4.0 - t;
    }
    pts.boundary.push_back(x);
    pts.boundary.push_back(y);
  }
  pts.sim.reserve(size_t(cfg.sim_grid) * size_t(cfg.sim_grid) * 2);
  for (int j = 0; j < cfg.sim_grid; ++j)
    for (int i = 0; i < cfg.sim_grid; ++i) {
      pts.sim.push_back((i + 0.5) / double(cfg.sim_grid));
      pts.sim.push_back((j + 0.5) / double(cfg.sim_grid));
    }
  return pts;
}

struct RegObjective {
  Engine& eng;
  const RegisterConfig& cfg;
  const RegPoints& pts;
  const PlaneDensity& mu;   // fixed-frame density
  const PlaneDensity& nu;   // moving-frame density
  const Interp& fixed_i;    // blurred fixed intensities
  const Interp& moving_i;   // blurred moving intensities
  const std::vector<double>& weights;
  bool anchor_stage = false;

  double pde_residual(const double* x, Workspace& ws) const {
    Jet o = eng.forward(x, 2, ws);
    return det_packed(2, o.c.data() + 3) * nu.at(o.c[1], o.c[2]) -
           mu.at(x[0], x[1]);
  }

  LossBreakdown eval(std::vector<double>* grad) const {
    const int np = eng.param_count();
    const int t = std::max(1, cfg.threads);
    std::vector<Workspace> ws(static_cast<size_t>(t));
    for (auto& w : ws) {
      eng.make_workspace(w);
      if (grad) w.zero_grad();
    }
    std::vector<double> partial(size_t(t), 0.0);
    LossBreakdown lb;

    if (anchor_stage) {
      // pure identity fit over the similarity grid + boundary walk
      auto fit = [&](const std::vector<double>& flat) {
        const size_t n = flat.size() / 2;
        const double scale = 2.0 / double(n);
        std::fill(partial.begin(), partial.end(), 0.0);
        parallel_for(n, t, [&](size_t lo, size_t hi, int tid) {
          Workspace& w = ws[size_t(tid)];
          double acc = 0.0;
          for (size_t i = lo; i < hi; ++i) {
            const double* x = flat.data() + 2 * i;
            Jet o = eng.forward(x, 2, w);
            double ex = o.c[1] - x[0], ey = o.c[2] - x[1];
            acc += ex * ex + ey * ey;
            if (grad) {
              Jet seed;
              seed.c[1] = scale * ex;
              seed.c[2] = scale * ey;
              eng.backward(seed, 2, w);
            }
          }
          partial[size_t(tid)] = acc;
        });
        return stable_sum(partial.data(), partial.size()) / double(n);
      };
      lb.sup = fit(pts.sim) + fit(pts.boundary);
      lb.total = lb.sup;
    } else {
      // equation term, collocation-weighted
      const size_t ni = pts.interior.size() / 2;
      std::fill(partial.begin(), partial.end(), 0.0);
      parallel_for(ni, t, [&](size_t lo, size_t hi, int tid) {
        Workspace& w = ws[size_t(tid)];
        double acc = 0.0;
        for (size_t i = lo; i < hi; ++i) {
          const double* x = pts.interior.data() + 2 * i;
          Jet o = eng.forward(x, 2, w);
          const double* hess = o.c.data() + 3;
          double det = det_packed(2, hess);
          double nv = nu.at(o.c[1], o.c[2]);
          double r = det * nv - mu.at(x[0], x[1]);
          acc += weights[i] * r * r;
          if (grad) {
            double coef = cfg.w_pde * 2.0 * weights[i] * r;
            double nx, ny, dd[3];
            nu.grad(o.c[1], o.c[2], &nx, &ny);
            det_packed_grad(2, hess, dd);
            Jet seed;
            seed.c[1] = coef * det * nx;
            seed.c[2] = coef * det * ny;
            for (int k = 0; k < 3; ++k) seed.c[size_t(3 + k)] = coef * nv * dd[k];
            eng.backward(seed, 2, w);
          }
        }
        partial[size_t(tid)] = acc;
      });
      lb.pde = stable_sum(partial.data(), partial.size());

      // similarity term on the uniform grid
      const size_t ns = pts.sim.size() / 2;
      const double sscale = cfg.w_sim * 2.0 / double(ns);
      std::fill(partial.begin(), partial.end(), 0.0);
      parallel_for(ns, t, [&](size_t lo, size_t hi, int tid) {
        Workspace& w = ws[size_t(tid)];
        double acc = 0.0;
        for (size_t i = lo; i < hi; ++i) {
          const double* x = pts.sim.data() + 2 * i;
          Jet o = eng.forward(x, 2, w);
          double e = moving_i.at(o.c[1], o.c[2]) - fixed_i.at(x[0], x[1]);
          acc += e * e;
          if (grad) {
            double mx, my;
            moving_i.grad(o.c[1], o.c[2], &mx, &my);
            Jet seed;
            seed.c[1] = sscale * e * mx;
            seed.c[2] = sscale * e * my;
            eng.backward(seed, 2, w);
          }
        }
        partial[size_t(tid)] = acc;
      });
      double sim = stable_sum(partial.data(), partial.size()) / double(ns);

      // boundary identity term
      const size_t nb = pts.boundary.size() / 2;
      const double bscale = cfg.w_bnd * 2.0 / double(nb);
      std::fill(partial.begin(), partial.end(), 0.0);
      parallel_for(nb, t, [&](size_t lo, size_t hi, int tid) {
        Workspace& w = ws[size_t(tid)];
        double acc = 0.0;
        for (size_t i = lo; i < hi; ++i) {
          const double* x = pts.boundary.data() + 2 * i;
          Jet o = eng.forward(x, 2, w);
          double ex = o.c[1] - x[0], ey = o.c[2] - x[1];
          acc += ex * ex + ey * ey;
          if (grad) {
            Jet seed;
            seed.c[1] = bscale * ex;
            seed.c[2] = bscale * ey;
            eng.backward(seed, 2, w);
          }
        }
        partial[size_t(tid)] = acc;
      });
      lb.bc = stable_sum(partial.data(), partial.size()) / double(nb);
      lb.sup = sim;  // similarity recorded in the spare slot
      lb.total = cfg.w_pde * lb.pde + cfg.w_sim * sim + cfg.w_bnd * lb.bc;
    }

    if (grad) {
      grad->assign(size_t(np), 0.0);
      for (int k = 0; k < t; ++k)
        for (int j = 0; j < np; ++j)
          (*grad)[size_t(j)] += ws[size_t(k)].grad[size_t(j)];
      eng.finalize_grad(grad->data());
    }
    return lb;
  }
};

std::vector<uint8_t> mask_boundary(const std::vector<uint8_t>& mask, int w,
                                   int h) {
  std::vector<uint8_t> edge(mask.size(), 0);
  auto at = [&](int i, int j) -> uint8_t {
    if (i < 0 || j < 0 || i >= w || j >= h) return 0;
    return mask[size_t(j) * size_t(w) + size_t(i)];
  };
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      if (at(i, j) &&
          (!at(i - 1, j) || !at(i + 1, j) || !at(i, j - 1) || !at(i, j + 1)))
        edge[size_t(j) * size_t(w) + size_t(i)] = 1;
  return edge;
}

std::vector<std::pair<int, int>> edge_points(const std::vector<uint8_t>& edge,
                                             int w, int h) {
  std::vector<std::pair<int, int>> pts;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      if (edge[size_t(j) * size_t(w) + size_t(i)]) pts.emplace_back(i, j);
  return pts;
}

}  // namespace

Image warp_image(const Image& moving, const FlowField& flow) {
  Image out(flow.w, flow.h, moving.ch);
  for (int c = 0; c < moving.ch; ++c) {
    // per-channel bilinear pull-back
    for (int j = 0; j < flow.h; ++j)
      for (int i = 0; i < flow.w; ++i) {
        double x = flow.tx[flow.idx(i, j)], y = flow.ty[flow.idx(i, j)];
        double u = std::clamp(x, 0.0, 1.0) * moving.w - 0.5;
        double v = std::clamp(y, 0.0, 1.0) * moving.h - 0.5;
        int i0 = std::clamp(int(std::floor(u)), 0, moving.w - 1);
        int j0 = std::clamp(int(std::floor(v)), 0, moving.h - 1);
        int i1 = std::min(i0 + 1, moving.w - 1);
        int j1 = std::min(j0 + 1, moving.h - 1);
        double tx = std::clamp(u - i0, 0.0, 1.0);
        double ty = std::clamp(v - j0, 0.0, 1.0);
        out.at(i, j, c) = float(
            (1 - tx) * (1 - ty) * moving.at(i0, j0, c) +
            tx * (1 - ty) * moving.at(i1, j0, c) +
            (1 - tx) * ty * moving.at(i0, j1, c) + tx * ty * moving.at(i1, j1, c));
      }
  }
  return out;
}

RegMetrics compute_metrics(const Image& fixed, const Image& moving,
                           const FlowField& flow) {
  RegMetrics m;
  const int w = flow.w, h = flow.h;
  Image warped = warp_image(moving, flow);
  Image fg = to_gray(fixed), wg = to_gray(warped);
  auto ma = threshold_mask(fg, otsu_threshold(fg));
  auto mb = threshold_mask(wg, otsu_threshold(wg));

  long na = 0, nb = 0, ninter = 0, nunion = 0;
  for (size_t k = 0; k < ma.size(); ++k) {
    na += ma[k];
    nb += mb[k];
    ninter += (ma[k] & mb[k]);
    nunion += (ma[k] | mb[k]);
  }
  if (na + nb == 0) {
    m.dsc = 1.0;
    m.jaccard = 1.0;
  } else {
    m.dsc = 2.0 * double(ninter) / double(na + nb);
    m.jaccard = nunion > 0 ? double(ninter) / double(nunion) : 1.0;
  }

  // pooled symmetric boundary distances, 95th percentile
  auto ea = edge_points(mask_boundary(ma, w, h), w, h);
  auto eb = edge_points(mask_boundary(mb, w, h), w, h);
  if (ea.empty() && eb.empty()) {
    m.hd95 = 0.0;
  } else if (ea.empty() || eb.empty()) {
    m.hd95 = std::hypot(double(w), double(h));  // degenerate: one empty mask
  } else {
    std::vector<double> pool;
    pool.reserve(ea.size() + eb.size());
    auto nearest = [](const std::pair<int, int>& p,
                      const std::vector<std::pair<int, int>>& q) {
      double best = 1e300;
      for (const auto& r : q) {
        double dx = p.first - r.first, dy = p.second - r.second;
        best = std::min(best, dx * dx + dy * dy);
      }
      return std::sqrt(best);
    };
    for (const auto& p : ea) pool.push_back(nearest(p, eb));
    for (const auto& p : eb) pool.push_back(nearest(p, ea));
    std::sort(pool.begin(), pool.end());
    size_t idx = size_t(std::floor(0.95 * double(pool.size() - 1)));
    m.hd95 = pool[idx];
  }

  // map-quality terms from central differences on the sample grid
  long folds = 0, cells = 0;
  double det_sum = 0.0, smooth_sum = 0.0;
  const double inv2dx = double(w) / 2.0, inv2dy = double(h) / 2.0;
  for (int j = 1; j < h - 1; ++j)
    for (int i = 1; i < w - 1; ++i) {
      double txx = (flow.tx[flow.idx(i + 1, j)] - flow.tx[flow.idx(i - 1, j)]) * inv2dx;
      double txy = (flow.tx[flow.idx(i, j + 1)] - flow.tx[flow.idx(i, j - 1)]) * inv2dy;
      double tyx = (flow.ty[flow.idx(i + 1, j)] - flow.ty[flow.idx(i - 1, j)]) * inv2dx;
      double tyy = (flow.ty[flow.idx(i, j + 1)] - flow.ty[flow.idx(i, j - 1)]) * inv2dy;
      double det = txx * tyy - txy * tyx;
      det_sum += det;
      if (det <= 0.0) ++folds;
      // displacement gradient = map gradient minus identity
      smooth_sum += (txx - 1) * (txx - 1) + txy * txy + tyx * tyx +
                    (tyy - 1) * (tyy - 1);
      ++cells;
    }
  if (cells > 0) {
    m.fold_ratio = double(folds) / double(cells);
    m.jacobian_mean = det_sum / double(cells);
    m.smoothness = smooth_sum / double(cells);
  }

  double mag = 0.0;
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < w; ++i)
      mag += std::hypot(flow.tx[flow.idx(i, j)] - FlowField::cx(i, w),
                        flow.ty[flow.idx(i, j)] - FlowField::cy(j, h));
  m.flow_mag_mean = mag / double(w) / double(h);
  return m;
}

RegisterResult register_images(const Image& fixed, const Image& moving,
                               const RegisterConfig& cfg) {
  if (fixed.w != moving.w || fixed.h != moving.h)
    throw SizeMismatch("image pair dimensions differ");
  const auto t0 = Clock::now();
  auto wall_ms = [&] {
    return 1e3 * std::chrono::duration<double>(Clock::now() - t0).count();
  };
  RegisterResult res;

  Image fgray = to_gray(fixed), mgray = to_gray(moving);
  Image fblur = gaussian_blur(fgray, cfg.blur_sigma);
  Image mblur = gaussian_blur(mgray, cfg.blur_sigma);
  PlaneDensity mu = PlaneDensity::from_image(fgray, cfg.blur_sigma, cfg.floor_frac);
  PlaneDensity nu = PlaneDensity::from_image(mgray, cfg.blur_sigma, cfg.floor_frac);
  Interp fixed_i{fblur}, moving_i{mblur};

  Model model;
  ModelDims dims = cfg.dims;
  dims.d = 2;
  model.pool = FeaturePoolSpec::preset("smooth2d");
  dims.n = model.pool.size();
  model.params = ModelParams::init(dims, cfg.seed);
  Engine eng(std::move(model));
  std::vector<double>& theta = eng.model().params.theta;

  RegPoints pts = make_points(cfg);
  const size_t ni = pts.interior.size() / 2;
  std::vector<double> weights(ni, 1.0 / double(ni));
  WeightState wstate(ni, cfg.irdr);

  RegObjective obj{eng,     cfg,      pts,      mu,     nu,
                   fixed_i, moving_i, weights, false};
  std::vector<double> grad;

  // ---- identity anchor stage ---------------------------------------------
  obj.anchor_stage = true;
  {
    AdamState adam(theta.size());
    for (int e = 0; e < cfg.adam_anchor.epochs; ++e) {
      LossBreakdown lb = obj.eval(&grad);
      if (!std::isfinite(lb.total))
        throw TrainingDiverged("anchor stage loss is not finite");
      adam.step(theta, grad, cfg.adam_anchor, e);
      eng.refresh();
      if (e % cfg.log_every == 0 || e + 1 == cfg.adam_anchor.epochs)
        res.history.push_back({e, "anchor", lb.total, 0.0, 0.0, wall_ms()});
    }
  }
  obj.anchor_stage = false;

  // ---- composite stage -----------------------------------------------------
  int epoch_base = cfg.adam_anchor.epochs;
  {
    AdamState adam(theta.size());
    std::vector<double> resid(ni), gnorm(ni);
    Workspace ws;
    eng.make_workspace(ws);
    for (int e = 0; e < cfg.adam.epochs; ++e) {
      if (cfg.use_irdr) {
        const double h = 1e-3;
        for (size_t i = 0; i < ni; ++i) {
          const double* x = pts.interior.data() + 2 * i;
          resid[i] = obj.pde_residual(x, ws);
          double acc = 0.0;
          for (int a = 0; a < 2; ++a) {
            double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
            xp[a] = std::min(1.0, xp[a] + h);
            xm[a] = std::max(0.0, xm[a] - h);
            double g = (obj.pde_residual(xp, ws) - obj.pde_residual(xm, ws)) /
                       (xp[a] - xm[a]);
            acc += g * g;
          }
          gnorm[i] = std::sqrt(acc);
        }
        wstate.update(resid, gnorm);
        weights = wstate.weights();
      }
      LossBreakdown lb = obj.eval(&grad);
      if (!std::isfinite(lb.total))
        throw TrainingDiverged("composite stage loss is not finite");
      adam.step(theta, grad, cfg.adam, e);
      eng.refresh();
      if (e % cfg.log_every == 0 || e + 1 == cfg.adam.epochs)
        res.history.push_back(
            {epoch_base + e, "adam", lb.total, lb.pde, lb.bc, wall_ms()});
    }
  }

  // ---- quasi-Newton polish, weights frozen --------------------------------
  if (cfg.bfgs_iters > 0) {
    LbfgsOptions opt;
    opt.max_iters = cfg.bfgs_iters;
    int iter_base = epoch_base + cfg.adam.epochs;
    LossBreakdown last_lb;
    opt.on_iter = [&](int it, double, double) {
      res.history.push_back({iter_base + it, "lbfgs", last_lb.total,
                             last_lb.pde, last_lb.bc, wall_ms()});
    };
    Objective fobj = [&](const std::vector<double>& x,
                         std::vector<double>* g) -> double {
      eng.model().params.theta = x;
      eng.refresh();
      last_lb = obj.eval(g ? &grad : nullptr);
      if (g) *g = grad;
      return last_lb.total;
    };
    std::vector<double> x = theta;
    lbfgs_minimize(fobj, x, opt);
    theta = x;
    eng.refresh();
  }

  // ---- extract the map on the pixel grid ----------------------------------
  res.flow.w = fixed.w;
  res.flow.h = fixed.h;
  res.flow.tx.resize(size_t(fixed.w) * size_t(fixed.h));
  res.flow.ty.resize(size_t(fixed.w) * size_t(fixed.h));
  parallel_for(size_t(fixed.h), cfg.threads, [&](size_t lo, size_t hi, int) {
    Workspace ws;
    eng.make_workspace(ws);
    for (size_t j = lo; j < hi; ++j)
      for (int i = 0; i < fixed.w; ++i) {
        double x[2] = {FlowField::cx(i, fixed.w),
                       FlowField::cy(int(j), fixed.h)};
        Jet o = eng.forward(x, 2, ws);
        res.flow.tx[res.flow.idx(i, int(j))] = o.c[1];
        res.flow.ty[res.flow.idx(i, int(j))] = o.c[2];
      }
  });

  res.warped = warp_image(moving, res.flow);
  res.metrics = compute_metrics(fixed, moving, res.flow);
  res.final_loss = obj.eval(nullptr).total;
  res.wall_seconds = 1e-3 * wall_ms();
  return res;
}

void write_flow_csv(const std::string& path, const FlowField& flow) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "i,j,x,y,tx,ty\n");
  for (int j = 0; j < flow.h; ++j)
    for (int i = 0; i < flow.w; ++i)
      std::fprintf(f, "%d,%d,%.17g,%.17g,%.17g,%.17g\n", i, j,
                   FlowField::cx(i, flow.w), FlowField::cy(j, flow.h),
                   flow.tx[flow.idx(i, j)], flow.ty[flow.idx(i, j)]);
  std::fclose(f);
}

}  // namespace pinnafe
