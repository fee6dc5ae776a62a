#include "pinnafe/ot1d.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "pinnafe/engine.hpp"
#include "pinnafe/errors.hpp"
#include "pinnafe/lbfgs.hpp"
#include "pinnafe/parallel.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

MonotoneMap MonotoneMap::identity() {
  MonotoneMap m;
  m.t.resize(256);
  for (int k = 0; k < 256; ++k) m.t[size_t(k)] = node(k);
  return m;
}

MonotoneMap MonotoneMap::from_node_values(const std::vector<double>& raw) {
  if (raw.size() != 256) throw SizeMismatch("map needs 256 node values");
  MonotoneMap m;
  m.t.resize(256);
  const double span = raw.back() - raw.front();
  if (!(span > 1e-12))
    throw TrainingDiverged("transport map collapsed: span " +
                           std::to_string(span));
  for (int k = 0; k < 256; ++k) {
    if (k > 0 && raw[size_t(k)] < raw[size_t(k - 1)]) ++m.raw_violations;
    m.t[size_t(k)] =
        std::clamp((raw[size_t(k)] - raw.front()) / span, 0.0, 1.0);
  }
  for (int k = 1; k < 256; ++k)
    m.t[size_t(k)] = std::max(m.t[size_t(k)], m.t[size_t(k - 1)]);
  return m;
}

double MonotoneMap::operator()(double y) const {
  double u = std::clamp(y, 0.0, 1.0) * 255.0;
  int k = std::min(254, int(u));
  double s = u - k;
  return (1.0 - s) * t[size_t(k)] + s * t[size_t(k + 1)];
}

EnhanceConfig::EnhanceConfig() {
  dims.d = 1;
  dims.n = FeaturePoolSpec::preset("ot1d").size();
  dims.heads = 2;
  dims.d_k = 4;
  dims.m_out = 3;
  dims.depth = 3;
  dims.width = 16;
  dims.agg = AggMode::Convex;
  adam.epochs = 1500;
  adam.lr = 3e-3;
  adam.lr_decay_every = 0;
}

namespace {

struct Objective1d {
  Engine& eng;
  const IntensityDensity& mu;
  const IntensityDensity& nu;
  const std::vector<double>& xs;
  const std::vector<double>& weights;
  double lambda_pde, lambda_bc;
  int threads;

  // residual R(x) = u''(x) nu(u'(x)) - mu(x) at one interior point
  double residual(const double* x, Workspace& ws) const {
    Jet o = eng.forward(x, 1, ws);
    return o.c[2] * nu.pdf(o.c[1]) - mu.pdf(*x);
  }

  LossBreakdown eval(std::vector<double>* grad) const {
    const int np = eng.param_count();
    const int t = std::max(1, threads);
    std::vector<Workspace> ws(static_cast<size_t>(t));
    for (auto& w : ws) {
      eng.make_workspace(w);
      if (grad) w.zero_grad();
    }
    std::vector<double> partial(size_t(t), 0.0);
    parallel_for(xs.size(), t, [&](size_t lo, size_t hi, int tid) {
      Workspace& w = ws[size_t(tid)];
      double acc = 0.0;
      for (size_t i = lo; i < hi; ++i) {
        const double x = xs[i];
        Jet o = eng.forward(&x, 1, w);
        const double du = o.c[1], d2u = o.c[2];
        const double nv = nu.pdf(du);
        const double r = d2u * nv - mu.pdf(x);
        acc += weights[i] * r * r;
        if (grad) {
          Jet seed;
          const double coef = weights[i] * lambda_pde * 2.0 * r;
          seed.c[1] = coef * d2u * nu.pdf_prime(du);
          seed.c[2] = coef * nv;
          eng.backward(seed, 1, w);
        }
      }
      partial[size_t(tid)] = acc;
    });
    LossBreakdown lb;
    lb.pde = stable_sum(partial.data(), partial.size());

    // boundary slopes: (u'(0))^2 + (u'(1) - 1)^2, single-thread (two points)
    Workspace& w0 = ws[0];
    const double ends[2] = {0.0, 1.0}, targets[2] = {0.0, 1.0};
    for (int b = 0; b < 2; ++b) {
      Jet o = eng.forward(&ends[b], 1, w0);
      double e = o.c[1] - targets[b];
      lb.bc += e * e;
      if (grad) {
        Jet seed;
        seed.c[1] = lambda_bc * 2.0 * e;
        eng.backward(seed, 1, w0);
      }
    }
    lb.total = lambda_pde * lb.pde + lambda_bc * lb.bc;

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

}  // namespace

EnhanceResult train_enhancement_map(const IntensityDensity& source,
                                    const IntensityDensity& target,
                                    const EnhanceConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EnhanceResult res;
  res.ks_before = ks_distance(source, target);

  Model model;
  ModelDims dims = cfg.dims;
  dims.d = 1;
  model.pool = FeaturePoolSpec::preset("ot1d");
  dims.n = model.pool.size();
  model.params = ModelParams::init(dims, cfg.seed);
  Engine eng(std::move(model));

  // fixed interior collocation
  Rng rng = substream(cfg.seed, "enhance.collocation");
  std::vector<double> xs(size_t(cfg.n_interior));
  for (auto& x : xs) x = rng.uniform01();
  std::vector<double> weights(xs.size(), 1.0 / double(xs.size()));
  WeightState wstate(xs.size(), cfg.irdr);

  Objective1d obj{eng,            source,        target, xs, weights,
                  cfg.lambda_pde, cfg.lambda_bc, cfg.threads};
  std::vector<double> grad;
  std::vector<double>& theta = eng.model().params.theta;

  auto wall_ms = [&] {
    return 1e3 * std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  };

  AdamState adam(theta.size());
  std::vector<double> resid(xs.size()), gnorm(xs.size(), 0.0);
  Workspace ws;
  eng.make_workspace(ws);
  for (int e = 0; e < cfg.adam.epochs; ++e) {
    if (cfg.use_irdr) {
      const double h = 1e-3;
      for (size_t i = 0; i < xs.size(); ++i) {
        resid[i] = obj.residual(&xs[i], ws);
        double xp = std::min(1.0, xs[i] + h), xm = std::max(0.0, xs[i] - h);
        double rp = obj.residual(&xp, ws), rm = obj.residual(&xm, ws);
        gnorm[i] = std::abs(rp - rm) / (xp - xm);
      }
      wstate.update(resid, gnorm);
      weights = wstate.weights();
    }
    LossBreakdown lb = obj.eval(&grad);
    if (!std::isfinite(lb.total))
      throw TrainingDiverged("enhancement loss is not finite");
    adam.step(theta, grad, cfg.adam, e);
    eng.refresh();
    if (e % cfg.log_every == 0 || e + 1 == cfg.adam.epochs)
      res.history.push_back({e, "adam", lb.total, lb.pde, lb.bc, wall_ms()});
  }

  if (cfg.bfgs_iters > 0) {
    LbfgsOptions opt;
    opt.max_iters = cfg.bfgs_iters;
    int iter_base = cfg.adam.epochs;
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

  // extract T = u' at the byte nodes
  std::vector<double> raw(256);
  for (int k = 0; k < 256; ++k) {
    double x = MonotoneMap::node(k);
    Jet o = eng.forward(&x, 1, ws);
    raw[size_t(k)] = o.c[1];
  }
  res.map = MonotoneMap::from_node_values(raw);
  res.ks_after = ks_distance(pushforward(source, res.map), target);
  res.cdf_sup_error = map_cdf_sup_distance(res.map, source);
  res.final_loss = obj.eval(nullptr).total;
  res.wall_seconds = 1e-3 * wall_ms();
  return res;
}

IntensityDensity pushforward(const IntensityDensity& source,
                             const MonotoneMap& map) {
  IntensityDensity out;
  for (int j = 0; j < 256; ++j) {
    double c = (j + 0.5) / 256.0;
    int b = std::min(255, int(std::clamp(map(c), 0.0, 1.0) * 256.0));
    out.raw[size_t(b)] += source.raw[size_t(j)];
  }
  out.rebuild_mass();
  return out;
}

double map_cdf_sup_distance(const MonotoneMap& map,
                            const IntensityDensity& source) {
  double sup = 0.0;
  for (int k = 0; k < 256; ++k) {
    double y = MonotoneMap::node(k);
    sup = std::max(sup, std::abs(map(y) - source.raw_cdf(y)));
  }
  return sup;
}

Image apply_enhancement(const Image& img, const MonotoneMap& map) {
  Image out(img.w, img.h, img.ch);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      double lum = luminance(img, x, y);
      double mapped = map(lum);
      if (img.ch == 1) {
        out.at(x, y) = float(mapped);
      } else {
        double scale = mapped / std::max(lum, 1.0 / 255.0);
        for (int c = 0; c < img.ch; ++c)
          out.at(x, y, c) =
              float(std::clamp(double(img.at(x, y, c)) * scale, 0.0, 1.0));
      }
    }
  return out;
}

}  // namespace pinnafe
