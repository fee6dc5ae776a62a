#include "pinnafe/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "pinnafe/errors.hpp"
#include "pinnafe/parallel.hpp"
#include "pinnafe/rng.hpp"

namespace pinnafe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void guard_finite(double loss, double tol) {
  if (!std::isfinite(loss) || std::abs(loss) > tol)
    throw TrainingDiverged("loss = " + std::to_string(loss));
}

// A handful of random midpoint checks u((a+b)/2) <= (u(a)+u(b))/2 on the
// current field; cheap value-mode diagnostic recorded in the report.
void convexity_spot_check(Engine& eng, const ProblemSpec& prob, Rng& rng,
                          TrainReport& rep) {
  const int d = prob.d;
  Workspace ws;
  eng.make_workspace(ws);
  for (int k = 0; k < 8; ++k) {
    double a[3] = {0, 0, 0}, b[3] = {0, 0, 0}, mid[3] = {0, 0, 0};
    for (int i = 0; i < d; ++i) {
      a[i] = rng.uniform(prob.lo[size_t(i)], prob.hi[size_t(i)]);
      b[i] = rng.uniform(prob.lo[size_t(i)], prob.hi[size_t(i)]);
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    double ua = eng.forward(a, 0, ws).c[0];
    double ub = eng.forward(b, 0, ws).c[0];
    double um = eng.forward(mid, 0, ws).c[0];
    ++rep.convexity_checks;
    if (um > 0.5 * (ua + ub) + 1e-12) ++rep.convexity_violations;
  }
}

}  // namespace

TrainReport train(Engine& eng, const ProblemSpec& prob,
                  const CollocationSet& set, const TrainConfig& cfg) {
  TrainReport rep;
  const auto t0 = Clock::now();
  const int np = eng.param_count();
  std::vector<double>& theta = eng.model().params.theta;
  std::vector<double> grad;
  Rng spot_rng = substream(cfg.seed, "trainer.spotcheck");
  int epoch_cursor = 0;

  auto log_row = [&](const std::string& stage, const LossBreakdown& lb) {
    rep.history.push_back(
        {epoch_cursor, stage, lb.total, lb.pde, lb.bc, 1e3 * seconds_since(t0)});
  };

  // ---- supervised pretraining ------------------------------------------
  if (cfg.supervised_epochs > 0 && set.n_anchors() > 0) {
    const auto ts = Clock::now();
    AdamState adam(static_cast<size_t>(np));
    for (int e = 0; e < cfg.supervised_epochs; ++e) {
      LossBreakdown lb =
          loss_param_gradient(eng, prob, set, {}, cfg.loss,
                              LossRecipe::Supervised, grad, cfg.threads);
      guard_finite(lb.total, cfg.diverge_tol);
      adam.step(theta, grad, cfg.adam, e);
      eng.refresh();
      if (e % cfg.log_every == 0 || e + 1 == cfg.supervised_epochs)
        log_row("supervised", lb);
      ++epoch_cursor;
      ++rep.supervised_epochs_run;
    }
    rep.sup_seconds = seconds_since(ts);
  }

  // ---- weighted physics phase ------------------------------------------
  WeightState wstate(size_t(set.n_interior()), cfg.irdr);
  std::vector<double> weights(size_t(set.n_interior()),
                              set.n_interior() > 0
                                  ? 1.0 / double(set.n_interior())
                                  : 0.0);
  std::vector<double> resid, gnorm;

  if (cfg.adam.epochs > 0 && set.n_interior() > 0) {
    const auto ts = Clock::now();
    AdamState adam(static_cast<size_t>(np));
    for (int e = 0; e < cfg.adam.epochs; ++e) {
      if (cfg.use_irdr) {
        // phase A: residual statistics at the current parameters.  The
        // finite-difference gradient norms cost 2d residual evaluations per
        // point, so they are skipped when their coefficient is zero.
        const bool need_gnorm = cfg.irdr.beta != 0.0;
        interior_residuals(eng, prob, set, resid,
                           need_gnorm ? &gnorm : nullptr, cfg.threads);
        if (!need_gnorm) gnorm.assign(resid.size(), 0.0);
        wstate.update(resid, gnorm);
        weights = wstate.weights();
        if (cfg.track_weights) {
          auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
          rep.weight_trace.push_back(
              {int(wstate.updates()), *lo, *hi, wstate.entropy()});
        }
      }
      // phase B: gradient step on the weighted objective
      LossBreakdown lb = loss_param_gradient(
          eng, prob, set, weights, cfg.loss, LossRecipe::Total, grad,
          cfg.threads);
      guard_finite(lb.total, cfg.diverge_tol);
      adam.step(theta, grad, cfg.adam, e);
      eng.refresh();
      if (e % cfg.log_every == 0 || e + 1 == cfg.adam.epochs) {
        log_row("adam", lb);
        convexity_spot_check(eng, prob, spot_rng, rep);
      }
      ++epoch_cursor;
      ++rep.adam_epochs_run;
    }
    rep.adam_seconds = seconds_since(ts);
  }

  // ---- quasi-Newton polish, weights frozen ------------------------------
  if (cfg.bfgs_iters > 0 && set.n_interior() > 0) {
    const auto ts = Clock::now();
    LbfgsOptions opt;
    opt.max_iters = cfg.bfgs_iters;
    LossBreakdown last_lb;  // breakdown at the most recent evaluation; the
                            // accepted point is always the last one probed
    opt.on_iter = [&](int, double, double) {
      ++epoch_cursor;
      log_row("lbfgs", last_lb);
    };
    Objective obj = [&](const std::vector<double>& x,
                        std::vector<double>* g) -> double {
      eng.model().params.theta = x;
      eng.refresh();
      last_lb = loss_param_gradient(eng, prob, set, weights, cfg.loss,
                                    LossRecipe::Total, grad, cfg.threads);
      guard_finite(last_lb.total, cfg.diverge_tol);
      if (g) *g = grad;
      return last_lb.total;
    };
    std::vector<double> x = theta;
    OptResult r = lbfgs_minimize(obj, x, opt);
    theta = x;
    eng.refresh();
    rep.bfgs_iters_run = r.iters;
    rep.bfgs_status = r.status;
    rep.bfgs_seconds = seconds_since(ts);
  }

  // ---- final accounting --------------------------------------------------
  LossBreakdown fin = loss_value(eng, prob, set, weights, cfg.loss,
                                 set.n_interior() > 0 ? LossRecipe::Total
                                                      : LossRecipe::Bc,
                                 cfg.threads);
  rep.final_total = fin.total;
  rep.final_pde = fin.pde;
  rep.final_bc = fin.bc;
  if (set.n_interior() > 0) {
    interior_residuals(eng, prob, set, resid, nullptr, cfg.threads);
    double s = 0.0;
    for (double r : resid) s += std::abs(r);
    rep.final_mean_abs_residual = s / double(resid.size());
  }
  log_row("final", fin);

  rep.weight_updates = wstate.updates();
  rep.weight_clamps = wstate.clamp_count();
  rep.weight_max_sum_dev = wstate.max_sum_deviation();
  rep.weight_min_seen =
      wstate.updates() > 0 ? wstate.min_weight_seen() : 0.0;
  rep.weight_bound_frac = wstate.max_bound_fraction();
  rep.wall_seconds = seconds_since(t0);
  return rep;
}

TrainReport train(Engine& eng, const ProblemSpec& prob,
                  const TrainConfig& cfg) {
  CollocationSet set =
      sample_collocation(prob, cfg.n_interior, cfg.n_boundary, cfg.seed);
  if (cfg.n_anchor > 0)
    add_anchors(set, prob, cfg.n_anchor, cfg.anchors_boundary_only, cfg.seed);
  return train(eng, prob, set, cfg);
}

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "epoch,stage,L_total,L_PDE,L_BC,wall_ms\n");
  for (const auto& r : rows)
    std::fprintf(f, "%d,%s,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                 r.stage.c_str(), r.total, r.pde, r.bc, r.wall_ms);
  std::fclose(f);
}

void write_weight_csv(const std::string& path,
                      const std::vector<WeightRow>& rows) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "iteration,w_min,w_max,entropy\n");
  for (const auto& r : rows)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", r.iteration, r.w_min, r.w_max,
                 r.entropy);
  std::fclose(f);
}

}  // namespace pinnafe
