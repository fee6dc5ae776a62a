// Command-line front end: solve the benchmark equations, enhance images,
// register image pairs, and run a quick self-check.  Every run writes a
// resolved-config snapshot and a schema dump next to its artifacts.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinnafe/pinnafe.hpp"
#include "pinnafe/rng.hpp"

using namespace pinnafe;

namespace {

// ---------------------------------------------------------------------------
// configuration schema
// ---------------------------------------------------------------------------

Config make_config() {
  Config c;
  // model shape (-1 picks the per-case preset)
  c.define("model.width", "int", "-1", "hidden-layer width (-1 = case preset)");
  c.define("model.depth", "int", "-1", "hidden layers (-1 = case preset)");
  c.define("model.heads", "int", "-1", "attention heads (-1 = case preset)");
  c.define("model.d_k", "int", "-1",
           "per-head query/key width (-1 = case preset)");
  c.define("model.m_out", "int", "-1", "reduced feature width (-1 = preset)");
  c.define("model.agg", "string", "convex",
           "head aggregation: convex | concat | identity");
  // training schedule (-1 picks the per-case preset)
  c.define("train.n_interior", "int", "-1", "interior points (-1 = preset)");
  c.define("train.n_boundary", "int", "-1", "boundary points (-1 = preset)");
  c.define("train.n_anchor", "int", "256", "supervised anchor count");
  c.define("train.supervised_epochs", "int", "-1",
           "anchor pretraining epochs (-1 = case preset)");
  c.define("train.adam_epochs", "int", "-1", "Adam epochs (-1 = case preset)");
  c.define("train.adam_lr", "real", "-1", "Adam step size (-1 = case preset)");
  c.define("train.lr_decay_every", "int", "-1",
           "halve the Adam rate every this many epochs "
           "(0 = constant, -1 = case preset)");
  c.define("train.lr_decay", "real", "0.5", "Adam decay factor per block");
  c.define("train.bfgs_iters", "int", "-1",
           "quasi-Newton polish iterations (-1 = case preset)");
  c.define("train.lambda_pde", "real", "1.0", "equation-residual weight");
  c.define("train.lambda_bc", "real", "10.0", "boundary-mismatch weight");
  c.define("train.use_irdr", "bool", "true", "adaptive collocation weights");
  c.define("train.track_weights", "bool", "false",
           "record per-iteration weight statistics");
  c.define("train.log_every", "int", "50", "history row stride");
  // collocation-weight hyperparameters
  c.define("irdr.beta_c", "real", "0.9", "residual-power EMA factor");
  c.define("irdr.gamma", "real", "0.9", "weight-momentum factor");
  c.define("irdr.lambda_lr", "real", "0.1", "momentum injection gain");
  c.define("irdr.beta", "real", "-1",
           "gradient-norm coefficient (-1 = case preset)");
  c.define("irdr.alpha", "real", "1.0", "decay-ratio coefficient");
  c.define("irdr.clamp", "real", "10.0", "decay-ratio cap");
  // benchmark evaluation
  c.define("case.grid", "int", "-1",
           "evaluation grid per axis (-1 = 101 in 2D, 41 in 3D)");
  c.define("case.delta", "real", "1e-3", "singular-band exclusion threshold");
  c.define("case.include_band", "bool", "false",
           "evaluate inside the singular band too");
  // image enhancement
  c.define("enhance.n_interior", "int", "256", "intensity collocation points");
  c.define("enhance.adam_epochs", "int", "1500", "Adam epochs");
  c.define("enhance.bfgs_iters", "int", "150", "polish iterations");
  c.define("enhance.floor", "real", "0.05",
           "histogram floor, fraction of uniform mass");
  // image registration
  c.define("register.n_interior", "int", "1024", "interior points");
  c.define("register.n_boundary", "int", "128", "boundary points");
  c.define("register.sim_grid", "int", "32", "similarity sample grid");
  c.define("register.anchor_epochs", "int", "400", "identity-fit epochs");
  c.define("register.adam_epochs", "int", "800", "composite-stage epochs");
  c.define("register.bfgs_iters", "int", "100", "polish iterations");
  c.define("register.w_pde", "real", "1.0", "density-residual weight");
  c.define("register.w_sim", "real", "10.0", "similarity weight");
  c.define("register.w_bnd", "real", "1.0", "boundary-identity weight");
  c.define("register.blur_sigma", "real", "2.0",
           "training-side image smoothing (pixels)");
  c.define("register.floor", "real", "0.05", "density floor fraction");
  return c;
}

// Replace every `-1` sentinel with the case preset so the resolved-config
// snapshot records the values that actually ran.
void resolve_presets(Config& c, const std::string& case_name) {
  const SolvePreset p = solve_preset(case_name);
  auto fill = [&](const char* key, int v) {
    if (c.get_int(key) < 0) c.set(key, std::to_string(v));
  };
  auto fill_real = [&](const char* key, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (c.get_real(key) < 0) c.set(key, buf);
  };
  fill("model.width", p.width);
  fill("model.depth", p.depth);
  fill("model.m_out", p.m_out);
  fill("model.heads", p.heads);
  fill("model.d_k", p.d_k);
  fill("train.n_interior", p.n_interior);
  fill("train.n_boundary", p.n_boundary);
  fill("train.supervised_epochs", p.supervised_epochs);
  fill("train.adam_epochs", p.adam_epochs);
  fill("train.bfgs_iters", p.bfgs_iters);
  fill("train.lr_decay_every", p.lr_decay_every);
  fill_real("train.adam_lr", p.adam_lr);
  fill_real("irdr.beta", p.irdr_beta);
}

AggMode agg_from(const std::string& s) {
  if (s == "convex") return AggMode::Convex;
  if (s == "concat") return AggMode::Concat;
  if (s == "identity") return AggMode::Identity;
  throw ConfigError("model.agg must be convex, concat, or identity");
}

IrdrHyper irdr_from(const Config& c) {
  IrdrHyper h;
  h.beta_c = c.get_real("irdr.beta_c");
  h.gamma = c.get_real("irdr.gamma");
  h.lambda_lr = c.get_real("irdr.lambda_lr");
  h.beta = c.get_real("irdr.beta");
  if (h.beta < 0) h.beta = IrdrHyper{}.beta;  // sentinel outside solve runs
  h.alpha = c.get_real("irdr.alpha");
  h.clamp = c.get_real("irdr.clamp");
  return h;
}

std::string run_dir(const std::string& out_flag) {
  std::string dir = out_flag.empty() ? out_root() : out_flag;
  return ensure_dir(dir);
}

void dump_config(const Config& c, const std::string& dir) {
  c.write_resolved(dir + "/resolved_config.txt");
  c.write_schema(dir + "/config_schema.txt");
}

void save_image_by_ext(const std::string& path, const Image& img) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "pgm")
    save_pgm(path, img.ch == 1 ? img : to_gray(img));
  else
    save_png(path, img);
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

int cmd_solve(const Config& cfg, const std::string& case_name,
              const std::string& anchors, int grid_flag, uint64_t seed,
              int threads, const std::string& out) {
  ProblemSpec prob = case_name == "singular2d"
                         ? case_singular2d(cfg.get_real("case.delta"))
                         : problem_by_name(case_name);

  ModelDims dims;
  dims.d = prob.d;
  dims.n = prob.pool.size();
  dims.heads = int(cfg.get_int("model.heads"));
  dims.d_k = int(cfg.get_int("model.d_k"));
  dims.m_out = int(cfg.get_int("model.m_out"));
  dims.depth = int(cfg.get_int("model.depth"));
  dims.width = int(cfg.get_int("model.width"));
  dims.agg = agg_from(cfg.get_string("model.agg"));

  Model model;
  model.pool = prob.pool;
  model.params = ModelParams::init(dims, seed);
  Engine eng(std::move(model));

  TrainConfig tc;
  tc.n_interior = int(cfg.get_int("train.n_interior"));
  tc.n_boundary = int(cfg.get_int("train.n_boundary"));
  tc.n_anchor = int(cfg.get_int("train.n_anchor"));
  tc.anchors_boundary_only = anchors != "exact";
  tc.supervised_epochs = int(cfg.get_int("train.supervised_epochs"));
  tc.adam.epochs = int(cfg.get_int("train.adam_epochs"));
  tc.adam.lr = cfg.get_real("train.adam_lr");
  tc.adam.lr_decay_every = int(cfg.get_int("train.lr_decay_every"));
  tc.adam.lr_decay = cfg.get_real("train.lr_decay");
  tc.bfgs_iters = int(cfg.get_int("train.bfgs_iters"));
  tc.loss.lambda_pde = cfg.get_real("train.lambda_pde");
  tc.loss.lambda_bc = cfg.get_real("train.lambda_bc");
  tc.irdr = irdr_from(cfg);
  tc.use_irdr = cfg.get_bool("train.use_irdr");
  tc.track_weights = cfg.get_bool("train.track_weights");
  tc.log_every = int(cfg.get_int("train.log_every"));
  tc.seed = seed;
  tc.threads = threads;

  std::printf("solving %s: %d params, %d interior / %d boundary points\n",
              prob.name.c_str(), eng.param_count(), tc.n_interior,
              tc.n_boundary);
  TrainReport rep = train(eng, prob, tc);

  int grid = grid_flag > 0 ? grid_flag : int(cfg.get_int("case.grid"));
  if (grid <= 0) grid = prob.d == 3 ? 41 : 101;
  Metrics m = evaluate(eng, prob, grid, cfg.get_bool("case.include_band"),
                       threads);

  write_history_csv(out + "/loss_history.csv", rep.history);
  if (tc.track_weights)
    write_weight_csv(out + "/weight_trace.csv", rep.weight_trace);
  export_field(eng, prob, std::min(grid, prob.d == 3 ? 41 : 101),
               out + "/field.csv", true);
  save_checkpoint(out + "/checkpoint.bin", eng.params(), seed,
                  eng.model().pool.tag());

  FILE* f = std::fopen((out + "/metrics.csv").c_str(), "w");
  if (!f) throw IoError("cannot write metrics.csv");
  std::fprintf(f,
               "case,seed,threads,grid,mae,maxae,l2,n_points,n_excluded,"
               "final_total,final_pde,final_bc,mean_abs_residual,"
               "supervised_epochs,adam_epochs,bfgs_iters,weight_updates,"
               "weight_clamps\n");
  std::fprintf(f, "%s,%llu,%d,%d,%.17g,%.17g,%.17g,%ld,%ld,%.17g,%.17g,%.17g,"
                  "%.17g,%d,%d,%d,%ld,%ld\n",
               prob.name.c_str(), (unsigned long long)seed, threads, grid,
               m.mae, m.maxae, m.l2, m.n_points, m.n_excluded, rep.final_total,
               rep.final_pde, rep.final_bc, rep.final_mean_abs_residual,
               rep.supervised_epochs_run, rep.adam_epochs_run,
               rep.bfgs_iters_run, rep.weight_updates, rep.weight_clamps);
  std::fclose(f);

  std::printf("grid %d^%d: MAE %.3e  MaxAE %.3e  L2 %.3e  (%ld pts, %ld "
              "excluded)\n",
              grid, prob.d, m.mae, m.maxae, m.l2, m.n_points, m.n_excluded);
  std::printf("stages: supervised %.1fs, adam %.1fs, polish %.1fs; total "
              "%.1fs\n",
              rep.sup_seconds, rep.adam_seconds, rep.bfgs_seconds,
              rep.wall_seconds);
  return 0;
}

// ---------------------------------------------------------------------------
// enhance
// ---------------------------------------------------------------------------

int cmd_enhance(const Config& cfg, const std::string& input, int scene_kind,
                const std::string& output, const std::string& target_spec,
                uint64_t seed, int threads, const std::string& out) {
  Image img = input.empty()
                  ? synthetic_scene(256, 192, scene_kind, seed)
                  : load_image(input);
  if (input.empty())
    save_image_by_ext(out + "/input_scene.png", img);

  IntensityDensity source = IntensityDensity::from_image(img);
  source.apply_floor(cfg.get_real("enhance.floor"));
  IntensityDensity target;
  if (target_spec == "uniform") {
    target = IntensityDensity::uniform();
  } else if (target_spec.rfind("match:", 0) == 0) {
    target = IntensityDensity::from_image(load_image(target_spec.substr(6)));
    target.apply_floor(cfg.get_real("enhance.floor"));
  } else {
    throw ConfigError("--target must be 'uniform' or 'match:<image>'");
  }

  EnhanceConfig ec;
  ec.n_interior = int(cfg.get_int("enhance.n_interior"));
  ec.adam.epochs = int(cfg.get_int("enhance.adam_epochs"));
  ec.bfgs_iters = int(cfg.get_int("enhance.bfgs_iters"));
  ec.seed = seed;
  ec.threads = threads;
  EnhanceResult res = train_enhancement_map(source, target, ec);

  Image enhanced = apply_enhancement(img, res.map);
  std::string out_img = output.empty() ? out + "/enhanced.png" : output;
  save_image_by_ext(out_img, enhanced);
  write_history_csv(out + "/loss_history.csv", res.history);

  FILE* f = std::fopen((out + "/map_curve.csv").c_str(), "w");
  if (!f) throw IoError("cannot write map_curve.csv");
  std::fprintf(f, "k,y,T,source_cdf\n");
  for (int k = 0; k < 256; ++k) {
    double y = MonotoneMap::node(k);
    std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", k, y, res.map.t[size_t(k)],
                 source.raw_cdf(y));
  }
  std::fclose(f);

  IntensityDensity after = IntensityDensity::from_image(enhanced);
  f = std::fopen((out + "/histograms.csv").c_str(), "w");
  if (!f) throw IoError("cannot write histograms.csv");
  std::fprintf(f, "bin,before_raw,before_mass,after_raw,after_mass,target\n");
  for (int k = 0; k < 256; ++k)
    std::fprintf(f, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", k,
                 source.raw[size_t(k)], source.mass[size_t(k)],
                 after.raw[size_t(k)], after.mass[size_t(k)],
                 target.mass[size_t(k)]);
  std::fclose(f);

  f = std::fopen((out + "/enhance_metrics.csv").c_str(), "w");
  if (!f) throw IoError("cannot write enhance_metrics.csv");
  std::fprintf(f, "ks_before,ks_after,cdf_sup_error,raw_violations\n");
  std::fprintf(f, "%.17g,%.17g,%.17g,%ld\n", res.ks_before, res.ks_after,
               res.cdf_sup_error, res.map.raw_violations);
  std::fclose(f);

  std::printf("KS to target: %.4f -> %.4f; map-vs-CDF sup %.4f; "
              "monotonicity dips %ld; %.1fs\n",
              res.ks_before, res.ks_after, res.cdf_sup_error,
              res.map.raw_violations, res.wall_seconds);
  return 0;
}

// ---------------------------------------------------------------------------
// register
// ---------------------------------------------------------------------------

Image jacobian_heatmap(const FlowField& flow) {
  const int w = flow.w, h = flow.h;
  std::vector<double> det(size_t(w) * size_t(h), 1.0);
  double lo = 1e300, hi = -1e300;
  for (int j = 1; j < h - 1; ++j)
    for (int i = 1; i < w - 1; ++i) {
      double txx = (flow.tx[flow.idx(i + 1, j)] - flow.tx[flow.idx(i - 1, j)]) * w / 2.0;
      double txy = (flow.tx[flow.idx(i, j + 1)] - flow.tx[flow.idx(i, j - 1)]) * h / 2.0;
      double tyx = (flow.ty[flow.idx(i + 1, j)] - flow.ty[flow.idx(i - 1, j)]) * w / 2.0;
      double tyy = (flow.ty[flow.idx(i, j + 1)] - flow.ty[flow.idx(i, j - 1)]) * h / 2.0;
      double d = txx * tyy - txy * tyx;
      det[size_t(j) * size_t(w) + size_t(i)] = d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  Image img(w, h, 1);
  const double span = hi > lo ? hi - lo : 1.0;
  for (size_t k = 0; k < det.size(); ++k)
    img.data[k] = float((det[k] - lo) / span);
  return img;
}

int cmd_register(const Config& cfg, const std::string& fixed_path,
                 const std::string& moving_path, const std::string& phantom,
                 double dx, int phantom_size, bool no_similarity,
                 uint64_t seed, int threads, const std::string& out) {
  Image fixed, moving;
  if (!phantom.empty()) {
    if (phantom != "disk-translate")
      throw ConfigError("unknown phantom '" + phantom + "'");
    const int s = phantom_size;
    const double c = s / 2.0, r = s / 5.0;
    fixed = phantom_disk(s, s, c, c, r, 0.9f, 0.1f, 0.0);
    moving = phantom_disk(s, s, c + dx, c, r, 0.9f, 0.1f, 0.0);
    save_png(out + "/fixed.png", fixed);
    save_png(out + "/moving.png", moving);
  } else {
    if (fixed_path.empty() || moving_path.empty())
      throw ConfigError("register needs --fixed and --moving (or --phantom)");
    fixed = load_image(fixed_path);
    moving = load_image(moving_path);
  }

  RegisterConfig rc;
  rc.n_interior = int(cfg.get_int("register.n_interior"));
  rc.n_boundary = int(cfg.get_int("register.n_boundary"));
  rc.sim_grid = int(cfg.get_int("register.sim_grid"));
  rc.adam_anchor.epochs = int(cfg.get_int("register.anchor_epochs"));
  rc.adam.epochs = int(cfg.get_int("register.adam_epochs"));
  rc.bfgs_iters = int(cfg.get_int("register.bfgs_iters"));
  rc.w_pde = cfg.get_real("register.w_pde");
  rc.w_sim = no_similarity ? 0.0 : cfg.get_real("register.w_sim");
  rc.w_bnd = cfg.get_real("register.w_bnd");
  rc.blur_sigma = cfg.get_real("register.blur_sigma");
  rc.floor_frac = cfg.get_real("register.floor");
  rc.irdr = irdr_from(cfg);
  rc.seed = seed;
  rc.threads = threads;

  RegisterResult res = register_images(fixed, moving, rc);

  save_png(out + "/warped.png", res.warped);
  save_png(out + "/jacobian.png", jacobian_heatmap(res.flow));
  write_flow_csv(out + "/flow.csv", res.flow);
  write_history_csv(out + "/loss_history.csv", res.history);

  FILE* f = std::fopen((out + "/reg_metrics.csv").c_str(), "w");
  if (!f) throw IoError("cannot write reg_metrics.csv");
  std::fprintf(f,
               "dsc,jaccard,hd95,fold_ratio,jacobian_mean,flow_mag_mean,"
               "smoothness\n");
  const RegMetrics& m = res.metrics;
  std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.dsc,
               m.jaccard, m.hd95, m.fold_ratio, m.jacobian_mean,
               m.flow_mag_mean, m.smoothness);
  std::fclose(f);

  std::printf("DSC %.4f  Jaccard %.4f  HD95 %.2fpx  folds %.4f  detJ mean "
              "%.4f  |T-x| %.4f; %.1fs\n",
              m.dsc, m.jaccard, m.hd95, m.fold_ratio, m.jacobian_mean,
              m.flow_mag_mean, res.wall_seconds);
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: compact property checks over the core numerics
// ---------------------------------------------------------------------------

bool check(const char* name, bool ok, double worst, const char* unit) {
  std::printf("selftest %-28s %s  (worst %.3e %s)\n", name,
              ok ? "PASS" : "FAIL", worst, unit);
  return ok;
}

int cmd_selftest() {
  bool all = true;

  {  // propagated first/second derivatives against central differences
    ModelDims dims;
    dims.d = 2;
    dims.n = int(FeaturePoolSpec::preset("smooth2d").size());
    dims.heads = 2;
    dims.d_k = 4;
    dims.m_out = 5;
    dims.depth = 3;
    dims.width = 12;
    Model model;
    model.pool = FeaturePoolSpec::preset("smooth2d");
    model.params = ModelParams::init(dims, 17);
    Engine eng(std::move(model));
    Rng rng(31);
    double worst = 0.0;
    const double h = 1e-5;
    for (int rep = 0; rep < 20; ++rep) {
      double x[2] = {0.1 + 0.8 * rng.uniform01(), 0.1 + 0.8 * rng.uniform01()};
      Jet jet = eng.eval_jet(x);
      for (int a = 0; a < 2; ++a) {
        double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
        xp[a] += h;
        xm[a] -= h;
        double fd = (eng.eval_value(xp) - eng.eval_value(xm)) / (2 * h);
        double got = jet.c[size_t(1 + a)];
        worst = std::max(worst,
                         std::abs(got - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    all &= check("derivative-vs-fd", worst <= 1e-5, worst, "rel");
  }

  {  // convexity of the reduced-input network
    ModelDims dims;
    dims.d = 2;
    dims.n = 7;
    dims.heads = 2;
    dims.d_k = 4;
    dims.m_out = 4;
    dims.depth = 3;
    dims.width = 10;
    double worst = -1.0;
    Rng rng(77);
    IcnnCache<8> cache;
    cache.resize(dims);
    auto value_at = [&](const ModelParams& P, const IcnnWeights& W,
                        const std::vector<double>& y) {
      std::vector<WideJet> in(static_cast<size_t>(dims.m_out));
      for (int j = 0; j < dims.m_out; ++j)
        in[size_t(j)] = jet_const<8>(y[size_t(j)]);
      icnn_forward(P, W, in.data(), 0, cache);
      return cache.out.v();
    };
    for (int rep = 0; rep < 40; ++rep) {
      ModelParams P = ModelParams::init(dims, 500 + uint64_t(rep));
      IcnnWeights W = IcnnWeights::build(P);
      for (int pair = 0; pair < 25; ++pair) {
        std::vector<double> a(size_t(dims.m_out)), b(size_t(dims.m_out)),
            mid(size_t(dims.m_out));
        for (int i = 0; i < dims.m_out; ++i) {
          a[size_t(i)] = 4.0 * rng.uniform01() - 2.0;
          b[size_t(i)] = 4.0 * rng.uniform01() - 2.0;
          mid[size_t(i)] = 0.5 * (a[size_t(i)] + b[size_t(i)]);
        }
        double fa = value_at(P, W, a);
        double fb = value_at(P, W, b);
        double fm = value_at(P, W, mid);
        worst = std::max(worst, fm - 0.5 * (fa + fb));
      }
    }
    all &= check("midpoint-convexity", worst <= 1e-12, worst, "gap");
  }

  {  // adaptive-weight trajectory against its closed form (after the
     // forcing transient x/beta_c dies off, by n = 10 at this decay rate)
    const double lam = 1.0, beta_c = 0.8, r0 = 1.0;
    IrdrHyper hp;
    hp.beta_c = beta_c;
    hp.gamma = 0.5;
    hp.eps = 0.0;
    WeightState ws(2, hp);
    const double x = std::exp(-4.0 * lam);
    const double C = std::sqrt((beta_c - x) / ((1.0 - beta_c) * beta_c));
    const double rho = std::exp(-2.0 * lam) / std::sqrt(beta_c);
    std::vector<double> g(2, 0.0);
    ws.update({r0, 0.5}, g);
    ws.seed_cascade({(1.0 - beta_c) * r0 * r0 * r0 * r0, ws.cascade()[1]});
    double worst = 0.0;
    for (int n = 1; n <= 50; ++n) {
      double rn = r0 * std::exp(-lam * double(n));
      ws.update({rn, 0.5}, g);
      if (n < 10) continue;
      double want = C * std::pow(rho, double(n));
      double got = irdr_ratio(rn, ws.cascade()[0], hp.eps);
      worst = std::max(worst, std::abs(got - want) / want);
    }
    all &= check("weight-closed-form", worst <= 1e-9, worst, "rel");
  }

  {  // weight simplex during a real (tiny) run
    ProblemSpec prob = toy1d();
    ModelDims dims;
    dims.d = 1;
    dims.n = int(prob.pool.size());
    dims.heads = 2;
    dims.d_k = 4;
    dims.m_out = 3;
    dims.depth = 2;
    dims.width = 8;
    Model model;
    model.pool = prob.pool;
    model.params = ModelParams::init(dims, 3);
    Engine eng(std::move(model));
    TrainConfig tc;
    tc.n_interior = 64;
    tc.n_boundary = 2;
    tc.adam.epochs = 120;
    tc.adam.lr = 5e-3;
    tc.adam.lr_decay_every = 0;
    tc.bfgs_iters = 0;
    tc.seed = 11;
    tc.threads = 1;
    TrainReport rep = train(eng, prob, tc);
    bool ok = rep.weight_updates > 0 && rep.weight_min_seen > 0.0 &&
              rep.weight_max_sum_dev <= 1e-12;
    all &= check("weight-simplex", ok, rep.weight_max_sum_dev, "sum dev");
  }

  std::printf("selftest: %s\n", all ? "all checks passed" : "FAILURES");
  return all ? 0 : 1;
}


}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monge-Ampere solver with attention-expanded convex fields"};
  app.require_subcommand(1);
  app.fallthrough();  // let global flags appear after the subcommand name

  std::string config_path, out_flag;
  uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--out", out_flag, "output directory (default $PINNAFE_OUT_ROOT or .)");
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--set", overrides, "extra key=value override (repeatable)");

  auto* solve = app.add_subcommand("solve", "train a benchmark case");
  std::string case_name = "smooth2d", anchors = "boundary";
  int grid_flag = 0;
  bool no_irdr = false, track_weights = false;
  solve->add_option("--case", case_name,
                    "smooth2d | singular2d | smooth3d | toy1d");
  solve->add_option("--grid", grid_flag, "evaluation grid per axis");
  solve->add_option("--anchors", anchors,
                    "supervised anchor source: boundary | exact");
  solve->add_flag("--no-irdr", no_irdr, "uniform collocation weights");
  solve->add_flag("--track-weights", track_weights,
                  "write per-iteration weight statistics");

  auto* enhance = app.add_subcommand("enhance", "brightness enhancement");
  std::string in_img, out_img, target_spec = "uniform";
  int scene_kind = -1;
  enhance->add_option("--input", in_img, "input image (PNG or PGM)");
  enhance->add_option("--scene", scene_kind,
                      "use built-in scene 0..4 instead of --input");
  enhance->add_option("--output", out_img, "enhanced image path");
  enhance->add_option("--target", target_spec,
                      "'uniform' or 'match:<image>'");

  auto* reg = app.add_subcommand("register", "align a moving image to a fixed one");
  std::string fixed_path, moving_path, phantom;
  double dx = 6.0;
  int phantom_size = 96;
  bool no_similarity = false;
  reg->add_option("--fixed", fixed_path, "fixed image");
  reg->add_option("--moving", moving_path, "moving image");
  reg->add_option("--phantom", phantom,
                  "synthetic benchmark: disk-translate");
  reg->add_option("--dx", dx, "phantom translation in pixels");
  reg->add_option("--size", phantom_size, "phantom image side");
  reg->add_flag("--no-similarity", no_similarity,
                "drop the intensity-similarity term");

  auto* selftest =
      app.add_subcommand("selftest", "run compact numeric property checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (selftest->parsed()) return cmd_selftest();

    Config cfg = make_config();
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::string out = run_dir(out_flag);

    if (solve->parsed()) {
      resolve_presets(cfg, case_name);
      if (no_irdr) cfg.set("train.use_irdr", "false");
      if (track_weights) cfg.set("train.track_weights", "true");
      if (grid_flag > 0) cfg.set("case.grid", std::to_string(grid_flag));
      dump_config(cfg, out);
      return cmd_solve(cfg, case_name, anchors, grid_flag, seed, threads, out);
    }
    if (enhance->parsed()) {
      if (in_img.empty() && scene_kind < 0)
        throw ConfigError("enhance needs --input or --scene");
      dump_config(cfg, out);
      return cmd_enhance(cfg, in_img, scene_kind, out_img, target_spec, seed,
                         threads, out);
    }
    if (reg->parsed()) {
      dump_config(cfg, out);
      return cmd_register(cfg, fixed_path, moving_path, phantom, dx,
                          phantom_size, no_similarity, seed, threads, out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
