#include "pinnafe/presets.hpp"

#include "pinnafe/errors.hpp"

namespace pinnafe {

SolvePreset solve_preset(const std::string& case_name) {
  SolvePreset p;
  if (case_name == "smooth2d") {
    p.adam_lr = 3e-3;
    p.lr_decay_every = 300;
    return p;
  }
  if (case_name == "singular2d") {
    p.supervised_epochs = 1000;
    p.adam_epochs = 7000;
    p.bfgs_iters = 500;
    p.adam_lr = 2e-3;
    p.lr_decay_every = 1500;
    return p;
  }
  if (case_name == "smooth3d") {
    p.m_out = 8;
    p.n_interior = 8192;
    p.n_boundary = 6144;
    p.adam_epochs = 3000;
    p.adam_lr = 2e-3;
    p.lr_decay_every = 800;
    p.irdr_beta = 0.0;  // 3D probe cost dominates the epoch otherwise
    return p;
  }
  if (case_name == "toy1d") {
    p.width = 8;
    p.depth = 2;
    p.m_out = 3;
    p.n_interior = 64;
    p.n_boundary = 2;
    p.adam_epochs = 400;
    p.bfgs_iters = 50;
    return p;
  }
  throw ConfigError("unknown case '" + case_name + "'");
}

ModelDims preset_dims(const ProblemSpec& prob, const SolvePreset& p,
                      AggMode agg) {
  ModelDims dims;
  dims.d = prob.d;
  dims.n = prob.pool.size();
  dims.heads = p.heads;
  dims.d_k = p.d_k;
  dims.m_out = p.m_out;
  dims.depth = p.depth;
  dims.width = p.width;
  dims.agg = agg;
  return dims;
}

TrainConfig preset_train_config(const SolvePreset& p) {
  TrainConfig cfg;
  cfg.n_interior = p.n_interior;
  cfg.n_boundary = p.n_boundary;
  cfg.n_anchor = p.supervised_epochs > 0 ? 256 : 0;
  cfg.supervised_epochs = p.supervised_epochs;
  cfg.adam.epochs = p.adam_epochs;
  cfg.adam.lr = p.adam_lr;
  cfg.adam.lr_decay_every = p.lr_decay_every;
  cfg.bfgs_iters = p.bfgs_iters;
  cfg.irdr.beta = p.irdr_beta;
  return cfg;
}

}  // namespace pinnafe
