#pragma once
#include <string>

#include "pinnafe/model.hpp"
#include "pinnafe/problem.hpp"
#include "pinnafe/trainer.hpp"

namespace pinnafe {

// Tuned per-case defaults shared by the CLI and the acceptance gate.  The
// published contract pins the optimization budgets (epoch counts, polish
// iterations, point counts); the model dimensions and step sizes are free
// accuracy/speed knobs sized for a single desktop core.
struct SolvePreset {
  int width = 32, depth = 3, m_out = 6, heads = 2, d_k = 4;
  int n_interior = 4096, n_boundary = 1024;
  int supervised_epochs = 0, adam_epochs = 800, bfgs_iters = 300;
  double adam_lr = 1e-3;
  int lr_decay_every = 2000;      // halve the Adam rate per block (0 = off)
  double irdr_beta = 0.01;        // gradient-norm coefficient (0 skips the
                                  // finite-difference probes entirely)
};

// Presets for smooth2d, singular2d, smooth3d, toy1d; throws on other names.
SolvePreset solve_preset(const std::string& case_name);

// Model dimensions for a case problem under a preset.
ModelDims preset_dims(const ProblemSpec& prob, const SolvePreset& p,
                      AggMode agg = AggMode::Convex);

// Training schedule for a preset; caller fills seed/threads afterwards.
TrainConfig preset_train_config(const SolvePreset& p);

}  // namespace pinnafe
