#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "pinnafe/adam.hpp"
#include "pinnafe/collocation.hpp"
#include "pinnafe/engine.hpp"
#include "pinnafe/irdr.hpp"
#include "pinnafe/lbfgs.hpp"
#include "pinnafe/ma_loss.hpp"
#include "pinnafe/problem.hpp"

namespace pinnafe {

struct TrainConfig {
  int n_interior = 2048;
  int n_boundary = 256;
  int n_anchor = 0;
  bool anchors_boundary_only = true;
  int supervised_epochs = 0;  // pretraining epochs on anchors (0 = skip)

  AdamConfig adam;
  int bfgs_iters = 300;
  LossParams loss;
  IrdrHyper irdr;
  bool use_irdr = true;  // false = uniform collocation weights

  uint64_t seed = 1;
  int threads = 1;
  int log_every = 50;
  bool track_weights = false;
  double diverge_tol = 1e12;
};

struct HistoryRow {
  int epoch = 0;  // cumulative across stages
  std::string stage;
  double total = 0.0, pde = 0.0, bc = 0.0;
  double wall_ms = 0.0;  // since training start
};

struct WeightRow {
  int iteration = 0;
  double w_min = 0.0, w_max = 0.0, entropy = 0.0;
};

struct TrainReport {
  std::vector<HistoryRow> history;
  std::vector<WeightRow> weight_trace;

  double final_total = 0.0, final_pde = 0.0, final_bc = 0.0;
  double final_mean_abs_residual = 0.0;
  int supervised_epochs_run = 0;
  int adam_epochs_run = 0;
  int bfgs_iters_run = 0;
  OptStatus bfgs_status = OptStatus::BudgetExhausted;

  // weighting-scheme health accumulated over every update of the run
  long weight_updates = 0;
  long weight_clamps = 0;
  double weight_max_sum_dev = 0.0;
  double weight_min_seen = 1.0;
  double weight_bound_frac = 0.0;  // worst max-w over its per-batch ceiling

  // midpoint-convexity spot checks along the way (diagnostic)
  long convexity_checks = 0;
  long convexity_violations = 0;

  double sup_seconds = 0.0, adam_seconds = 0.0, bfgs_seconds = 0.0;
  double wall_seconds = 0.0;
};

// Full pipeline on a fixed collocation set: optional supervised pretraining,
// the weighted Adam phase (weights refreshed from residual statistics every
// epoch), then quasi-Newton polish with the weights frozen.
TrainReport train(Engine& eng, const ProblemSpec& prob,
                  const CollocationSet& set, const TrainConfig& cfg);

// Samples the collocation set from cfg first.
TrainReport train(Engine& eng, const ProblemSpec& prob,
                  const TrainConfig& cfg);

void write_history_csv(const std::string& path,
                       const std::vector<HistoryRow>& rows);
void write_weight_csv(const std::string& path,
                      const std::vector<WeightRow>& rows);

}  // namespace pinnafe
