// Training pipeline: loss descent on the 1D toy problem, stage accounting,
// run-to-run determinism, frozen parameters under a zero learning rate, and
// the history/weight CSV formats.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "pinnafe/errors.hpp"
#include "pinnafe/trainer.hpp"

using namespace pinnafe;

namespace {

Model toy_model(uint64_t seed) {
  ProblemSpec prob = toy1d();
  ModelDims dims;
  dims.d = 1;
  dims.n = prob.pool.size();
  dims.heads = 2;
  dims.d_k = 4;
  dims.m_out = 3;
  dims.depth = 2;
  dims.width = 8;
  Model m;
  m.params = ModelParams::init(dims, seed);
  m.pool = prob.pool;
  return m;
}

TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.n_interior = 64;
  cfg.n_boundary = 2;
  cfg.adam.epochs = 200;
  cfg.adam.lr = 5e-3;
  cfg.adam.lr_decay_every = 0;
  cfg.bfgs_iters = 0;
  cfg.seed = 11;
  cfg.threads = 1;
  cfg.log_every = 50;
  return cfg;
}

}  // namespace

TEST_CASE("two hundred epochs cut the toy loss by an order of magnitude") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(2));
  TrainConfig cfg = small_cfg();
  TrainReport rep = train(eng, prob, cfg);
  REQUIRE(!rep.history.empty());
  double first = rep.history.front().total;
  CHECK(rep.final_total * 10.0 <= first);
  CHECK(rep.adam_epochs_run == 200);
  CHECK(rep.bfgs_iters_run == 0);
  CHECK(rep.weight_updates == 200);
  CHECK(rep.weight_max_sum_dev <= 1e-12);
  CHECK(rep.weight_min_seen > 0.0);
  CHECK(rep.convexity_checks > 0);
  CHECK(rep.final_mean_abs_residual >= 0.0);
  CHECK(std::isfinite(rep.final_total));
}

TEST_CASE("identical seeds give bit-identical training runs") {
  ProblemSpec prob = toy1d();
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 60;

  Engine e1(toy_model(5)), e2(toy_model(5));
  TrainReport r1 = train(e1, prob, cfg);
  TrainReport r2 = train(e2, prob, cfg);
  CHECK(r1.final_total == r2.final_total);
  CHECK(r1.final_pde == r2.final_pde);
  CHECK(r1.final_bc == r2.final_bc);
  CHECK(r1.final_mean_abs_residual == r2.final_mean_abs_residual);
  REQUIRE(r1.history.size() == r2.history.size());
  for (size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].total == r2.history[i].total);
    CHECK(r1.history[i].pde == r2.history[i].pde);
    CHECK(r1.history[i].bc == r2.history[i].bc);
  }
  const auto& t1 = e1.params().theta;
  const auto& t2 = e2.params().theta;
  for (size_t i = 0; i < t1.size(); ++i) CHECK(t1[i] == t2[i]);
}

TEST_CASE("zero learning rate freezes the parameters") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(3));
  std::vector<double> before = eng.params().theta;
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 20;
  cfg.adam.lr = 0.0;
  TrainReport rep = train(eng, prob, cfg);
  const auto& after = eng.params().theta;
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
  // and the loss history is flat
  for (const auto& row : rep.history)
    CHECK(row.total == rep.history.front().total);
}

TEST_CASE("an analytic bypass keeps the loss constant at machine zero") {
  ProblemSpec prob = toy1d();
  Model m = toy_model(4);
  m.bypass = prob.u_exact_jet;
  Engine eng(std::move(m));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 30;
  TrainReport rep = train(eng, prob, cfg);
  CHECK(rep.final_total < 1e-20);
  for (const auto& row : rep.history) CHECK(row.total < 1e-20);
}

TEST_CASE("supervised pretraining fits boundary anchors") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(6));
  TrainConfig cfg = small_cfg();
  cfg.n_anchor = 32;
  cfg.anchors_boundary_only = false;  // exact-solution anchors
  cfg.supervised_epochs = 400;
  cfg.adam.epochs = 0;
  cfg.adam.lr = 1e-2;
  TrainReport rep = train(eng, prob, cfg);
  CHECK(rep.supervised_epochs_run == 400);
  CHECK(rep.adam_epochs_run == 0);

  // the pretrained field interpolates u* = x^2 to a few 1e-2 absolute
  CollocationSet set = sample_collocation(prob, 16, 2, 77);
  add_anchors(set, prob, 64, false, 78);
  double mse = 0.0;
  for (int i = 0; i < set.n_anchors(); ++i) {
    double e = eng.eval_value(set.anchor_at(i)) - set.anchor_u[size_t(i)];
    mse += e * e;
  }
  mse /= set.n_anchors();
  CHECK(mse < 1e-3);
}

TEST_CASE("quasi-Newton stage runs after the first-order stage") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(7));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 100;
  cfg.bfgs_iters = 40;
  TrainReport rep = train(eng, prob, cfg);
  CHECK(rep.bfgs_iters_run > 0);
  CHECK(rep.bfgs_iters_run <= 40);
  // polish cannot worsen the loss recorded at the end of the first stage
  double adam_end = -1.0, final_seen = -1.0;
  for (const auto& row : rep.history) {
    if (row.stage == "adam") adam_end = row.total;
    final_seen = row.total;
  }
  REQUIRE(adam_end >= 0.0);
  CHECK(final_seen <= adam_end + 1e-15);
  CHECK(rep.final_total <= adam_end + 1e-15);
  // history carries all three stage labels in order
  bool seen_bfgs = false;
  for (const auto& row : rep.history) {
    if (row.stage == "lbfgs") seen_bfgs = true;
    CHECK((row.stage == "adam" || row.stage == "lbfgs" || row.stage == "final"));
  }
  CHECK(seen_bfgs);
}

TEST_CASE("uniform weighting is available as the ablation") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(8));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 40;
  cfg.use_irdr = false;
  TrainReport rep = train(eng, prob, cfg);
  CHECK(rep.weight_updates == 0);
  CHECK(rep.weight_clamps == 0);
  CHECK(std::isfinite(rep.final_total));
}

TEST_CASE("weight tracking records simplex health per epoch") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(9));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 25;
  cfg.track_weights = true;
  TrainReport rep = train(eng, prob, cfg);
  REQUIRE(rep.weight_trace.size() == 25);
  for (const auto& row : rep.weight_trace) {
    CHECK(row.w_min > 0.0);
    CHECK(row.w_min <= row.w_max);
    CHECK(row.entropy > 0.0);
    CHECK(row.entropy <= std::log(double(cfg.n_interior)) + 1e-12);
  }
}

TEST_CASE("training histories and weight traces serialize as CSV") {
  namespace fs = std::filesystem;
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(10));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 20;
  cfg.log_every = 5;
  cfg.track_weights = true;
  TrainReport rep = train(eng, prob, cfg);

  std::string hcsv = "trainer_history_test.csv";
  write_history_csv(hcsv, rep.history);
  FILE* f = std::fopen(hcsv.c_str(), "r");
  REQUIRE(f);
  char line[512];
  REQUIRE(std::fgets(line, sizeof line, f));
  CHECK(std::string(line) == "epoch,stage,L_total,L_PDE,L_BC,wall_ms\n");
  int rows = 0;
  while (std::fgets(line, sizeof line, f)) ++rows;
  std::fclose(f);
  CHECK(rows == int(rep.history.size()));
  fs::remove(hcsv);

  std::string wcsv = "trainer_weights_test.csv";
  write_weight_csv(wcsv, rep.weight_trace);
  f = std::fopen(wcsv.c_str(), "r");
  REQUIRE(f);
  REQUIRE(std::fgets(line, sizeof line, f));
  CHECK(std::string(line) == "iteration,w_min,w_max,entropy\n");
  rows = 0;
  while (std::fgets(line, sizeof line, f)) ++rows;
  std::fclose(f);
  CHECK(rows == int(rep.weight_trace.size()));
  fs::remove(wcsv);
}

TEST_CASE("divergence beyond the tolerance raises an error") {
  ProblemSpec prob = toy1d();
  Engine eng(toy_model(12));
  TrainConfig cfg = small_cfg();
  cfg.adam.epochs = 50;
  cfg.adam.lr = 1e6;  // absurd rate blows the parameters up
  cfg.diverge_tol = 1e8;
  CHECK_THROWS_AS(train(eng, prob, cfg), TrainingDiverged);
}
