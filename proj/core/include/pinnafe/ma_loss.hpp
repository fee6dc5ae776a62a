#pragma once
#include <vector>

#include "pinnafe/collocation.hpp"
#include "pinnafe/engine.hpp"
#include "pinnafe/problem.hpp"

namespace pinnafe {

struct LossParams {
  double lambda_pde = 1.0;
  double lambda_bc = 10.0;
};

// Which terms a loss evaluation includes.  Supervised is the pretraining
// objective (mean squared error against anchor values) and is used alone.
enum class LossRecipe { Pde, Bc, Total, Supervised };

struct LossBreakdown {
  double total = 0.0;
  double pde = 0.0;
  double bc = 0.0;
  double sup = 0.0;
};

// R(x) = det(D^2 u(x)) - f(x) from one second-order forward pass.  The
// workspace keeps the recorded intermediates for a later backward call.
double ma_residual(Engine& eng, const double* x, double f_x, Workspace& ws);

// Central finite differences of R with step 1e-3 * (hi - lo) per axis,
// falling back to one-sided differences when a probe would leave the domain
// or enter the exclusion band.  Throws SingularError when a direction has
// no admissible probe at all.  r_at_x is the already-computed R(x).
double residual_gradient_norm(Engine& eng, const ProblemSpec& prob,
                              const double* x, double r_at_x, Workspace& ws);

// Residuals at every interior point (and optionally their finite-difference
// gradient norms) with a deterministic ordered reduction across threads.
void interior_residuals(Engine& eng, const ProblemSpec& prob,
                        const CollocationSet& set, std::vector<double>& r_out,
                        std::vector<double>* gnorm_out, int threads);

// Sum_i w_i R_i^2.  Verifies the weight simplex precondition (w_i >= 0,
// |sum w - 1| <= 1e-10) and throws SimplexViolation when it fails.
double pde_loss(const std::vector<double>& residuals,
                const std::vector<double>& weights);

// Mean squared boundary mismatch (value-only forward passes).
double bc_loss(Engine& eng, const CollocationSet& set, int threads);

// Mean squared anchor mismatch for supervised pretraining.
double supervised_loss(Engine& eng, const CollocationSet& set, int threads);

// Loss value for the given recipe (no parameter gradient).
LossBreakdown loss_value(Engine& eng, const ProblemSpec& prob,
                         const CollocationSet& set,
                         const std::vector<double>& weights,
                         const LossParams& lp, LossRecipe recipe, int threads);

// Loss value plus gradient with respect to every trainable parameter.
// Interior points seed the Hessian components with
// w_i * lambda_pde * 2 R_i * d(det)/d(H); boundary/anchor points seed the
// value component.  Per-thread gradients are combined in thread order and
// the effective-weight chain rule is applied exactly once at the end.
LossBreakdown loss_param_gradient(Engine& eng, const ProblemSpec& prob,
                                  const CollocationSet& set,
                                  const std::vector<double>& weights,
                                  const LossParams& lp, LossRecipe recipe,
                                  std::vector<double>& grad, int threads);

}  // namespace pinnafe
