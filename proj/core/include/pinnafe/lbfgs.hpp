#pragma once
#include <functional>
#include <vector>

namespace pinnafe {

// Smooth objective: returns f(x); when grad is non-null, also fills it.
using Objective =
    std::function<double(const std::vector<double>& x, std::vector<double>* grad)>;

enum class OptStatus { Converged, BudgetExhausted, LineSearchFailed };

struct LbfgsOptions {
  int max_iters = 300;
  int memory = 50;
  double c1 = 1e-4;          // sufficient-decrease constant
  double c2 = 0.9;           // curvature constant (strong Wolfe)
  double grad_tol = 1e-10;   // stop when the gradient max-norm drops below
  double f_tol = 0.0;        // optional absolute objective floor (0 = off)
  int max_line_steps = 30;
  // Problems at or below this size keep a dense inverse-Hessian estimate
  // (classic BFGS); larger ones use the two-loop recursion.
  int dense_threshold = 64;
  std::function<void(int iter, double f, double gnorm)> on_iter;
};

struct OptResult {
  OptStatus status = OptStatus::BudgetExhausted;
  int iters = 0;
  double f = 0.0;
  double grad_norm = 0.0;  // max-norm at exit
};

// Quasi-Newton minimization with a strong-Wolfe line search
// (bracket + zoom).  x is updated in place.
OptResult lbfgs_minimize(const Objective& obj, std::vector<double>& x,
                         const LbfgsOptions& opt);

}  // namespace pinnafe
