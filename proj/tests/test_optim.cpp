// Optimizers: quasi-Newton convergence on classic benchmarks (dense and
// two-loop paths), line-search failure reporting, and the first-order
// stepper's bias correction and rate schedule.
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pinnafe/adam.hpp"
#include "pinnafe/lbfgs.hpp"
#include "pinnafe/rng.hpp"

using namespace pinnafe;

namespace {

// f(x) = 1/2 x' D x - b' x with D = diag(d), minimum at x* = b / d.
Objective quadratic(std::vector<double> d, std::vector<double> b) {
  return [d = std::move(d), b = std::move(b)](const std::vector<double>& x,
                                              std::vector<double>* grad) {
    double f = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      f += 0.5 * d[i] * x[i] * x[i] - b[i] * x[i];
      if (grad) (*grad)[i] = d[i] * x[i] - b[i];
    }
    return f;
  };
}

double rosenbrock(const std::vector<double>& x, std::vector<double>* grad) {
  const double a = x[0], b = x[1];
  double f = 100.0 * (b - a * a) * (b - a * a) + (1 - a) * (1 - a);
  if (grad) {
    (*grad)[0] = -400.0 * a * (b - a * a) - 2.0 * (1 - a);
    (*grad)[1] = 200.0 * (b - a * a);
  }
  return f;
}

}  // namespace

TEST_CASE("dense path solves an ill-conditioned quadratic in a few steps") {
  const int n = 10;
  std::vector<double> d(n), b(n), want(n);
  for (int i = 0; i < n; ++i) {
    d[size_t(i)] = 1.0 + 10.0 * i;  // condition number 91
    b[size_t(i)] = (i % 2 ? -1.0 : 1.0) * (1.0 + i);
    want[size_t(i)] = b[size_t(i)] / d[size_t(i)];
  }
  std::vector<double> x(n, 2.0);
  LbfgsOptions opt;
  opt.max_iters = 60;
  auto res = lbfgs_minimize(quadratic(d, b), x, opt);
  CHECK(res.status == OptStatus::Converged);
  CHECK(res.iters <= 30);
  for (int i = 0; i < n; ++i)
    CHECK(x[size_t(i)] == doctest::Approx(want[size_t(i)]).epsilon(1e-8));
}

TEST_CASE("two-loop path handles a large quadratic") {
  const int n = 200;  // above the dense threshold
  std::vector<double> d(n), b(n);
  Rng rng(11);
  for (int i = 0; i < n; ++i) {
    d[size_t(i)] = 1.0 + 99.0 * double(i) / (n - 1);
    b[size_t(i)] = rng.uniform(-2, 2);
  }
  std::vector<double> x(n, 0.0);
  LbfgsOptions opt;
  opt.max_iters = 300;
  auto res = lbfgs_minimize(quadratic(d, b), x, opt);
  CHECK(res.status == OptStatus::Converged);
  // terminal accuracy is bounded by the rounding noise of f, not grad_tol
  for (int i = 0; i < n; ++i)
    CHECK(x[size_t(i)] ==
          doctest::Approx(b[size_t(i)] / d[size_t(i)]).epsilon(1e-6).scale(1.0));
}

TEST_CASE("rosenbrock valley is traversed to the global minimum") {
  std::vector<double> x = {-1.2, 1.0};
  LbfgsOptions opt;
  opt.max_iters = 200;
  auto res = lbfgs_minimize(rosenbrock, x, opt);
  CHECK(res.status == OptStatus::Converged);
  CHECK(res.iters <= 200);
  CHECK(res.f < 1e-8);
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("starting at the optimum converges without moving") {
  std::vector<double> d = {2.0, 3.0}, b = {4.0, 9.0};
  std::vector<double> x = {2.0, 3.0};  // exactly b/d
  LbfgsOptions opt;
  auto res = lbfgs_minimize(quadratic(d, b), x, opt);
  CHECK(res.status == OptStatus::Converged);
  CHECK(res.iters == 0);
  CHECK(x[0] == 2.0);
  CHECK(x[1] == 3.0);
}

TEST_CASE("an inconsistent gradient is reported as a line-search failure") {
  // The reported gradient points away from the true descent direction, so
  // every trial step increases f and the bracket gives up.
  Objective lying = [](const std::vector<double>& x, std::vector<double>* grad) {
    if (grad) (*grad)[0] = -2.0 * x[0];  // wrong sign
    return x[0] * x[0];
  };
  std::vector<double> x = {1.0};
  LbfgsOptions opt;
  opt.max_iters = 5;
  auto res = lbfgs_minimize(lying, x, opt);
  CHECK(res.status == OptStatus::LineSearchFailed);
}

TEST_CASE("objective floor stops the run early") {
  std::vector<double> d = {1.0, 1.0}, b = {0.0, 0.0};
  std::vector<double> x = {3.0, -4.0};
  LbfgsOptions opt;
  opt.f_tol = 1e-4;  // f = (x^2+y^2)/2 crosses this well before grad_tol
  auto res = lbfgs_minimize(quadratic(d, b), x, opt);
  CHECK(res.status == OptStatus::Converged);
  CHECK(res.f <= 1e-4);
}

TEST_CASE("iteration callback sees monotically improving values") {
  std::vector<double> d = {1.0, 5.0, 9.0}, b = {1.0, -1.0, 2.0};
  std::vector<double> x = {4.0, 4.0, 4.0};
  std::vector<double> seen;
  LbfgsOptions opt;
  opt.on_iter = [&](int, double f, double) { seen.push_back(f); };
  lbfgs_minimize(quadratic(d, b), x, opt);
  REQUIRE(seen.size() >= 2);
  for (size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] <= seen[i - 1]);
}

TEST_CASE("budget exhaustion is reported") {
  std::vector<double> x = {-1.2, 1.0};
  LbfgsOptions opt;
  opt.max_iters = 3;  // far too few for the valley
  auto res = lbfgs_minimize(rosenbrock, x, opt);
  CHECK(res.status == OptStatus::BudgetExhausted);
  CHECK(res.iters == 3);
}

TEST_CASE("first-order stepper: first step has unit-gradient scale") {
  // Bias correction makes the very first update lr * g/|g| regardless of the
  // gradient's magnitude (up to eps).
  AdamConfig cfg;
  cfg.lr = 0.01;
  cfg.lr_decay_every = 0;
  for (double scale : {1e-3, 1.0, 1e6}) {
    AdamState st(1);
    std::vector<double> theta = {5.0};
    std::vector<double> grad = {scale};
    st.step(theta, grad, cfg, 0);
    CHECK(theta[0] == doctest::Approx(5.0 - cfg.lr).epsilon(1e-4));
  }
}

TEST_CASE("first-order stepper converges on a quadratic") {
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.lr_decay_every = 0;
  AdamState st(2);
  std::vector<double> theta = {3.0, -2.0};
  std::vector<double> grad(2);
  for (int e = 0; e < 2000; ++e) {
    grad[0] = 2.0 * (theta[0] - 1.0);
    grad[1] = 4.0 * (theta[1] + 0.5);
    st.step(theta, grad, cfg, e);
  }
  CHECK(theta[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(theta[1] == doctest::Approx(-0.5).epsilon(1e-3));
}

TEST_CASE("zero learning rate leaves parameters bitwise untouched") {
  AdamConfig cfg;
  cfg.lr = 0.0;
  AdamState st(3);
  std::vector<double> theta = {0.1, -0.2, 0.3};
  std::vector<double> before = theta;
  std::vector<double> grad = {1.0, 2.0, 3.0};
  for (int e = 0; e < 10; ++e) st.step(theta, grad, cfg, e);
  for (size_t i = 0; i < 3; ++i) CHECK(theta[i] == before[i]);
}

TEST_CASE("stair-step decay halves the rate on schedule") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  cfg.lr_decay_every = 10;
  cfg.lr_decay = 0.5;
  cfg.beta1 = 0.0;  // make each step exactly lr * sign(g)
  cfg.beta2 = 0.0;
  cfg.eps = 0.0;
  AdamState st(1);
  std::vector<double> theta = {0.0};
  std::vector<double> grad = {1.0};
  // epoch 0 and epoch 10 steps differ by exactly the decay factor
  st.step(theta, grad, cfg, 0);
  double step0 = std::abs(theta[0]);
  theta[0] = 0.0;
  st.step(theta, grad, cfg, 10);
  double step10 = std::abs(theta[0]);
  CHECK(step0 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(step10 == doctest::Approx(0.05).epsilon(1e-12));
}
