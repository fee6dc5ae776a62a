#pragma once
#include <cmath>
#include <vector>

namespace pinnafe {

struct AdamConfig {
  int epochs = 800;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int lr_decay_every = 2000;  // halve the rate each block (0 = constant)
  double lr_decay = 0.5;
};

// Bias-corrected first/second-moment step with optional stair-step rate decay.
struct AdamState {
  std::vector<double> m, v;
  long t = 0;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& theta, const std::vector<double>& grad,
            const AdamConfig& cfg, int epoch_in_stage) {
    ++t;
    double lr = cfg.lr;
    if (cfg.lr_decay_every > 0)
      lr *= std::pow(cfg.lr_decay, epoch_in_stage / cfg.lr_decay_every);
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
    for (size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
  }
};

}  // namespace pinnafe
