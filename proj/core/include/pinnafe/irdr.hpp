#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

namespace pinnafe {

// Hyper-parameters of the residual-driven collocation weighting scheme.
struct IrdrHyper {
  double beta_c = 0.9;     // EMA factor of the |R|^4 cascade
  double gamma = 0.9;      // weight-momentum factor
  double lambda_lr = 0.1;  // momentum injection gain
  double beta = 0.01;      // residual-gradient-norm coefficient
  double alpha = 1.0;      // relative-decay-ratio coefficient
  double eps = 1e-8;       // decay-ratio denominator guard
  double eps_norm = 1e-8;  // normalization denominator guard
  double clamp = 10.0;     // decay-ratio safety cap (applications counted)
};

// Instantaneous relative decay ratio R^2 / sqrt(E + eps) — the pure formula,
// no clamping.
inline double irdr_ratio(double r, double e, double eps) {
  return r * r / std::sqrt(e + eps);
}

// Per-point weight state.  One update step:
//   E_i   <- beta_c E_i + (1 - beta_c) |R_i|^4          (cascade first)
//   ratio <- min(clamp, R_i^2 / sqrt(E_i + eps))
//   m_i   <- gamma m_i + lambda_lr (|R_i| + beta G_i + alpha ratio)
//   w_i   <- m_i / (sum m + eps_norm), then exact renormalization so the
//            weights stay on the probability simplex to a few ulps.
// The first step (init) seeds E_i = |R_i|^4 and m_i with gamma = 0.
class WeightState {
 public:
  WeightState() = default;
  WeightState(size_t n, IrdrHyper hp);

  void init(const std::vector<double>& r, const std::vector<double>& gnorm);
  void update(const std::vector<double>& r, const std::vector<double>& gnorm);

  // Overwrite the cascade (tests and checkpoint restore).
  void seed_cascade(const std::vector<double>& e);

  size_t size() const { return w_.size(); }
  const std::vector<double>& weights() const { return w_; }
  const std::vector<double>& cascade() const { return e_; }
  const std::vector<double>& momentum() const { return m_; }
  const IrdrHyper& hyper() const { return hp_; }

  long updates() const { return updates_; }
  long clamp_count() const { return clamps_; }
  // Simplex health over the whole history (post-normalization).
  double max_sum_deviation() const { return max_sum_dev_; }
  double min_weight_seen() const { return min_weight_; }
  // Worst observed max_i w_i relative to the per-batch ceiling
  // S_max / ((1-gamma) eps_norm), S_max = lambda_lr max_i(|R_i| + beta G_i
  // + alpha ratio_i).  Stays <= 1 whenever the momentum cascade is healthy.
  double max_bound_fraction() const { return max_bound_frac_; }
  double entropy() const;  // -sum w log w of the current weights

 private:
  void renormalize();
  void note_bound(double s_max);

  IrdrHyper hp_;
  std::vector<double> e_, m_, w_;
  long updates_ = 0;
  long clamps_ = 0;
  double max_sum_dev_ = 0.0;
  double min_weight_ = 1.0;
  double max_bound_frac_ = 0.0;
};

// Residual-weighted mean decay rate sum(w l R^2) / sum(w R^2) — the
// diagnostic used to compare weighting schemes on synthetic residual decks.
double effective_decay_rate(const std::vector<double>& w,
                            const std::vector<double>& lambda,
                            const std::vector<double>& r);

}  // namespace pinnafe
