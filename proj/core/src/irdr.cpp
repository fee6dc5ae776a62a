#include "pinnafe/irdr.hpp"

#include <cmath>

#include "pinnafe/errors.hpp"
#include "pinnafe/parallel.hpp"

namespace pinnafe {

WeightState::WeightState(size_t n, IrdrHyper hp) : hp_(hp) {
  e_.assign(n, 0.0);
  m_.assign(n, 0.0);
  w_.assign(n, n ? 1.0 / double(n) : 0.0);
}

static void check_size(size_t have, size_t need, const char* what) {
  if (have != need)
    throw SizeMismatch(std::string(what) + ": have " + std::to_string(have) +
                       ", need " + std::to_string(need));
}

void WeightState::init(const std::vector<double>& r,
                       const std::vector<double>& gnorm) {
  const size_t n = w_.size();
  check_size(r.size(), n, "residuals");
  check_size(gnorm.size(), n, "gradient norms");
  double s_max = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r2 = r[i] * r[i];
    e_[i] = r2 * r2;
    double ratio = irdr_ratio(r[i], e_[i], hp_.eps);
    if (ratio > hp_.clamp) {
      ratio = hp_.clamp;
      ++clamps_;
    }
    double s = hp_.lambda_lr *
               (std::abs(r[i]) + hp_.beta * gnorm[i] + hp_.alpha * ratio);
    if (s > s_max) s_max = s;
    m_[i] = s;
  }
  renormalize();
  note_bound(s_max);
  updates_ = 1;
}

void WeightState::update(const std::vector<double>& r,
                         const std::vector<double>& gnorm) {
  if (updates_ == 0) {
    init(r, gnorm);
    return;
  }
  const size_t n = w_.size();
  check_size(r.size(), n, "residuals");
  check_size(gnorm.size(), n, "gradient norms");
  double s_max = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double r2 = r[i] * r[i];
    e_[i] = hp_.beta_c * e_[i] + (1.0 - hp_.beta_c) * r2 * r2;
    double ratio = irdr_ratio(r[i], e_[i], hp_.eps);
    if (ratio > hp_.clamp) {
      ratio = hp_.clamp;
      ++clamps_;
    }
    double s = hp_.lambda_lr *
               (std::abs(r[i]) + hp_.beta * gnorm[i] + hp_.alpha * ratio);
    if (s > s_max) s_max = s;
    m_[i] = hp_.gamma * m_[i] + s;
  }
  renormalize();
  note_bound(s_max);
  ++updates_;
}

void WeightState::note_bound(double s_max) {
  // With per-step injections s_i <= S_max, the momentum geometric series
  // caps m_i at S_max / (1-gamma), so after division by (sum m + eps_norm)
  // the weights sit under S_max / ((1-gamma) eps_norm).  When every signal
  // vanished (uniform fallback) the ceiling is vacuous and is skipped.
  if (s_max <= 0.0) return;
  double bound = s_max / ((1.0 - hp_.gamma) * hp_.eps_norm);
  double w_max = 0.0;
  for (double wi : w_)
    if (wi > w_max) w_max = wi;
  double frac = w_max / bound;
  if (frac > max_bound_frac_) max_bound_frac_ = frac;
}

void WeightState::seed_cascade(const std::vector<double>& e) {
  check_size(e.size(), w_.size(), "cascade");
  e_ = e;
}

void WeightState::renormalize() {
  const size_t n = w_.size();
  double s = stable_sum(m_.data(), n);
  if (s <= 0.0) {
    // No injection anywhere (all residual statistics vanished): the only
    // weighting consistent with the simplex is uniform.
    for (size_t i = 0; i < n; ++i) w_[i] = 1.0 / double(n);
  } else {
    double denom = s + hp_.eps_norm;
    for (size_t i = 0; i < n; ++i) w_[i] = m_[i] / denom;
  }
  // The guarded division leaves the sum short by about eps_norm / s; a
  // second exact pass puts the weights back on the simplex to a few ulps.
  double t = stable_sum(w_.data(), n);
  if (t > 0.0)
    for (size_t i = 0; i < n; ++i) w_[i] /= t;
  double dev = std::abs(stable_sum(w_.data(), n) - 1.0);
  if (dev > max_sum_dev_) max_sum_dev_ = dev;
  for (size_t i = 0; i < n; ++i)
    if (w_[i] < min_weight_) min_weight_ = w_[i];
}

double WeightState::entropy() const {
  double h = 0.0;
  for (double wi : w_)
    if (wi > 0.0) h -= wi * std::log(wi);
  return h;
}

double effective_decay_rate(const std::vector<double>& w,
                            const std::vector<double>& lambda,
                            const std::vector<double>& r) {
  check_size(lambda.size(), w.size(), "decay rates");
  check_size(r.size(), w.size(), "residuals");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < w.size(); ++i) {
    double wr2 = w[i] * r[i] * r[i];
    num += lambda[i] * wr2;
    den += wr2;
  }
  if (den == 0.0) throw SingularError("all weighted residuals vanish");
  return num / den;
}

}  // namespace pinnafe
