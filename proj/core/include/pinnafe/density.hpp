#pragma once
#include <array>
#include <vector>

#include "pinnafe/image.hpp"

namespace pinnafe {

// Intensity distribution over [0,1] at 256-bin resolution.  `raw` is the
// plain normalized histogram; `mass` is the working copy after the [1,4,6,4,1]
// smoothing kernel (renormalized at the edges so no mass is lost) and any
// flooring.  Both sum to 1.
struct IntensityDensity {
  std::array<double, 256> raw{};
  std::array<double, 256> mass{};

  static IntensityDensity from_image(const Image& img);
  static IntensityDensity from_samples(const std::vector<double>& values);
  static IntensityDensity uniform();

  // Recompute `mass` from `raw` (smoothing kernel with edge renormalization).
  void rebuild_mass();

  // Lift every bin to at least floor_frac of the uniform mass, then
  // renormalize; keeps the density strictly positive for residual quotients.
  void apply_floor(double floor_frac);

  // Piecewise-linear density (mass * 256 at bin centers, constant tails)
  // and its derivative.
  double pdf(double y) const;
  double pdf_prime(double y) const;
  // Exact CDF of that piecewise-linear density, clamped to [0,1].
  double cdf(double y) const;
  // Empirical (staircase) CDF of the raw histogram at y.
  double raw_cdf(double y) const;
};

// sup_k |CDF_a - CDF_b| over the 256 bin edges, using the smoothed mass.
double ks_distance(const IntensityDensity& a, const IntensityDensity& b);

// Positive density over the unit square built from a gray image: blur,
// lift by floor_frac of the mean, normalize to unit integral.  Bilinear
// evaluation with clamped coordinates; gradient via the same interpolant.
struct PlaneDensity {
  int w = 0, h = 0;
  std::vector<double> val;

  static PlaneDensity from_image(const Image& gray, double blur_sigma,
                                 double floor_frac);
  double at(double x, double y) const;
  void grad(double x, double y, double* gx, double* gy) const;
};

}  // namespace pinnafe
