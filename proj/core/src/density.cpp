#include "pinnafe/density.hpp"

#include <algorithm>
#include <cmath>

#include "pinnafe/errors.hpp"

namespace pinnafe {

namespace {

constexpr int kBins = 256;
constexpr double kKernel[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                               1.0 / 16};

int bin_of(double v) {
  int b = int(std::clamp(v, 0.0, 1.0) * kBins);
  return std::min(b, kBins - 1);
}

// Scatter each raw bin's mass through the kernel; taps outside the range are
// folded back by renormalizing the inside taps, so total mass is preserved.
void smooth_mass(const std::array<double, kBins>& raw,
                 std::array<double, kBins>& out) {
  out.fill(0.0);
  for (int j = 0; j < kBins; ++j) {
    if (raw[size_t(j)] == 0.0) continue;
    double inside = 0.0;
    for (int t = -2; t <= 2; ++t)
      if (j + t >= 0 && j + t < kBins) inside += kKernel[t + 2];
    for (int t = -2; t <= 2; ++t)
      if (j + t >= 0 && j + t < kBins)
        out[size_t(j + t)] += raw[size_t(j)] * kKernel[t + 2] / inside;
  }
}

}  // namespace

void IntensityDensity::rebuild_mass() { smooth_mass(raw, mass); }

IntensityDensity IntensityDensity::from_image(const Image& img) {
  IntensityDensity d;
  long total = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      d.raw[size_t(bin_of(luminance(img, x, y)))] += 1.0;
      ++total;
    }
  if (total == 0) throw SizeMismatch("empty image");
  for (auto& v : d.raw) v /= double(total);
  d.rebuild_mass();
  return d;
}

IntensityDensity IntensityDensity::from_samples(
    const std::vector<double>& values) {
  IntensityDensity d;
  if (values.empty()) throw SizeMismatch("no samples");
  for (double v : values) d.raw[size_t(bin_of(v))] += 1.0;
  for (auto& v : d.raw) v /= double(values.size());
  d.rebuild_mass();
  return d;
}

IntensityDensity IntensityDensity::uniform() {
  IntensityDensity d;
  d.raw.fill(1.0 / kBins);
  d.mass.fill(1.0 / kBins);
  return d;
}

void IntensityDensity::apply_floor(double floor_frac) {
  const double floor_mass = floor_frac / kBins;
  double s = 0.0;
  for (auto& v : mass) {
    if (v < floor_mass) v = floor_mass;
    s += v;
  }
  for (auto& v : mass) v /= s;
}

double IntensityDensity::pdf(double y) const {
  double u = std::clamp(y, 0.0, 1.0) * kBins - 0.5;
  if (u <= 0.0) return mass[0] * kBins;
  if (u >= kBins - 1) return mass[kBins - 1] * kBins;
  int k = int(u);
  double t = u - k;
  return ((1.0 - t) * mass[size_t(k)] + t * mass[size_t(k + 1)]) * kBins;
}

double IntensityDensity::pdf_prime(double y) const {
  double u = std::clamp(y, 0.0, 1.0) * kBins - 0.5;
  if (u <= 0.0 || u >= kBins - 1) return 0.0;
  int k = int(u);
  return (mass[size_t(k + 1)] - mass[size_t(k)]) * double(kBins) * kBins;
}

double IntensityDensity::cdf(double y) const {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  // integrate the piecewise-linear pdf segment by segment
  double acc = 0.0;
  double prev = 0.0;
  for (int k = 0; k <= kBins; ++k) {
    double node = k < kBins ? (k + 0.5) / kBins : 1.0;
    double x1 = std::min(node, y);
    if (x1 > prev) {
      double p0 = pdf(prev), p1 = pdf(x1);
      acc += 0.5 * (p0 + p1) * (x1 - prev);
    }
    if (node >= y) break;
    prev = node;
  }
  return std::min(acc, 1.0);
}

double IntensityDensity::raw_cdf(double y) const {
  // mass spread uniformly within each bin: piecewise-linear staircase
  double acc = 0.0;
  for (int j = 0; j < kBins; ++j) {
    double t = (y - double(j) / kBins) * kBins;
    if (t <= 0.0) break;
    acc += raw[size_t(j)] * std::min(t, 1.0);
  }
  return acc;
}

double ks_distance(const IntensityDensity& a, const IntensityDensity& b) {
  double ca = 0.0, cb = 0.0, sup = 0.0;
  for (int k = 0; k < kBins; ++k) {
    ca += a.mass[size_t(k)];
    cb += b.mass[size_t(k)];
    sup = std::max(sup, std::abs(ca - cb));
  }
  return sup;
}

PlaneDensity PlaneDensity::from_image(const Image& gray, double blur_sigma,
                                      double floor_frac) {
  Image g = gray.ch == 1 ? gray : to_gray(gray);
  if (blur_sigma > 0.0) g = gaussian_blur(g, blur_sigma);
  PlaneDensity d;
  d.w = g.w;
  d.h = g.h;
  d.val.resize(size_t(g.w) * size_t(g.h));
  double mean = 0.0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) mean += g.at(x, y);
  mean /= double(g.w) * double(g.h);
  double lift = std::max(1e-6, floor_frac * std::max(mean, 1e-6));
  double mean2 = 0.0;
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      double v = g.at(x, y) + lift;
      d.val[size_t(y) * size_t(g.w) + size_t(x)] = v;
      mean2 += v;
    }
  mean2 /= double(g.w) * double(g.h);
  for (auto& v : d.val) v /= mean2;
  return d;
}

double PlaneDensity::at(double x, double y) const {
  double u = std::clamp(x, 0.0, 1.0) * w - 0.5;
  double v = std::clamp(y, 0.0, 1.0) * h - 0.5;
  int i0 = std::clamp(int(std::floor(u)), 0, w - 1);
  int j0 = std::clamp(int(std::floor(v)), 0, h - 1);
  int i1 = std::min(i0 + 1, w - 1), j1 = std::min(j0 + 1, h - 1);
  double tx = std::clamp(u - i0, 0.0, 1.0), ty = std::clamp(v - j0, 0.0, 1.0);
  auto g = [&](int i, int j) { return val[size_t(j) * size_t(w) + size_t(i)]; };
  return (1 - tx) * (1 - ty) * g(i0, j0) + tx * (1 - ty) * g(i1, j0) +
         (1 - tx) * ty * g(i0, j1) + tx * ty * g(i1, j1);
}

void PlaneDensity::grad(double x, double y, double* gx, double* gy) const {
  double u = std::clamp(x, 0.0, 1.0) * w - 0.5;
  double v = std::clamp(y, 0.0, 1.0) * h - 0.5;
  int i0 = std::clamp(int(std::floor(u)), 0, w - 1);
  int j0 = std::clamp(int(std::floor(v)), 0, h - 1);
  int i1 = std::min(i0 + 1, w - 1), j1 = std::min(j0 + 1, h - 1);
  double tx = std::clamp(u - i0, 0.0, 1.0), ty = std::clamp(v - j0, 0.0, 1.0);
  auto g = [&](int i, int j) { return val[size_t(j) * size_t(w) + size_t(i)]; };
  *gx = ((1 - ty) * (g(i1, j0) - g(i0, j0)) + ty * (g(i1, j1) - g(i0, j1))) *
        double(w);
  *gy = ((1 - tx) * (g(i0, j1) - g(i0, j0)) + tx * (g(i1, j1) - g(i1, j0))) *
        double(h);
}

}  // namespace pinnafe
