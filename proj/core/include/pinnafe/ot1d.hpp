#pragma once
#include <cstdint>
#include <vector>

#include "pinnafe/adam.hpp"
#include "pinnafe/density.hpp"
#include "pinnafe/image.hpp"
#include "pinnafe/irdr.hpp"
#include "pinnafe/model.hpp"
#include "pinnafe/trainer.hpp"

namespace pinnafe {

// Monotone intensity map on [0,1], stored at 256 nodes k/255 so every 8-bit
// gray level sits exactly on a node (the identity map then round-trips
// grayscale bytes exactly).  Construction rescales the raw node values to
// [0,1] endpoints and applies a running-max guard, so grid monotonicity is
// structural; decreases found in the raw values are counted, not hidden.
struct MonotoneMap {
  std::vector<double> t;  // 256 node values, nondecreasing in [0,1]
  long raw_violations = 0;

  static MonotoneMap identity();
  static MonotoneMap from_node_values(const std::vector<double>& raw);

  double operator()(double y) const;
  static double node(int k) { return double(k) / 255.0; }
};

struct EnhanceConfig {
  ModelDims dims;  // overridden to d=1 / enhancement pool defaults in ctor
  int n_interior = 256;
  AdamConfig adam;
  int bfgs_iters = 150;
  double lambda_pde = 1.0;
  double lambda_bc = 10.0;
  IrdrHyper irdr;
  bool use_irdr = true;
  uint64_t seed = 1;
  int threads = 1;
  int log_every = 100;

  EnhanceConfig();
};

struct EnhanceResult {
  MonotoneMap map;
  double ks_before = 0.0;  // source vs target
  double ks_after = 0.0;   // pushforward of source through the map vs target
  double cdf_sup_error = 0.0;  // sup |T - empirical source CDF| at the nodes
  std::vector<HistoryRow> history;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

// Solves the one-dimensional transport equation u'' nu(u') = mu with
// u'(0) = 0, u'(1) = 1 and returns T = u' as a monotone map.  mu is the
// (smoothed) source intensity density; target defaults to uniform, which
// makes T the histogram-equalization transform.
EnhanceResult train_enhancement_map(const IntensityDensity& source,
                                    const IntensityDensity& target,
                                    const EnhanceConfig& cfg);

// Histogram of the source mass pushed through the map.
IntensityDensity pushforward(const IntensityDensity& source,
                             const MonotoneMap& map);

// sup_k |T(k/255) - empirical source CDF(k/255)|.
double map_cdf_sup_distance(const MonotoneMap& map,
                            const IntensityDensity& source);

// Gray images map luminance directly; color images scale each channel by
// T(Y)/max(Y, 1/255), clipped to [0,1].
Image apply_enhancement(const Image& img, const MonotoneMap& map);

}  // namespace pinnafe
