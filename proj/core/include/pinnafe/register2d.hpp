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

// Transport map samples on the fixed image's pixel grid, in unit-square
// coordinates: pixel (i, j) center maps to (tx, ty).
struct FlowField {
  int w = 0, h = 0;
  std::vector<double> tx, ty;

  static FlowField identity(int w, int h);
  size_t idx(int i, int j) const { return size_t(j) * size_t(w) + size_t(i); }
  static double cx(int i, int w_) { return (i + 0.5) / double(w_); }
  static double cy(int j, int h_) { return (j + 0.5) / double(h_); }
};

struct RegisterConfig {
  ModelDims dims;  // 2-D potential field defaults set in the ctor
  int n_interior = 1024;
  int n_boundary = 128;
  int sim_grid = 32;  // similarity sampled on sim_grid^2 interior points

  AdamConfig adam_anchor;  // identity-fit pretraining
  AdamConfig adam;         // composite stage
  int bfgs_iters = 100;

  double w_pde = 1.0;
  double w_sim = 10.0;
  double w_bnd = 1.0;

  double blur_sigma = 2.0;   // training-side image smoothing (pixels)
  double floor_frac = 0.05;  // density lift, fraction of the mean
  IrdrHyper irdr;
  bool use_irdr = true;

  uint64_t seed = 1;
  int threads = 1;
  int log_every = 100;

  RegisterConfig();
};

// All mask- and map-quality metrics of one registration outcome.
struct RegMetrics {
  double dsc = 0.0;
  double jaccard = 0.0;
  double hd95 = 0.0;        // pixels
  double fold_ratio = 0.0;  // fraction of grid cells with det J <= 0
  double jacobian_mean = 0.0;
  double flow_mag_mean = 0.0;  // mean |T(x) - x|, unit-domain units
  double smoothness = 0.0;     // mean squared displacement gradient
};

struct RegisterResult {
  FlowField flow;
  Image warped;  // moving resampled through the map, fixed frame
  RegMetrics metrics;
  std::vector<HistoryRow> history;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
};

// Registers `moving` onto `fixed` (same size, gray or color) by learning a
// transport potential whose gradient is the correspondence map: the map
// pushes the fixed-frame density onto the moving-frame density, an identity
// anchor stage precedes the composite objective (equation + similarity +
// boundary), and the polish stage runs with frozen collocation weights.
RegisterResult register_images(const Image& fixed, const Image& moving,
                               const RegisterConfig& cfg);

// Backward warp: out(x) = moving(flow(x)), bilinear, clamped coordinates.
Image warp_image(const Image& moving, const FlowField& flow);

// Metrics of a given flow against the pair (masks by Otsu thresholding).
RegMetrics compute_metrics(const Image& fixed, const Image& moving,
                           const FlowField& flow);

void write_flow_csv(const std::string& path, const FlowField& flow);

}  // namespace pinnafe
