#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pinnafe/feature_pool.hpp"
#include "pinnafe/jet.hpp"

namespace pinnafe {

// How the K attention heads are combined before the reducing projection:
//   Convex  - convex combination: F = sum_m alpha_m * (V_m F), project n->m
//   Concat  - gated head outputs concatenated, project (K*n)->m
//   Identity- no heads; the projection sees the raw features (ablation mode)
enum class AggMode { Convex, Concat, Identity };

struct ModelDims {
  int d = 2;       // spatial dimension
  int n = 7;       // feature count
  int heads = 4;   // attention heads K
  int d_k = 8;     // per-head query/key width
  int m_out = 8;   // reduced width fed to the convex network
  int depth = 4;   // hidden layers h
  int width = 64;  // neurons per hidden layer p
  AggMode agg = AggMode::Convex;

  int proj_in() const {
    return agg == AggMode::Concat ? heads * n : n;
  }
  bool operator==(const ModelDims&) const = default;
};

// Offsets of every parameter block inside the flat vector.  Layout order
// (row-major matrices):
//   per head m:  Q_m (d_k x n), K_m (d_k x n), V_m (n x n)     [skipped for Identity]
//   projection:  P (m_out x proj_in), bias (m_out)
//   layer 0:     Wy_0 (p x m_out), b_0 (p)
//   layer k>=1:  Wz_k raw (p x p), Wy_k (p x m_out), b_k (p)   [k = 1..depth-1]
//   readout:     wz raw (p), wy (m_out), b (1)
// Wz/wz entries are stored raw and mapped through softplus when used, which
// keeps the effective weights strictly positive without constraints.
struct ModelLayout {
  std::vector<int> q, k, v;   // per-head offsets
  int proj = 0, proj_b = 0;
  std::vector<int> wz, wy, b;  // index 0 is layer 0 (wz[0] unused = -1)
  int rz = 0, ry = 0, rb = 0;
  int total = 0;

  static ModelLayout build(const ModelDims& dims);
};

struct ModelParams {
  ModelDims dims;
  ModelLayout layout;
  std::vector<double> theta;

  [[nodiscard]] static ModelParams init(const ModelDims& dims, uint64_t seed);

  // flat view <-> structured parameters
  std::vector<double> flatten() const { return theta; }
  static ModelParams unflatten(const ModelDims& dims,
                               const std::vector<double>& flat);

  int param_count() const { return layout.total; }

  const double* block(int off) const { return theta.data() + off; }
  double* block(int off) { return theta.data() + off; }
};

// A trainable field plus an optional analytic bypass.  When `bypass` is set,
// evaluation returns its jet and the parameter gradient of any loss is
// exactly zero; this gives tests a way to drive losses with closed-form
// solutions.
struct Model {
  ModelParams params;
  FeaturePoolSpec pool;
  std::function<Jet(const double*, int)> bypass;  // (x, order_dim) -> jet

  bool has_bypass() const { return bool(bypass); }
};

// Binary checkpoint: fixed header (magic, version, dims, seed, pool tag)
// followed by the raw little-endian doubles of the flat parameter vector.
void save_checkpoint(const std::string& path, const ModelParams& params,
                     uint64_t seed, const std::string& pool_tag);
ModelParams load_checkpoint(const std::string& path, uint64_t* seed_out,
                            std::string* pool_tag_out);

}  // namespace pinnafe
