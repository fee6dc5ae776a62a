#pragma once
#include <vector>

#include "pinnafe/icnn.hpp"
#include "pinnafe/model.hpp"

namespace pinnafe {

// Per-thread scratch for one evaluation: every intermediate jet of the
// attention stage plus the convex-network cache, and the mirrored adjoints
// for the reverse pass.
struct Workspace {
  std::vector<Jet> F;             // features
  std::vector<Jet> qm, km, lg, em, alpha;  // per head
  Jet S, r;
  std::vector<Jet> Vf;            // heads * n gated head outputs
  std::vector<Jet> agg;           // proj_in jets
  std::vector<Jet> y;             // m_out reduced inputs
  IcnnCache<3> icnn;
  // adjoints
  std::vector<Jet> qmb, kmb, lgb, emb, alphab, Vfb, aggb, yb;
  Jet Sb, rb;
  std::vector<double> grad;       // flat, layout-aligned
  bool grad_live = false;

  void zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
    grad_live = true;
  }
};

// Spatial-derivative evaluation engine.  Forward propagation carries
// second-order jets w.r.t. the evaluation point through feature expansion,
// attention and the convex network; parameter derivatives come from reverse
// accumulation over the recorded evaluation.  The engine itself is immutable
// per refresh(); all mutable state lives in the caller's Workspace, so one
// engine serves many threads.
class Engine {
 public:
  explicit Engine(Model model) : model_(std::move(model)) { refresh(); }

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const ModelParams& params() const { return model_.params; }

  // Re-derive the effective weights after theta changed.
  void refresh();

  void make_workspace(Workspace& ws) const;

  // Full forward pass; order_dim = 0 evaluates values only.  The workspace
  // keeps every intermediate, ready for backward().
  Jet forward(const double* x, int order_dim, Workspace& ws) const;

  // Accumulate d<dot(seed, out-jet)>/d<theta> into ws.grad.  Must be called
  // with the workspace exactly as forward() left it.
  void backward(const Jet& seed, int order_dim, Workspace& ws) const;

  // Chain reparameterized slots (call once per accumulated batch).
  void finalize_grad(double* grad) const;

  // Convenience: jet w.r.t. all spatial axes at x.
  Jet eval_jet(const double* x) const;
  double eval_value(const double* x) const;

  int param_count() const { return model_.params.layout.total; }

 private:
  Model model_;
  IcnnWeights icnn_;
  std::vector<double> cq_, ck_;  // per-head column means of Q and K
};

struct ParamGradient {
  std::vector<double> values;
  double norm = 0.0;
};

}  // namespace pinnafe
