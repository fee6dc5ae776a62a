#pragma once
#include <string>
#include <vector>

#include "pinnafe/jet.hpp"

namespace pinnafe {

// Physical feature expansion: a fixed list of closed-form basis functions of
// the raw coordinates.  Each feature carries exact first and second
// derivatives, so the expansion is transparent to the jet propagation.
enum class FeatureKind { Coord, Square, Cube, PairProd, Exp, Sin, Cos };

struct FeatureRecipe {
  FeatureKind kind;
  int a = 0;  // primary axis
  int b = 0;  // second axis (PairProd only)
};

struct FeaturePoolSpec {
  int dim = 2;
  std::vector<FeatureRecipe> items;

  int size() const { return int(items.size()); }

  // comma-separated tags, e.g. "x,y,x^2,y^2,x*y,exp(x),exp(y)";
  // axes are named x, y, z and must exist in `dim`.
  static FeaturePoolSpec parse(int dim, const std::string& tags);
  // named presets: smooth2d, singular2d, smooth3d, ot1d
  static FeaturePoolSpec preset(const std::string& name);
  std::string tag() const;
};

// Evaluate every feature at x as a jet of the given active dimension
// (order_dim = 0 gives values only).  out must hold spec.size() jets.
void build_features(const FeaturePoolSpec& spec, const double* x,
                    int order_dim, Jet* out);

std::string feature_tag(const FeatureRecipe& r);

}  // namespace pinnafe
