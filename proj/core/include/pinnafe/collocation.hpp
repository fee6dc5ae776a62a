#pragma once
#include <cstdint>
#include <vector>

#include "pinnafe/problem.hpp"

namespace pinnafe {

// A fixed training point set: interior points with their right-hand-side
// values and boundary points with their Dirichlet values, flattened as
// d-tuples.  `anchors` optionally carries supervised targets (exact or
// boundary-only values) for pretraining stages.
struct CollocationSet {
  int d = 0;
  std::vector<double> interior;  // n_int * d
  std::vector<double> f_int;     // n_int
  std::vector<double> boundary;  // n_bd * d
  std::vector<double> g_bd;      // n_bd
  std::vector<double> anchors;   // n_anchor * d
  std::vector<double> anchor_u;  // n_anchor

  int n_interior() const { return int(f_int.size()); }
  int n_boundary() const { return int(g_bd.size()); }
  int n_anchors() const { return int(anchor_u.size()); }
  const double* interior_at(int i) const { return interior.data() + size_t(i) * size_t(d); }
  const double* boundary_at(int i) const { return boundary.data() + size_t(i) * size_t(d); }
  const double* anchor_at(int i) const { return anchors.data() + size_t(i) * size_t(d); }
};

// Uniform random interior points (rejecting any excluded band around a
// singularity) plus a deterministic boundary mesh:
//   1D: the two endpoints;
//   2D: perimeter walk with each corner emitted exactly once;
//   3D: per-face grids with shared edges/corners deduplicated.
// `n_boundary` is a target; the realized count is the closest mesh size.
CollocationSet sample_collocation(const ProblemSpec& prob, int n_interior,
                                  int n_boundary, uint64_t seed);

// Supervised anchors: boundary-only (`boundary_only = true`, values from g)
// or scattered interior+boundary values from the exact solution.
void add_anchors(CollocationSet& set, const ProblemSpec& prob, int n_anchor,
                 bool boundary_only, uint64_t seed);

}  // namespace pinnafe
