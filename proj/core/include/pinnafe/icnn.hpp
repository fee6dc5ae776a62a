#pragma once
#include <vector>

#include "pinnafe/model.hpp"

namespace pinnafe {

// Effective (softplus-mapped) inter-layer weights plus the sigmoids needed to
// chain gradients back to the raw entries.  Rebuilt once per parameter
// update, not per point.
struct IcnnWeights {
  std::vector<double> wz;      // (depth-1) blocks of width*width
  std::vector<double> sig_wz;  // d(effective)/d(raw) per entry
  std::vector<double> rz;      // readout, width
  std::vector<double> sig_rz;

  static IcnnWeights build(const ModelParams& P);
  const double* layer(const ModelParams& P, int k) const {
    return wz.data() + size_t(k - 1) * size_t(P.dims.width) * size_t(P.dims.width);
  }
};

template <int MAXD>
struct IcnnCache {
  std::vector<JetT<MAXD>> a;  // pre-activations, depth * width
  std::vector<JetT<MAXD>> z;  // activations,     depth * width
  JetT<MAXD> out;
  // adjoint scratch
  std::vector<JetT<MAXD>> zbar;
  std::vector<JetT<MAXD>> abar;  // one layer

  void resize(const ModelDims& d) {
    a.resize(size_t(d.depth) * size_t(d.width));
    z.resize(size_t(d.depth) * size_t(d.width));
    zbar.resize(size_t(d.depth) * size_t(d.width));
    abar.resize(size_t(d.width));
  }
};

// Input-convex scalar network:
//   z_1 = sp(Wy_0 y + b_0)
//   z_{k+1} = sp(Wz_k z_k + Wy_k y + b_k)        Wz_k = softplus(raw) > 0
//   out = rz . z_depth + ry . y + rb             rz = softplus(raw) > 0
// Softplus is convex and non-decreasing and the z-weights are positive, so
// out is convex in y by construction.
template <int MAXD>
void icnn_forward(const ModelParams& P, const IcnnWeights& W,
                  const JetT<MAXD>* y, int order_dim, IcnnCache<MAXD>& c) {
  using J = JetT<MAXD>;
  const ModelDims& D = P.dims;
  const int p = D.width, m = D.m_out, nc = jet_comps(order_dim);
  for (int k = 0; k < D.depth; ++k) {
    J* a = c.a.data() + size_t(k) * size_t(p);
    const double* wy = P.block(P.layout.wy[size_t(k)]);
    const double* b = P.block(P.layout.b[size_t(k)]);
    for (int i = 0; i < p; ++i) {
      J acc;
      for (int j = 0; j < m; ++j) jet_axpy(wy[i * m + j], y[j], acc, nc);
      acc.c[0] += b[i];
      a[i] = acc;
    }
    if (k > 0) {
      const double* wz = W.layer(P, k);
      const J* zprev = c.z.data() + size_t(k - 1) * size_t(p);
      for (int i = 0; i < p; ++i) {
        J& acc = a[i];
        const double* row = wz + size_t(i) * size_t(p);
        for (int j = 0; j < p; ++j) jet_axpy(row[j], zprev[j], acc, nc);
      }
    }
    J* z = c.z.data() + size_t(k) * size_t(p);
    for (int i = 0; i < p; ++i)
      z[i] = jet_unary(a[i], tab_softplus(a[i].c[0]), order_dim);
  }
  J out;
  const J* ztop = c.z.data() + size_t(D.depth - 1) * size_t(p);
  for (int i = 0; i < p; ++i) jet_axpy(W.rz[size_t(i)], ztop[i], out, nc);
  const double* ry = P.block(P.layout.ry);
  for (int j = 0; j < m; ++j) jet_axpy(ry[j], y[j], out, nc);
  out.c[0] += P.theta[size_t(P.layout.rb)];
  c.out = out;
}

// Reverse pass.  Accumulates d<seed . out-jet>/d<theta> into grad (aligned
// with the flat layout; z-weight slots receive adjoints w.r.t. the EFFECTIVE
// weights and are chained through sigmoid(raw) by Engine::finalize_grad) and
// the adjoints of the input jets into ybar.
template <int MAXD>
void icnn_backward(const ModelParams& P, const IcnnWeights& W,
                   const JetT<MAXD>* y, int order_dim, IcnnCache<MAXD>& c,
                   const JetT<MAXD>& seed, JetT<MAXD>* ybar, double* grad) {
  using J = JetT<MAXD>;
  const ModelDims& D = P.dims;
  const int p = D.width, m = D.m_out, nc = jet_comps(order_dim);
  for (auto& j : c.zbar) jet_zero(j);

  const J* ztop = c.z.data() + size_t(D.depth - 1) * size_t(p);
  J* zbtop = c.zbar.data() + size_t(D.depth - 1) * size_t(p);
  for (int i = 0; i < p; ++i) {
    grad[P.layout.rz + i] += jet_dot_comps(seed, ztop[i], nc);
    jet_axpy(W.rz[size_t(i)], seed, zbtop[i], nc);
  }
  for (int j = 0; j < m; ++j) {
    grad[P.layout.ry + j] += jet_dot_comps(seed, y[j], nc);
    jet_axpy(P.theta[size_t(P.layout.ry) + size_t(j)], seed, ybar[j], nc);
  }
  grad[P.layout.rb] += seed.c[0];

  for (int k = D.depth - 1; k >= 0; --k) {
    const J* a = c.a.data() + size_t(k) * size_t(p);
    const J* zb = c.zbar.data() + size_t(k) * size_t(p);
    J* ab = c.abar.data();
    for (int i = 0; i < p; ++i) {
      jet_zero(ab[i]);
      jet_unary_adj(a[i], tab_softplus(a[i].c[0]), zb[i], ab[i], order_dim);
    }
    const double* wy = P.block(P.layout.wy[size_t(k)]);
    for (int i = 0; i < p; ++i) {
      grad[P.layout.b[size_t(k)] + i] += ab[i].c[0];
      const int wy_off = P.layout.wy[size_t(k)] + i * m;
      for (int j = 0; j < m; ++j) {
        grad[wy_off + j] += jet_dot_comps(ab[i], y[j], nc);
        jet_axpy(wy[i * m + j], ab[i], ybar[j], nc);
      }
    }
    if (k > 0) {
      const double* wz = W.layer(P, k);
      const J* zprev = c.z.data() + size_t(k - 1) * size_t(p);
      J* zbprev = c.zbar.data() + size_t(k - 1) * size_t(p);
      const int wz_off = P.layout.wz[size_t(k)];
      for (int i = 0; i < p; ++i) {
        const double* row = wz + size_t(i) * size_t(p);
        double* grow = grad + wz_off + i * p;
        for (int j = 0; j < p; ++j) {
          grow[j] += jet_dot_comps(ab[i], zprev[j], nc);
          jet_axpy(row[j], ab[i], zbprev[j], nc);
        }
      }
    }
  }
}

// Convenience single-shot evaluation used by tests and validation: jet of the
// network output w.r.t. its own reduced inputs.
template <int MAXD>
JetT<MAXD> icnn_eval(const ModelParams& P, const JetT<MAXD>* y,
                     int order_dim) {
  IcnnWeights W = IcnnWeights::build(P);
  IcnnCache<MAXD> cache;
  cache.resize(P.dims);
  icnn_forward(P, W, y, order_dim, cache);
  return cache.out;
}

}  // namespace pinnafe
