#include "pinnafe/engine.hpp"

#include <cmath>

#include "pinnafe/errors.hpp"

namespace pinnafe {

IcnnWeights IcnnWeights::build(const ModelParams& P) {
  IcnnWeights W;
  const int p = P.dims.width;
  const int blocks = P.dims.depth - 1;
  W.wz.resize(size_t(blocks) * size_t(p) * size_t(p));
  W.sig_wz.resize(W.wz.size());
  for (int k = 1; k < P.dims.depth; ++k) {
    const double* raw = P.block(P.layout.wz[size_t(k)]);
    double* eff = W.wz.data() + size_t(k - 1) * size_t(p) * size_t(p);
    double* sig = W.sig_wz.data() + size_t(k - 1) * size_t(p) * size_t(p);
    for (int i = 0; i < p * p; ++i) {
      eff[i] = softplus(raw[i]);
      sig[i] = sigmoid(raw[i]);
    }
  }
  W.rz.resize(size_t(p));
  W.sig_rz.resize(size_t(p));
  const double* raw = P.block(P.layout.rz);
  for (int i = 0; i < p; ++i) {
    W.rz[size_t(i)] = softplus(raw[i]);
    W.sig_rz[size_t(i)] = sigmoid(raw[i]);
  }
  return W;
}

void Engine::refresh() {
  const ModelParams& P = model_.params;
  icnn_ = IcnnWeights::build(P);
  const ModelDims& D = P.dims;
  const int heads = D.agg == AggMode::Identity ? 0 : D.heads;
  cq_.assign(size_t(heads) * size_t(D.n), 0.0);
  ck_.assign(size_t(heads) * size_t(D.n), 0.0);
  const double inv_dk = 1.0 / double(D.d_k);
  for (int m = 0; m < heads; ++m) {
    const double* Q = P.block(P.layout.q[size_t(m)]);
    const double* K = P.block(P.layout.k[size_t(m)]);
    for (int j = 0; j < D.n; ++j) {
      double sq = 0.0, sk = 0.0;
      for (int i = 0; i < D.d_k; ++i) {
        sq += Q[i * D.n + j];
        sk += K[i * D.n + j];
      }
      cq_[size_t(m) * size_t(D.n) + size_t(j)] = sq * inv_dk;
      ck_[size_t(m) * size_t(D.n) + size_t(j)] = sk * inv_dk;
    }
  }
}

void Engine::make_workspace(Workspace& ws) const {
  const ModelDims& D = model_.params.dims;
  const int heads = D.agg == AggMode::Identity ? 0 : D.heads;
  const size_t n = size_t(D.n);
  ws.F.resize(n);
  ws.qm.resize(size_t(heads));
  ws.km.resize(size_t(heads));
  ws.lg.resize(size_t(heads));
  ws.em.resize(size_t(heads));
  ws.alpha.resize(size_t(heads));
  ws.Vf.resize(size_t(heads) * n);
  ws.agg.resize(size_t(D.proj_in()));
  ws.y.resize(size_t(D.m_out));
  ws.icnn.resize(D);
  ws.qmb.resize(size_t(heads));
  ws.kmb.resize(size_t(heads));
  ws.lgb.resize(size_t(heads));
  ws.emb.resize(size_t(heads));
  ws.alphab.resize(size_t(heads));
  ws.Vfb.resize(size_t(heads) * n);
  ws.aggb.resize(size_t(D.proj_in()));
  ws.yb.resize(size_t(D.m_out));
  ws.grad.assign(size_t(model_.params.layout.total), 0.0);
  ws.grad_live = false;
}

Jet Engine::forward(const double* x, int od, Workspace& ws) const {
  if (model_.has_bypass()) {
    Jet out = model_.bypass(x, od);
    for (int c = 0; c < jet_comps(od); ++c)
      if (!std::isfinite(out.c[size_t(c)]))
        throw NonFiniteError("field evaluation produced a non-finite jet");
    return out;
  }
  const ModelParams& P = model_.params;
  const ModelDims& D = P.dims;
  const int n = D.n, nc = jet_comps(od);
  const int heads = D.agg == AggMode::Identity ? 0 : D.heads;

  build_features(model_.pool, x, od, ws.F.data());

  if (heads > 0) {
    const double inv_sq = 1.0 / std::sqrt(double(D.d_k));
    for (int m = 0; m < heads; ++m) {
      Jet q, k;
      const double* cq = cq_.data() + size_t(m) * size_t(n);
      const double* ck = ck_.data() + size_t(m) * size_t(n);
      for (int j = 0; j < n; ++j) {
        jet_axpy(cq[j], ws.F[size_t(j)], q, nc);
        jet_axpy(ck[j], ws.F[size_t(j)], k, nc);
      }
      ws.qm[size_t(m)] = q;
      ws.km[size_t(m)] = k;
      Jet l = jet_mul(q, k, od);
      jet_scale(l, inv_sq, nc);
      ws.lg[size_t(m)] = l;
    }
    // softmax over per-head pooled logits; the value shift cancels exactly
    double shift = ws.lg[0].c[0];
    for (int m = 1; m < heads; ++m) shift = std::max(shift, ws.lg[size_t(m)].c[0]);
    Jet S;
    for (int m = 0; m < heads; ++m) {
      double e = std::exp(ws.lg[size_t(m)].c[0] - shift);
      ws.em[size_t(m)] = jet_unary(ws.lg[size_t(m)], UTab{e, e, e, e}, od);
      for (int c = 0; c < nc; ++c) S.c[size_t(c)] += ws.em[size_t(m)].c[size_t(c)];
    }
    ws.S = S;
    ws.r = jet_unary(S, tab_recip(S.c[0]), od);
    for (int m = 0; m < heads; ++m)
      ws.alpha[size_t(m)] = jet_mul(ws.em[size_t(m)], ws.r, od);

    for (int m = 0; m < heads; ++m) {
      const double* V = P.block(P.layout.v[size_t(m)]);
      for (int j = 0; j < n; ++j) {
        Jet acc;
        const double* row = V + size_t(j) * size_t(n);
        for (int l = 0; l < n; ++l) jet_axpy(row[l], ws.F[size_t(l)], acc, nc);
        ws.Vf[size_t(m) * size_t(n) + size_t(j)] = acc;
      }
    }
    if (D.agg == AggMode::Convex) {
      for (int j = 0; j < n; ++j) {
        Jet acc;
        for (int m = 0; m < heads; ++m) {
          Jet t = jet_mul(ws.alpha[size_t(m)], ws.Vf[size_t(m) * size_t(n) + size_t(j)], od);
          for (int c = 0; c < nc; ++c) acc.c[size_t(c)] += t.c[size_t(c)];
        }
        ws.agg[size_t(j)] = acc;
      }
    } else {  // Concat
      for (int m = 0; m < heads; ++m)
        for (int j = 0; j < n; ++j)
          ws.agg[size_t(m) * size_t(n) + size_t(j)] =
              jet_mul(ws.alpha[size_t(m)], ws.Vf[size_t(m) * size_t(n) + size_t(j)], od);
    }
  } else {
    for (int j = 0; j < n; ++j) ws.agg[size_t(j)] = ws.F[size_t(j)];
  }

  const double* proj = P.block(P.layout.proj);
  const double* pb = P.block(P.layout.proj_b);
  const int pin = D.proj_in();
  for (int i = 0; i < D.m_out; ++i) {
    Jet acc;
    const double* row = proj + size_t(i) * size_t(pin);
    for (int j = 0; j < pin; ++j) jet_axpy(row[j], ws.agg[size_t(j)], acc, nc);
    acc.c[0] += pb[i];
    ws.y[size_t(i)] = acc;
  }

  icnn_forward(P, icnn_, ws.y.data(), od, ws.icnn);

  for (int c = 0; c < nc; ++c)
    if (!std::isfinite(ws.icnn.out.c[size_t(c)]))
      throw NonFiniteError("field evaluation produced a non-finite jet");
  return ws.icnn.out;
}

void Engine::backward(const Jet& seed, int od, Workspace& ws) const {
  if (model_.has_bypass()) return;  // no parameters feed a bypass field
  const ModelParams& P = model_.params;
  const ModelDims& D = P.dims;
  const int n = D.n, nc = jet_comps(od);
  const int heads = D.agg == AggMode::Identity ? 0 : D.heads;
  double* grad = ws.grad.data();

  for (auto& j : ws.yb) jet_zero(j);
  icnn_backward(P, icnn_, ws.y.data(), od, ws.icnn, seed, ws.yb.data(), grad);

  const double* proj = P.block(P.layout.proj);
  const int pin = D.proj_in();
  for (auto& j : ws.aggb) jet_zero(j);
  for (int i = 0; i < D.m_out; ++i) {
    grad[P.layout.proj_b + i] += ws.yb[size_t(i)].c[0];
    const double* row = proj + size_t(i) * size_t(pin);
    double* grow = grad + P.layout.proj + size_t(i) * size_t(pin);
    for (int j = 0; j < pin; ++j) {
      grow[j] += jet_dot_comps(ws.yb[size_t(i)], ws.agg[size_t(j)], nc);
      jet_axpy(row[j], ws.yb[size_t(i)], ws.aggb[size_t(j)], nc);
    }
  }
  if (heads == 0) return;  // features are leaves

  for (auto& j : ws.alphab) jet_zero(j);
  for (auto& j : ws.Vfb) jet_zero(j);
  if (D.agg == AggMode::Convex) {
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < heads; ++m)
        jet_mul_adj(ws.alpha[size_t(m)], ws.Vf[size_t(m) * size_t(n) + size_t(j)],
                    ws.aggb[size_t(j)], ws.alphab[size_t(m)],
                    ws.Vfb[size_t(m) * size_t(n) + size_t(j)], od);
  } else {
    for (int m = 0; m < heads; ++m)
      for (int j = 0; j < n; ++j)
        jet_mul_adj(ws.alpha[size_t(m)], ws.Vf[size_t(m) * size_t(n) + size_t(j)],
                    ws.aggb[size_t(m) * size_t(n) + size_t(j)], ws.alphab[size_t(m)],
                    ws.Vfb[size_t(m) * size_t(n) + size_t(j)], od);
  }
  for (int m = 0; m < heads; ++m) {
    const int voff = P.layout.v[size_t(m)];
    for (int j = 0; j < n; ++j) {
      const Jet& vb = ws.Vfb[size_t(m) * size_t(n) + size_t(j)];
      double* grow = grad + voff + j * n;
      for (int l = 0; l < n; ++l)
        grow[l] += jet_dot_comps(vb, ws.F[size_t(l)], nc);
    }
  }

  // softmax reverse: alpha_m = em_m * recip(sum em)
  for (auto& j : ws.emb) jet_zero(j);
  jet_zero(ws.Sb);
  jet_zero(ws.rb);
  for (int m = 0; m < heads; ++m)
    jet_mul_adj(ws.em[size_t(m)], ws.r, ws.alphab[size_t(m)], ws.emb[size_t(m)], ws.rb, od);
  jet_unary_adj(ws.S, tab_recip(ws.S.c[0]), ws.rb, ws.Sb, od);
  for (int m = 0; m < heads; ++m)
    for (int c = 0; c < nc; ++c) ws.emb[size_t(m)].c[size_t(c)] += ws.Sb.c[size_t(c)];
  for (auto& j : ws.lgb) jet_zero(j);
  for (int m = 0; m < heads; ++m) {
    const double e = ws.em[size_t(m)].c[0];  // exp value; shift cancels in adjoint
    jet_unary_adj(ws.lg[size_t(m)], UTab{e, e, e, e}, ws.emb[size_t(m)], ws.lgb[size_t(m)], od);
  }

  const double inv_sq = 1.0 / std::sqrt(double(D.d_k));
  const double inv_dk = 1.0 / double(D.d_k);
  for (int m = 0; m < heads; ++m) {
    jet_zero(ws.qmb[size_t(m)]);
    jet_zero(ws.kmb[size_t(m)]);
    Jet lb = ws.lgb[size_t(m)];
    jet_scale(lb, inv_sq, nc);
    jet_mul_adj(ws.qm[size_t(m)], ws.km[size_t(m)], lb, ws.qmb[size_t(m)], ws.kmb[size_t(m)], od);
    const int qoff = P.layout.q[size_t(m)], koff = P.layout.k[size_t(m)];
    for (int j = 0; j < n; ++j) {
      // every row of Q_m sees the same mean-pool derivative
      double gq = inv_dk * jet_dot_comps(ws.qmb[size_t(m)], ws.F[size_t(j)], nc);
      double gk = inv_dk * jet_dot_comps(ws.kmb[size_t(m)], ws.F[size_t(j)], nc);
      for (int i = 0; i < D.d_k; ++i) {
        grad[qoff + i * n + j] += gq;
        grad[koff + i * n + j] += gk;
      }
    }
  }
}

void Engine::finalize_grad(double* grad) const {
  const ModelParams& P = model_.params;
  const int p = P.dims.width;
  for (int k = 1; k < P.dims.depth; ++k) {
    const double* sig = icnn_.sig_wz.data() + size_t(k - 1) * size_t(p) * size_t(p);
    double* g = grad + P.layout.wz[size_t(k)];
    for (int i = 0; i < p * p; ++i) g[i] *= sig[i];
  }
  double* g = grad + P.layout.rz;
  for (int i = 0; i < p; ++i) g[i] *= icnn_.sig_rz[size_t(i)];
}

Jet Engine::eval_jet(const double* x) const {
  Workspace ws;
  make_workspace(ws);
  return forward(x, model_.params.dims.d, ws);
}

double Engine::eval_value(const double* x) const {
  Workspace ws;
  make_workspace(ws);
  return forward(x, 0, ws).c[0];
}

}  // namespace pinnafe
