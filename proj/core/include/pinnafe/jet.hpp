#pragma once
#include <array>
#include <cmath>
#include <cstring>

namespace pinnafe {

// Order-2 forward jet: value, gradient and Hessian of a scalar quantity with
// respect to the evaluation point.  The Hessian is stored packed (upper
// triangle, row-major), which makes symmetry structural rather than
// numerical.  MAXD is a capacity bound; the active dimension is passed to the
// operations, so one instantiation serves d = 1..MAXD.
//
// Component layout: c[0] = value, c[1..d] = gradient,
// c[1+d .. 1+d+t-1] = packed Hessian with t = d(d+1)/2 and
// pack(i,j) = i*d - i(i-1)/2 + (j-i) for i <= j.
template <int MAXD>
struct JetT {
  static constexpr int kMaxDim = MAXD;
  static constexpr int kComps = 1 + MAXD + MAXD * (MAXD + 1) / 2;
  static constexpr int kCap = (kComps + 3) & ~3;  // padded for vector loops

  std::array<double, kCap> c{};

  double& v() { return c[0]; }
  double v() const { return c[0]; }
  double& g(int i) { return c[1 + i]; }
  double g(int i) const { return c[1 + i]; }
};

using Jet = JetT<3>;      // spatial path (d = 1, 2, 3)
using WideJet = JetT<8>;  // derivatives w.r.t. reduced feature inputs

constexpr int tri_size(int d) { return d * (d + 1) / 2; }
constexpr int jet_comps(int d) { return 1 + d + tri_size(d); }
constexpr int pack_index(int i, int j, int d) {
  // requires i <= j
  return i * d - i * (i - 1) / 2 + (j - i);
}

template <int MAXD>
inline double& jet_h(JetT<MAXD>& a, int i, int j, int d) {
  return a.c[1 + d + (i <= j ? pack_index(i, j, d) : pack_index(j, i, d))];
}
template <int MAXD>
inline double jet_h(const JetT<MAXD>& a, int i, int j, int d) {
  return a.c[1 + d + (i <= j ? pack_index(i, j, d) : pack_index(j, i, d))];
}

template <int MAXD>
inline JetT<MAXD> jet_const(double v) {
  JetT<MAXD> j;
  j.c[0] = v;
  return j;
}

// Jet of the coordinate function x -> x[axis].
template <int MAXD>
inline JetT<MAXD> jet_coord(double value, int axis) {
  JetT<MAXD> j;
  j.c[0] = value;
  j.c[1 + axis] = 1.0;
  return j;
}

template <int MAXD>
inline void jet_zero(JetT<MAXD>& a) {
  a.c.fill(0.0);
}

// out += s * a over the active components (s is point-independent).
template <int MAXD>
inline void jet_axpy(double s, const JetT<MAXD>& a, JetT<MAXD>& out, int nc) {
  for (int k = 0; k < nc; ++k) out.c[k] += s * a.c[k];
}

template <int MAXD>
inline void jet_scale(JetT<MAXD>& a, double s, int nc) {
  for (int k = 0; k < nc; ++k) a.c[k] *= s;
}

template <int MAXD>
inline JetT<MAXD> jet_add(const JetT<MAXD>& a, const JetT<MAXD>& b, int nc) {
  JetT<MAXD> r;
  for (int k = 0; k < nc; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

template <int MAXD>
inline JetT<MAXD> jet_sub(const JetT<MAXD>& a, const JetT<MAXD>& b, int nc) {
  JetT<MAXD> r;
  for (int k = 0; k < nc; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

// Product rule through order 2.  d is the active dimension; pass d = 0 for a
// value-only evaluation.
template <int MAXD>
inline JetT<MAXD> jet_mul(const JetT<MAXD>& a, const JetT<MAXD>& b, int d) {
  JetT<MAXD> r;
  r.c[0] = a.c[0] * b.c[0];
  if (d == 0) return r;
  for (int i = 0; i < d; ++i)
    r.c[1 + i] = a.c[1 + i] * b.c[0] + a.c[0] * b.c[1 + i];
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k)
      r.c[k] = a.c[k] * b.c[0] + a.c[1 + i] * b.c[1 + j] +
               a.c[1 + j] * b.c[1 + i] + a.c[0] * b.c[k];
  return r;
}

// Reverse step for jet_mul: given the adjoint of the product, accumulate the
// adjoints of both factors.  Mirrors the forward formulas exactly.
template <int MAXD>
inline void jet_mul_adj(const JetT<MAXD>& a, const JetT<MAXD>& b,
                        const JetT<MAXD>& rbar, JetT<MAXD>& abar,
                        JetT<MAXD>& bbar, int d) {
  abar.c[0] += rbar.c[0] * b.c[0];
  bbar.c[0] += rbar.c[0] * a.c[0];
  for (int i = 0; i < d; ++i) {
    abar.c[1 + i] += rbar.c[1 + i] * b.c[0];
    abar.c[0] += rbar.c[1 + i] * b.c[1 + i];
    bbar.c[1 + i] += rbar.c[1 + i] * a.c[0];
    bbar.c[0] += rbar.c[1 + i] * a.c[1 + i];
  }
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k) {
      double rb = rbar.c[k];
      abar.c[k] += rb * b.c[0];
      abar.c[1 + i] += rb * b.c[1 + j];
      abar.c[1 + j] += rb * b.c[1 + i];
      abar.c[0] += rb * b.c[k];
      bbar.c[k] += rb * a.c[0];
      bbar.c[1 + i] += rb * a.c[1 + j];
      bbar.c[1 + j] += rb * a.c[1 + i];
      bbar.c[0] += rb * a.c[k];
    }
}

// Scalar primitive derivative table: f and its first three derivatives at the
// input value.  f3 is only needed by the reverse pass (the adjoint of the
// propagated Hessian w.r.t. the input value differentiates f2 once more).
struct UTab {
  double f0, f1, f2, f3;
};

inline double sigmoid(double v) {
  return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                  : std::exp(v) / (1.0 + std::exp(v));
}
inline double softplus(double v) {
  return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}
// inverse of softplus, used to seed non-negative reparameterized weights
inline double softplus_inv(double y) {
  // y = log(1+e^x)  =>  x = log(e^y - 1); stable for small y
  return y > 20.0 ? y : std::log(std::expm1(y));
}

inline UTab tab_exp(double v) {
  double e = std::exp(v);
  return {e, e, e, e};
}
inline UTab tab_sin(double v) {
  double s = std::sin(v), c = std::cos(v);
  return {s, c, -s, -c};
}
inline UTab tab_cos(double v) {
  double s = std::sin(v), c = std::cos(v);
  return {c, -s, -c, s};
}
inline UTab tab_softplus(double v) {
  double s = sigmoid(v);
  double sp = softplus(v);
  double f2 = s * (1.0 - s);
  return {sp, s, f2, f2 * (1.0 - 2.0 * s)};
}
inline UTab tab_recip(double v) {
  double r = 1.0 / v;
  double r2 = r * r;
  return {r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2};
}
inline UTab tab_sqrt(double v) {
  double s = std::sqrt(v);
  return {s, 0.5 / s, -0.25 / (s * v), 0.375 / (s * v * v)};
}
inline UTab tab_log(double v) {
  double r = 1.0 / v;
  return {std::log(v), r, -r * r, 2.0 * r * r * r};
}
inline UTab tab_pow(double v, int k) {
  auto p = [&](int e) { return e <= 0 ? 1.0 : std::pow(v, e); };
  double kk = double(k);
  return {p(k), kk * p(k - 1), kk * (kk - 1) * p(k - 2),
          kk * (kk - 1) * (kk - 2) * p(k - 3)};
}

// f applied to a jet: chain rule through order 2.
template <int MAXD>
inline JetT<MAXD> jet_unary(const JetT<MAXD>& a, const UTab& t, int d) {
  JetT<MAXD> r;
  r.c[0] = t.f0;
  if (d == 0) return r;
  for (int i = 0; i < d; ++i) r.c[1 + i] = t.f1 * a.c[1 + i];
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k)
      r.c[k] = t.f1 * a.c[k] + t.f2 * a.c[1 + i] * a.c[1 + j];
  return r;
}

// Reverse step for jet_unary.  t must be evaluated at the same input value
// as the forward pass.
template <int MAXD>
inline void jet_unary_adj(const JetT<MAXD>& a, const UTab& t,
                          const JetT<MAXD>& rbar, JetT<MAXD>& abar, int d) {
  double v_acc = t.f1 * rbar.c[0];
  for (int i = 0; i < d; ++i) {
    abar.c[1 + i] += t.f1 * rbar.c[1 + i];
    v_acc += t.f2 * a.c[1 + i] * rbar.c[1 + i];
  }
  int k = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k) {
      double rb = rbar.c[k];
      abar.c[k] += t.f1 * rb;
      abar.c[1 + i] += t.f2 * a.c[1 + j] * rb;
      abar.c[1 + j] += t.f2 * a.c[1 + i] * rb;
      v_acc += (t.f2 * a.c[k] + t.f3 * a.c[1 + i] * a.c[1 + j]) * rb;
    }
  abar.c[0] += v_acc;
}

// Sum over active components; this is d<loss>/d<w> for out += w * jet.
template <int MAXD>
inline double jet_dot_comps(const JetT<MAXD>& a, const JetT<MAXD>& b, int nc) {
  double s = 0.0;
  for (int k = 0; k < nc; ++k) s += a.c[k] * b.c[k];
  return s;
}

// ---------------------------------------------------------------------------
// Determinant of a packed symmetric matrix (the propagated Hessian) and its
// partial derivatives w.r.t. the packed entries.  Off-diagonal packed entries
// represent two symmetric matrix entries, hence the factors of 2.
inline double det_packed(int d, const double* h) {
  switch (d) {
    case 1:
      return h[0];
    case 2:
      return h[0] * h[2] - h[1] * h[1];
    default: {
      const double a = h[0], b = h[1], c = h[2], e = h[3], f = h[4], g = h[5];
      return a * (e * g - f * f) - b * (b * g - c * f) + c * (b * f - c * e);
    }
  }
}

inline void det_packed_grad(int d, const double* h, double* out) {
  switch (d) {
    case 1:
      out[0] = 1.0;
      return;
    case 2:
      out[0] = h[2];
      out[1] = -2.0 * h[1];
      out[2] = h[0];
      return;
    default: {
      const double a = h[0], b = h[1], c = h[2], e = h[3], f = h[4], g = h[5];
      out[0] = e * g - f * f;
      out[1] = 2.0 * (c * f - b * g);
      out[2] = 2.0 * (b * f - c * e);
      out[3] = a * g - c * c;
      out[4] = 2.0 * (b * c - a * f);
      out[5] = a * e - b * b;
      return;
    }
  }
}

// Smallest eigenvalue of a symmetric matrix given packed upper-triangular
// entries, via cyclic Jacobi rotations.  Sizes here are tiny (<= 8).
inline double min_eig_packed(int d, const double* h) {
  double m[8][8];
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j, ++k) m[i][j] = m[j][i] = h[k];
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += m[i][j] * m[i][j];
    if (off < 1e-26) break;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) {
        if (std::abs(m[p][q]) < 1e-300) continue;
        double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int i = 0; i < d; ++i) {
          double aip = m[i][p], aiq = m[i][q];
          m[i][p] = c * aip - s * aiq;
          m[i][q] = s * aip + c * aiq;
        }
        for (int i = 0; i < d; ++i) {
          double api = m[p][i], aqi = m[q][i];
          m[p][i] = c * api - s * aqi;
          m[q][i] = s * api + c * aqi;
        }
      }
  }
  double mn = m[0][0];
  for (int i = 1; i < d; ++i) mn = std::min(mn, m[i][i]);
  return mn;
}

}  // namespace pinnafe
