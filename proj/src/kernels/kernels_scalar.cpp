// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Scalar reference kernels. Written for clarity, not speed; the AVX2 table
// must match these within tolerance and the tests enforce it.

#include "kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tg::kernels {
namespace {

void s_vadd(const double* a, const double* b, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
void s_vsub(const double* a, const double* b, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = a[i] - b[i];
}
void s_vmul(const double* a, const double* b, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
void s_vaxpy(double a, const double* x, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] += a * x[i];
}
void s_vscale(const double* x, double a, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = a * x[i];
}
void s_vfma(const double* a, const double* b, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] += a[i] * b[i];
}
void s_leaky_relu(const double* x, double slope, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}
void s_leaky_mask(const double* x, double slope, double* y, i64 n) {
  for (i64 i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? 1.0 : slope;
}
double s_vdot(const double* a, const double* b, i64 n) {
  double s = 0.0;
  for (i64 i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}
double s_vsum(const double* x, i64 n) {
  double s = 0.0;
  for (i64 i = 0; i < n; ++i) s += x[i];
  return s;
}

void s_matmul(const double* a, const double* b, double* c,
              i64 m, i64 k, i64 n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(double) * m * n);
  for (i64 i = 0; i < m; ++i) {
    for (i64 p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* brow = b + p * n;
      double* crow = c + i * n;
      for (i64 j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void s_corr_valid(const double* x, const double* w, double* y,
                  const ConvShape& s) {
  const i64 ho = s.ho(), wo = s.wo();
  std::memset(y, 0, sizeof(double) * s.n * s.co * ho * wo);
  for (i64 n = 0; n < s.n; ++n) {
    for (i64 co = 0; co < s.co; ++co) {
      double* yrow0 = y + ((n * s.co + co) * ho) * wo;
      for (i64 ci = 0; ci < s.ci; ++ci) {
        const double* xc = x + ((n * s.ci + ci) * s.hx) * s.wx;
        const double* wc = w + ((co * s.ci + ci) * s.k) * s.k;
        for (i64 i = 0; i < ho; ++i) {
          double* yrow = yrow0 + i * wo;
          for (i64 a = 0; a < s.k; ++a) {
            const double* xrow = xc + (i + a) * s.wx;
            for (i64 b = 0; b < s.k; ++b) {
              const double wv = wc[a * s.k + b];
              for (i64 j = 0; j < wo; ++j) yrow[j] += wv * xrow[j + b];
            }
          }
        }
      }
    }
  }
}

void s_corr_gradw(const double* x, const double* gy, double* gw,
                  const ConvShape& s) {
  const i64 ho = s.ho(), wo = s.wo();
  std::memset(gw, 0, sizeof(double) * s.co * s.ci * s.k * s.k);
  for (i64 n = 0; n < s.n; ++n) {
    for (i64 co = 0; co < s.co; ++co) {
      const double* gc = gy + ((n * s.co + co) * ho) * wo;
      for (i64 ci = 0; ci < s.ci; ++ci) {
        const double* xc = x + ((n * s.ci + ci) * s.hx) * s.wx;
        double* wc = gw + ((co * s.ci + ci) * s.k) * s.k;
        for (i64 i = 0; i < ho; ++i) {
          const double* grow = gc + i * wo;
          for (i64 a = 0; a < s.k; ++a) {
            const double* xrow = xc + (i + a) * s.wx;
            for (i64 b = 0; b < s.k; ++b) {
              double acc = 0.0;
              for (i64 j = 0; j < wo; ++j) acc += grow[j] * xrow[j + b];
              wc[a * s.k + b] += acc;
            }
          }
        }
      }
    }
  }
}

// Shared tri-grid sampling geometry. Coordinate c in [-1,1] lands on
// continuous cell-center index (c+1)/2*extent - 0.5, clamped to the valid
// range so boundary points interpolate flat.
struct LinTap {
  i64 lo, hi;
  double thi;  // weight of hi tap; lo gets 1-thi
};

inline LinTap lin_tap(double coord, i64 extent) {
  double g = (coord + 1.0) * 0.5 * static_cast<double>(extent) - 0.5;
  g = std::min(std::max(g, 0.0), static_cast<double>(extent - 1));
  i64 lo = static_cast<i64>(g);
  if (lo > extent - 2) lo = extent - 2;
  if (extent == 1) return {0, 0, 0.0};
  return {lo, lo + 1, g - static_cast<double>(lo)};
}

// Per-plane in-plane/slice coordinates for a point p = (x, y, z).
// Plane order: XY (slice axis z), XZ (slice axis y), ZY (slice axis x).
// Storage per plane is [d][row][col][c] with row = second in-plane axis and
// col = first in-plane axis.
inline void plane_coords(const double* p, int plane,
                         double* col, double* row, double* slice) {
  switch (plane) {
    case 0: *col = p[0]; *row = p[1]; *slice = p[2]; break;
    case 1: *col = p[0]; *row = p[2]; *slice = p[1]; break;
    default: *col = p[2]; *row = p[1]; *slice = p[0]; break;
  }
}

void s_trigrid_gather(const double* planes, i64 d, i64 r, i64 c,
                      const double* pts, i64 n, double* out, double* inside) {
  const i64 plane_sz = d * r * r * c;
  for (i64 i = 0; i < n; ++i) {
    const double* p = pts + i * 3;
    double* o = out + i * c;
    std::memset(o, 0, sizeof(double) * c);
    const bool in = p[0] >= -1.0 && p[0] <= 1.0 && p[1] >= -1.0 &&
                    p[1] <= 1.0 && p[2] >= -1.0 && p[2] <= 1.0;
    inside[i] = in ? 1.0 : 0.0;
    if (!in) continue;
    for (int pl = 0; pl < 3; ++pl) {
      double col, row, slice;
      plane_coords(p, pl, &col, &row, &slice);
      const LinTap tc = lin_tap(col, r);
      const LinTap tr = lin_tap(row, r);
      const LinTap ts = lin_tap(slice, d);
      const double* base = planes + pl * plane_sz;
      for (int si = 0; si < 2; ++si) {
        const i64 sidx = si ? ts.hi : ts.lo;
        const double sw = si ? ts.thi : 1.0 - ts.thi;
        if (sw == 0.0) continue;
        const double* sl = base + sidx * r * r * c;
        const double w00 = sw * (1.0 - tr.thi) * (1.0 - tc.thi);
        const double w01 = sw * (1.0 - tr.thi) * tc.thi;
        const double w10 = sw * tr.thi * (1.0 - tc.thi);
        const double w11 = sw * tr.thi * tc.thi;
        const double* r0 = sl + (tr.lo * r + tc.lo) * c;
        const double* r1 = sl + (tr.lo * r + tc.hi) * c;
        const double* r2 = sl + (tr.hi * r + tc.lo) * c;
        const double* r3 = sl + (tr.hi * r + tc.hi) * c;
        for (i64 ch = 0; ch < c; ++ch)
          o[ch] += w00 * r0[ch] + w01 * r1[ch] + w10 * r2[ch] + w11 * r3[ch];
      }
    }
  }
}

void s_trigrid_scatter(const double* gout, i64 d, i64 r, i64 c,
                       const double* pts, i64 n, double* gplanes) {
  const i64 plane_sz = d * r * r * c;
  for (i64 i = 0; i < n; ++i) {
    const double* p = pts + i * 3;
    const double* g = gout + i * c;
    const bool in = p[0] >= -1.0 && p[0] <= 1.0 && p[1] >= -1.0 &&
                    p[1] <= 1.0 && p[2] >= -1.0 && p[2] <= 1.0;
    if (!in) continue;
    for (int pl = 0; pl < 3; ++pl) {
      double col, row, slice;
      plane_coords(p, pl, &col, &row, &slice);
      const LinTap tc = lin_tap(col, r);
      const LinTap tr = lin_tap(row, r);
      const LinTap ts = lin_tap(slice, d);
      double* base = gplanes + pl * plane_sz;
      for (int si = 0; si < 2; ++si) {
        const i64 sidx = si ? ts.hi : ts.lo;
        const double sw = si ? ts.thi : 1.0 - ts.thi;
        if (sw == 0.0) continue;
        double* sl = base + sidx * r * r * c;
        const double w00 = sw * (1.0 - tr.thi) * (1.0 - tc.thi);
        const double w01 = sw * (1.0 - tr.thi) * tc.thi;
        const double w10 = sw * tr.thi * (1.0 - tc.thi);
        const double w11 = sw * tr.thi * tc.thi;
        double* r0 = sl + (tr.lo * r + tc.lo) * c;
        double* r1 = sl + (tr.lo * r + tc.hi) * c;
        double* r2 = sl + (tr.hi * r + tc.lo) * c;
        double* r3 = sl + (tr.hi * r + tc.hi) * c;
        for (i64 ch = 0; ch < c; ++ch) {
          r0[ch] += w00 * g[ch];
          r1[ch] += w01 * g[ch];
          r2[ch] += w10 * g[ch];
          r3[ch] += w11 * g[ch];
        }
      }
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t = {
      "scalar",
      s_vadd, s_vsub, s_vmul, s_vaxpy, s_vscale, s_vfma,
      s_leaky_relu, s_leaky_mask,
      s_vdot, s_vsum,
      s_matmul,
      s_corr_valid, s_corr_gradw,
      s_trigrid_gather, s_trigrid_scatter,
  };
  return t;
}

}  // namespace tg::kernels
