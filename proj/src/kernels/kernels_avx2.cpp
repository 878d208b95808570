// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// AVX2+FMA kernels. This TU is the only one compiled with -mavx2 -mfma; it
// must not be entered on machines without those features (dispatch.cpp
// checks cpuid first). Tail elements fall back to scalar code in place.

#include "kernels/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tg::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void a_vadd(const double* a, const double* b, double* y, i64 n) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}
void a_vsub(const double* a, const double* b, double* y, i64 n) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] - b[i];
}
void a_vmul(const double* a, const double* b, double* y, i64 n) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                          _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}
void a_vaxpy(double a, const double* x, double* y, i64 n) {
  const __m256d av = _mm256_set1_pd(a);
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}
void a_vscale(const double* x, double a, double* y, i64 n) {
  const __m256d av = _mm256_set1_pd(a);
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) y[i] = a * x[i];
}
void a_vfma(const double* a, const double* b, double* y, i64 n) {
  i64 i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i,
                     _mm256_fmadd_pd(_mm256_loadu_pd(a + i),
                                     _mm256_loadu_pd(b + i),
                                     _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a[i] * b[i];
}
void a_leaky_relu(const double* x, double slope, double* y, i64 n) {
  const __m256d sl = _mm256_set1_pd(slope);
  const __m256d zero = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d neg = _mm256_mul_pd(v, sl);
    const __m256d mask = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(neg, v, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
}
void a_leaky_mask(const double* x, double slope, double* y, i64 n) {
  const __m256d sl = _mm256_set1_pd(slope);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(y + i, _mm256_blendv_pd(sl, one, mask));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? 1.0 : slope;
}
double a_vdot(const double* a, const double* b, i64 n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                         _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}
double a_vsum(const double* x, i64 n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  i64 i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_add_pd(s0, _mm256_loadu_pd(x + i));
    s1 = _mm256_add_pd(s1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) s0 = _mm256_add_pd(s0, _mm256_loadu_pd(x + i));
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += x[i];
  return s;
}

// Row-major GEMM with a 4x8 register tile (4 rows of A, 8 columns of C held
// in two ymm each... 4 rows x 2 vectors = 8 accumulators).
void a_matmul(const double* a, const double* b, double* c,
              i64 m, i64 k, i64 n, bool acc) {
  if (!acc) std::memset(c, 0, sizeof(double) * m * n);
  i64 i = 0;
  for (; i + 4 <= m; i += 4) {
    i64 j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_loadu_pd(c + (i + 0) * n + j);
      __m256d c01 = _mm256_loadu_pd(c + (i + 0) * n + j + 4);
      __m256d c10 = _mm256_loadu_pd(c + (i + 1) * n + j);
      __m256d c11 = _mm256_loadu_pd(c + (i + 1) * n + j + 4);
      __m256d c20 = _mm256_loadu_pd(c + (i + 2) * n + j);
      __m256d c21 = _mm256_loadu_pd(c + (i + 2) * n + j + 4);
      __m256d c30 = _mm256_loadu_pd(c + (i + 3) * n + j);
      __m256d c31 = _mm256_loadu_pd(c + (i + 3) * n + j + 4);
      for (i64 p = 0; p < k; ++p) {
        const __m256d b0 = _mm256_loadu_pd(b + p * n + j);
        const __m256d b1 = _mm256_loadu_pd(b + p * n + j + 4);
        __m256d av;
        av = _mm256_set1_pd(a[(i + 0) * k + p]);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_set1_pd(a[(i + 1) * k + p]);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_set1_pd(a[(i + 2) * k + p]);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_set1_pd(a[(i + 3) * k + p]);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      _mm256_storeu_pd(c + (i + 0) * n + j, c00);
      _mm256_storeu_pd(c + (i + 0) * n + j + 4, c01);
      _mm256_storeu_pd(c + (i + 1) * n + j, c10);
      _mm256_storeu_pd(c + (i + 1) * n + j + 4, c11);
      _mm256_storeu_pd(c + (i + 2) * n + j, c20);
      _mm256_storeu_pd(c + (i + 2) * n + j + 4, c21);
      _mm256_storeu_pd(c + (i + 3) * n + j, c30);
      _mm256_storeu_pd(c + (i + 3) * n + j + 4, c31);
    }
    // Column tail, one vector / scalar at a time for the 4-row band.
    for (; j < n; ++j) {
      for (i64 ii = i; ii < i + 4; ++ii) {
        double s = c[ii * n + j];
        for (i64 p = 0; p < k; ++p) s += a[ii * k + p] * b[p * n + j];
        c[ii * n + j] = s;
      }
    }
  }
  for (; i < m; ++i) {
    for (i64 p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      a_vaxpy(av, b + p * n, c + i * n, n);
    }
  }
}

// Valid correlation: register-tile four output vectors (16 doubles) along
// the output row, stream the k*k*ci weight taps through them.
void a_corr_valid(const double* x, const double* w, double* y,
                  const ConvShape& s) {
  const i64 ho = s.ho(), wo = s.wo();
  std::memset(y, 0, sizeof(double) * s.n * s.co * ho * wo);
  for (i64 n = 0; n < s.n; ++n) {
    const double* xn = x + n * s.ci * s.hx * s.wx;
    for (i64 co = 0; co < s.co; ++co) {
      const double* wc0 = w + co * s.ci * s.k * s.k;
      double* yc = y + ((n * s.co + co) * ho) * wo;
      for (i64 i = 0; i < ho; ++i) {
        double* yrow = yc + i * wo;
        i64 j = 0;
        for (; j + 16 <= wo; j += 16) {
          __m256d acc0 = _mm256_loadu_pd(yrow + j);
          __m256d acc1 = _mm256_loadu_pd(yrow + j + 4);
          __m256d acc2 = _mm256_loadu_pd(yrow + j + 8);
          __m256d acc3 = _mm256_loadu_pd(yrow + j + 12);
          const double* wp = wc0;
          for (i64 ci = 0; ci < s.ci; ++ci) {
            const double* xc = xn + (ci * s.hx + i) * s.wx + j;
            for (i64 a = 0; a < s.k; ++a) {
              const double* xrow = xc + a * s.wx;
              for (i64 b = 0; b < s.k; ++b, ++wp) {
                const __m256d wv = _mm256_set1_pd(*wp);
                acc0 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(xrow + b), acc0);
                acc1 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(xrow + b + 4), acc1);
                acc2 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(xrow + b + 8), acc2);
                acc3 = _mm256_fmadd_pd(wv, _mm256_loadu_pd(xrow + b + 12), acc3);
              }
            }
          }
          _mm256_storeu_pd(yrow + j, acc0);
          _mm256_storeu_pd(yrow + j + 4, acc1);
          _mm256_storeu_pd(yrow + j + 8, acc2);
          _mm256_storeu_pd(yrow + j + 12, acc3);
        }
        for (; j + 4 <= wo; j += 4) {
          __m256d acc = _mm256_loadu_pd(yrow + j);
          const double* wp = wc0;
          for (i64 ci = 0; ci < s.ci; ++ci) {
            const double* xc = xn + (ci * s.hx + i) * s.wx + j;
            for (i64 a = 0; a < s.k; ++a) {
              const double* xrow = xc + a * s.wx;
              for (i64 b = 0; b < s.k; ++b, ++wp)
                acc = _mm256_fmadd_pd(_mm256_set1_pd(*wp),
                                      _mm256_loadu_pd(xrow + b), acc);
            }
          }
          _mm256_storeu_pd(yrow + j, acc);
        }
        for (; j < wo; ++j) {
          double acc = yrow[j];
          const double* wp = wc0;
          for (i64 ci = 0; ci < s.ci; ++ci) {
            const double* xc = xn + (ci * s.hx + i) * s.wx + j;
            for (i64 a = 0; a < s.k; ++a)
              for (i64 b = 0; b < s.k; ++b, ++wp) acc += *wp * xc[a * s.wx + b];
          }
          yrow[j] = acc;
        }
      }
    }
  }
}

void a_corr_gradw(const double* x, const double* gy, double* gw,
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
            for (i64 b = 0; b < s.k; ++b)
              wc[a * s.k + b] += a_vdot(grow, xrow + b, wo);
          }
        }
      }
    }
  }
}

// Tri-grid kernels share the scalar tap / weight computation; only the
// per-channel accumulation is vectorized, which is where the time goes once
// c >= 8. Geometry helpers are duplicated from the scalar TU on purpose so
// each table stands alone.
struct LinTap {
  i64 lo, hi;
  double thi;
};

inline LinTap lin_tap(double coord, i64 extent) {
  double g = (coord + 1.0) * 0.5 * static_cast<double>(extent) - 0.5;
  g = std::min(std::max(g, 0.0), static_cast<double>(extent - 1));
  i64 lo = static_cast<i64>(g);
  if (extent == 1) return {0, 0, 0.0};
  if (lo > extent - 2) lo = extent - 2;
  return {lo, lo + 1, g - static_cast<double>(lo)};
}

inline void plane_coords(const double* p, int plane,
                         double* col, double* row, double* slice) {
  switch (plane) {
    case 0: *col = p[0]; *row = p[1]; *slice = p[2]; break;
    case 1: *col = p[0]; *row = p[2]; *slice = p[1]; break;
    default: *col = p[2]; *row = p[1]; *slice = p[0]; break;
  }
}

void a_trigrid_gather(const double* planes, i64 d, i64 r, i64 c,
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
        i64 ch = 0;
        const __m256d v00 = _mm256_set1_pd(w00), v01 = _mm256_set1_pd(w01);
        const __m256d v10 = _mm256_set1_pd(w10), v11 = _mm256_set1_pd(w11);
        for (; ch + 4 <= c; ch += 4) {
          __m256d acc = _mm256_loadu_pd(o + ch);
          acc = _mm256_fmadd_pd(v00, _mm256_loadu_pd(r0 + ch), acc);
          acc = _mm256_fmadd_pd(v01, _mm256_loadu_pd(r1 + ch), acc);
          acc = _mm256_fmadd_pd(v10, _mm256_loadu_pd(r2 + ch), acc);
          acc = _mm256_fmadd_pd(v11, _mm256_loadu_pd(r3 + ch), acc);
          _mm256_storeu_pd(o + ch, acc);
        }
        for (; ch < c; ++ch)
          o[ch] += w00 * r0[ch] + w01 * r1[ch] + w10 * r2[ch] + w11 * r3[ch];
      }
    }
  }
}

void a_trigrid_scatter(const double* gout, i64 d, i64 r, i64 c,
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
        i64 ch = 0;
        const __m256d v00 = _mm256_set1_pd(w00), v01 = _mm256_set1_pd(w01);
        const __m256d v10 = _mm256_set1_pd(w10), v11 = _mm256_set1_pd(w11);
        for (; ch + 4 <= c; ch += 4) {
          const __m256d gv = _mm256_loadu_pd(g + ch);
          _mm256_storeu_pd(r0 + ch, _mm256_fmadd_pd(v00, gv,
                                                    _mm256_loadu_pd(r0 + ch)));
          _mm256_storeu_pd(r1 + ch, _mm256_fmadd_pd(v01, gv,
                                                    _mm256_loadu_pd(r1 + ch)));
          _mm256_storeu_pd(r2 + ch, _mm256_fmadd_pd(v10, gv,
                                                    _mm256_loadu_pd(r2 + ch)));
          _mm256_storeu_pd(r3 + ch, _mm256_fmadd_pd(v11, gv,
                                                    _mm256_loadu_pd(r3 + ch)));
        }
        for (; ch < c; ++ch) {
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

const KernelTable* avx2_table() {
  static const KernelTable t = {
      "avx2",
      a_vadd, a_vsub, a_vmul, a_vaxpy, a_vscale, a_vfma,
      a_leaky_relu, a_leaky_mask,
      a_vdot, a_vsum,
      a_matmul,
      a_corr_valid, a_corr_gradw,
      a_trigrid_gather, a_trigrid_scatter,
  };
  return &t;
}

}  // namespace tg::kernels

#else  // !(__AVX2__ && __FMA__)

namespace tg::kernels {
const KernelTable* avx2_table() { return nullptr; }
}

#endif
