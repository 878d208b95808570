// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Low-level numeric kernels, f64 only. Every entry point has a scalar
// reference implementation and (on x86-64 with AVX2+FMA) a vectorized one;
// the active table is picked once at startup and can be overridden with the
// TRIGRID_KERNELS environment variable or kernels::select().
//
// Contracts shared by all implementations:
//  * buffers are contiguous row-major doubles, no aliasing between in/out
//    unless a signature says "in place"
//  * results must agree with the scalar reference to ~1e-12 relative
//    error (FMA contraction and vector-lane reduction order may differ)

#pragma once

#include <cstdint>
#include <string>

namespace tg::kernels {

using i64 = std::int64_t;

// Dimensions of a stride-1 "valid" correlation. Input x is [n, ci, hx, wx],
// weights w are [co, ci, k, k], output y is [n, co, hx-k+1, wx-k+1].
// Padding is applied by the caller (ops layer) before invoking these.
struct ConvShape {
  i64 n, ci, hx, wx, co, k;
  i64 ho() const { return hx - k + 1; }
  i64 wo() const { return wx - k + 1; }
};

struct KernelTable {
  const char* name;

  // Elementwise over n contiguous doubles.
  void (*vadd)(const double* a, const double* b, double* y, i64 n);
  void (*vsub)(const double* a, const double* b, double* y, i64 n);
  void (*vmul)(const double* a, const double* b, double* y, i64 n);
  void (*vaxpy)(double a, const double* x, double* y, i64 n);       // y += a*x
  void (*vscale)(const double* x, double a, double* y, i64 n);      // y = a*x
  void (*vfma)(const double* a, const double* b, double* y, i64 n); // y += a*b
  void (*leaky_relu)(const double* x, double slope, double* y, i64 n);
  // Derivative mask of leaky_relu: 1 where x > 0 else slope.
  void (*leaky_mask)(const double* x, double slope, double* y, i64 n);

  double (*vdot)(const double* a, const double* b, i64 n);
  double (*vsum)(const double* x, i64 n);

  // c[m,n] = a[m,k] * b[k,n], overwriting unless acc, then accumulating.
  void (*matmul)(const double* a, const double* b, double* c,
                 i64 m, i64 k, i64 n, bool acc);

  // Valid correlation and its weight gradient (see ConvShape).
  // corr_valid overwrites y; corr_gradw overwrites gw[co,ci,k,k].
  void (*corr_valid)(const double* x, const double* w, double* y,
                     const ConvShape& s);
  void (*corr_gradw)(const double* x, const double* gy, double* gw,
                     const ConvShape& s);

  // Tri-grid feature lookup. planes is [3, d, r, r, c] channel-last, in the
  // fixed plane order XY, XZ, ZY (in-plane axes / slice axis: xy/z, xz/y,
  // zy/x). pts is [n, 3] in [-1,1]^3 cube coordinates. For each point the
  // three planes are sampled bilinearly in-plane and linearly across slices
  // (cell-center convention, clamped) and summed into out[n, c]. Points with
  // any coordinate outside [-1,1] contribute zero and get inside[i] = 0,
  // otherwise inside[i] = 1. trigrid_scatter is the exact adjoint, adding
  // into gplanes (caller zeroes it).
  void (*trigrid_gather)(const double* planes, i64 d, i64 r, i64 c,
                         const double* pts, i64 n, double* out, double* inside);
  void (*trigrid_scatter)(const double* gout, i64 d, i64 r, i64 c,
                          const double* pts, i64 n, double* gplanes);
};

// Active table; resolves "auto" on first call.
const KernelTable& active();

// Force a table by name: "auto", "scalar", "avx2". Throws std::runtime_error
// for unknown names or unsupported instruction sets.
void select(const std::string& name);

const KernelTable& scalar_table();
bool cpu_has_avx2();

}  // namespace tg::kernels
