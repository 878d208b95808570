// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Central-difference gradient checking shared by the unit tests and the
// acceptance suite. Works on any scalar-valued callable of a tensor list.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "core/autograd.hpp"
#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace tgtest {

using ScalarFn = std::function<tg::Tensor(const std::vector<tg::Tensor>&)>;

struct GradCheckResult {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
};

// Compares reverse-mode gradients of fn against central differences at every
// coordinate of every input (or a strided subset when stride > 1).
inline GradCheckResult grad_check(const ScalarFn& fn,
                                  std::vector<tg::Tensor> xs,
                                  double eps = 1e-5, tg::i64 stride = 1) {
  using tg::Tensor;
  for (auto& x : xs) x.set_requires_grad(true);
  Tensor y = fn(xs);
  auto gs = tg::grad(y, xs, /*create_graph=*/false);

  // recording stays on during the difference evals: fn may itself call
  // grad() internally (double-backward checks), which needs a live graph
  GradCheckResult res;
  for (size_t t = 0; t < xs.size(); ++t) {
    Tensor& x = xs[t];
    double* px = x.data();
    for (tg::i64 i = 0; i < x.numel(); i += stride) {
      const double orig = px[i];
      px[i] = orig + eps;
      const double yp = fn(xs).item();
      px[i] = orig - eps;
      const double ym = fn(xs).item();
      px[i] = orig;
      const double num = (yp - ym) / (2.0 * eps);
      const double ana = gs[t].data()[i];
      const double abs_err = std::fabs(num - ana);
      const double rel =
          abs_err / std::max({std::fabs(num), std::fabs(ana), 1.0});
      res.max_rel_err = std::max(res.max_rel_err, rel);
      res.max_abs_err = std::max(res.max_abs_err, abs_err);
    }
  }
  return res;
}

}  // namespace tgtest
