// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/tensor.hpp"

namespace tg::eval {

// Squared Frechet distance between Gaussian fits of two feature sets
// (rows are samples):
//   d^2 = |mu_a - mu_b|^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2})
// Covariances are regularized with eps * I so degenerate sets never crash;
// the matrix square root comes from an eigendecomposition of the
// symmetrized product with tiny negative eigenvalues clamped to zero.
// Symmetric in its arguments and nonnegative up to roundoff (clamped).
double frechet_distance(const Tensor& feats_a, const Tensor& feats_b,
                        double eps = 1e-6);

}  // namespace tg::eval
