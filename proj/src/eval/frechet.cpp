// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "eval/frechet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <stdexcept>

namespace tg::eval {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Gaussian fit of a row-major sample matrix: mean and (regularized)
// covariance with the unbiased 1/(n-1) normalization when possible.
void fit_gaussian(const Tensor& feats, double eps, Vec& mu, Mat& sigma) {
  if (feats.ndim() != 2) {
    throw std::invalid_argument("frechet_distance: features must be [n, d]");
  }
  const i64 n = feats.dim(0);
  const i64 d = feats.dim(1);
  if (n < 1) throw std::invalid_argument("frechet_distance: empty set");

  Eigen::Map<const Mat> x(feats.data(), d, n);  // column-major view: [d, n]
  mu = x.rowwise().mean();
  Mat centered = x.colwise() - mu;
  double norm = (n > 1) ? 1.0 / double(n - 1) : 1.0;
  sigma = norm * (centered * centered.transpose());
  sigma += eps * Mat::Identity(d, d);
}

// Symmetric PSD square root with negative-eigenvalue clamping.
Mat sqrtm_psd(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  Vec lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    lam[i] = std::sqrt(std::max(lam[i], 0.0));
  }
  return es.eigenvectors() * lam.asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Tensor& feats_a, const Tensor& feats_b,
                        double eps) {
  Vec mu_a, mu_b;
  Mat sig_a, sig_b;
  fit_gaussian(feats_a, eps, mu_a, sig_a);
  fit_gaussian(feats_b, eps, mu_b, sig_b);
  if (mu_a.size() != mu_b.size()) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }

  // Tr((Sa Sb)^{1/2}) computed as Tr((A Sb A)^{1/2}) with A = Sa^{1/2};
  // the inner matrix is symmetric PSD, so the eigendecomposition route is
  // exact where the general product square root is numerically fragile.
  Mat root_a = sqrtm_psd(sig_a);
  Mat inner = root_a * sig_b * root_a;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (inner + inner.transpose()));
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    tr_sqrt += std::sqrt(std::max(es.eigenvalues()[i], 0.0));
  }

  double d2 = (mu_a - mu_b).squaredNorm() + sig_a.trace() + sig_b.trace() -
              2.0 * tr_sqrt;
  return std::max(d2, 0.0);
}

}  // namespace tg::eval
