// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "core/nn.hpp"

#include <cmath>

#include "core/autograd.hpp"

namespace tg::nn {

namespace {
// gain for leaky_relu(0.2) nonlinearities
constexpr double kGain = 1.3720238095238095;  // sqrt(2 / (1 + 0.04))
}  // namespace

Tensor init_conv_weight(Rng& rng, i64 co, i64 ci, i64 k) {
  const double std = kGain / std::sqrt(static_cast<double>(ci * k * k));
  return Tensor::randn({co, ci, k, k}, rng, std);
}

Tensor init_linear_weight(Rng& rng, i64 in, i64 out) {
  const double std = kGain / std::sqrt(static_cast<double>(in));
  return Tensor::randn({in, out}, rng, std);
}

Linear Linear::make(Rng& rng, i64 in, i64 out, bool bias) {
  Linear l;
  l.W = init_linear_weight(rng, in, out).set_requires_grad(true);
  if (bias) l.b = Tensor::zeros({out}).set_requires_grad(true);
  return l;
}

Tensor Linear::forward(const Tensor& x) const {
  Tensor y = ops::matmul(x, W);
  if (b.defined()) y = y + b;
  return y;
}

void Linear::params(NamedTensors& out, const std::string& prefix) {
  out.add(prefix + ".W", W);
  if (b.defined()) out.add(prefix + ".b", b);
}

Conv2d Conv2d::make(Rng& rng, i64 ci, i64 co, i64 k, int pad, bool bias) {
  Conv2d c;
  c.W = init_conv_weight(rng, co, ci, k).set_requires_grad(true);
  c.pad = pad;
  if (bias) c.b = Tensor::zeros({co}).set_requires_grad(true);
  return c;
}

Tensor Conv2d::forward(const Tensor& x) const {
  Tensor y = ops::conv2d(x, W, pad);
  if (b.defined()) y = y + ops::reshape(b, {1, b.dim(0), 1, 1});
  return y;
}

void Conv2d::params(NamedTensors& out, const std::string& prefix) {
  out.add(prefix + ".W", W);
  if (b.defined()) out.add(prefix + ".b", b);
}

ModConv2d ModConv2d::make(Rng& rng, i64 ci, i64 co, i64 k, int pad, i64 dlat) {
  ModConv2d m;
  m.W = init_conv_weight(rng, co, ci, k).set_requires_grad(true);
  m.style = Linear::make(rng, dlat, ci, true);
  // style scales start at exactly 1 so a fresh layer is a plain conv
  m.style.b = Tensor::ones({ci}).set_requires_grad(true);
  m.b = Tensor::zeros({co}).set_requires_grad(true);
  m.pad = pad;
  return m;
}

Tensor ModConv2d::forward(const Tensor& x, const Tensor& wlat) const {
  const i64 n = x.dim(0), ci = W.dim(1), co = W.dim(0);
  Tensor s = style.forward(wlat);  // [n, ci]
  std::vector<Tensor> outs;
  outs.reserve(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) {
    Tensor si = ops::reshape(ops::slice(s, 0, i, 1), {1, ci, 1, 1});
    Tensor wm = ops::mul(W, si);  // [co,ci,k,k]
    Tensor norm = ops::sqrt_(
        ops::add_scalar(ops::sum(ops::square(wm), {1, 2, 3}, true), 1e-8));
    Tensor wd = ops::div(wm, norm);
    Tensor xi = ops::slice(x, 0, i, 1);
    outs.push_back(ops::conv2d(xi, wd, pad));
  }
  Tensor y = n == 1 ? outs[0] : ops::cat(outs, 0);
  return y + ops::reshape(b, {1, co, 1, 1});
}

void ModConv2d::params(NamedTensors& out, const std::string& prefix) {
  out.add(prefix + ".W", W);
  style.params(out, prefix + ".style");
  out.add(prefix + ".b", b);
}

BatchNorm2d BatchNorm2d::make(i64 c) {
  BatchNorm2d bn;
  bn.gamma = Tensor::ones({c}).set_requires_grad(true);
  bn.beta = Tensor::zeros({c}).set_requires_grad(true);
  bn.run_mean = Tensor::zeros({c});
  bn.run_var = Tensor::ones({c});
  return bn;
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  const i64 c = gamma.dim(0);
  const Shape cs{1, c, 1, 1};
  Tensor g = ops::reshape(gamma, cs);
  Tensor be = ops::reshape(beta, cs);
  if (!training) {
    Tensor mu = ops::reshape(run_mean, cs);
    Tensor var = ops::reshape(run_var, cs);
    return ops::div(x - mu, ops::sqrt_(ops::add_scalar(var, eps))) * g + be;
  }
  Tensor mu = ops::mean(x, {0, 2, 3}, true);
  Tensor xc = x - mu;
  Tensor var = ops::mean(ops::square(xc), {0, 2, 3}, true);
  Tensor y = ops::div(xc, ops::sqrt_(ops::add_scalar(var, eps))) * g + be;
  {
    // biased batch statistics roll into the running buffers, untracked
    NoGradGuard ng;
    double* rm = run_mean.data();
    double* rv = run_var.data();
    const double* pm = mu.data();
    const double* pv = var.data();
    for (i64 i = 0; i < c; ++i) {
      rm[i] += momentum * (pm[i] - rm[i]);
      rv[i] += momentum * (pv[i] - rv[i]);
    }
  }
  return y;
}

void BatchNorm2d::params(NamedTensors& out, const std::string& prefix) {
  out.add(prefix + ".gamma", gamma);
  out.add(prefix + ".beta", beta);
}

void BatchNorm2d::buffers(NamedTensors& out, const std::string& prefix) {
  out.add(prefix + ".run_mean", run_mean);
  out.add(prefix + ".run_var", run_var);
}

}  // namespace tg::nn
