// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "core/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tg {

Optimizer::Optimizer(std::vector<Tensor> params, const OptimConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.push_back(Tensor::zeros(p.shape()));
    v_.push_back(Tensor::zeros(p.shape()));
    if (cfg_.lookahead) slow_.push_back(p.copy_data());
  }
}

void Optimizer::step() {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double b1t = std::pow(b1, static_cast<double>(t_));
  const double b2t = std::pow(b2, static_cast<double>(t_));
  const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
  const double rho_t =
      rho_inf - 2.0 * static_cast<double>(t_) * b2t / (1.0 - b2t);

  // rectification multiplier; below the threshold the variance estimate is
  // too noisy and the update falls back to the bare first moment
  const bool use_var = !cfg_.rectified || rho_t > 4.0;
  double rect = 1.0;
  if (cfg_.rectified && use_var)
    rect = std::sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) /
                     ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t));

  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    const Tensor g = p.grad();
    if (!g.defined()) continue;
    double* pm = m_[i].data();
    double* pv = v_[i].data();
    double* pp = p.data();
    const double* pg = g.data();
    const i64 n = p.numel();
    for (i64 j = 0; j < n; ++j) {
      pm[j] = b1 * pm[j] + (1.0 - b1) * pg[j];
      pv[j] = b2 * pv[j] + (1.0 - b2) * pg[j] * pg[j];
      const double mhat = pm[j] / (1.0 - b1t);
      double upd;
      if (use_var) {
        const double vhat = std::sqrt(pv[j] / (1.0 - b2t));
        upd = rect * mhat / (vhat + cfg_.eps);
      } else {
        upd = mhat;
      }
      pp[j] -= cfg_.lr * upd;
    }
  }

  if (cfg_.lookahead && t_ % cfg_.lookahead_k == 0) {
    for (size_t i = 0; i < params_.size(); ++i) {
      double* ps = slow_[i].data();
      double* pp = params_[i].data();
      const i64 n = params_[i].numel();
      for (i64 j = 0; j < n; ++j) {
        ps[j] += cfg_.lookahead_alpha * (pp[j] - ps[j]);
        pp[j] = ps[j];
      }
    }
  }
}

void Optimizer::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Optimizer::state(nn::NamedTensors& out, const std::string& prefix) const {
  out.add(prefix + ".t", Tensor::full({1}, static_cast<double>(t_)));
  for (size_t i = 0; i < params_.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    out.add(base + ".m", m_[i]);
    out.add(base + ".v", v_[i]);
    if (cfg_.lookahead) out.add(base + ".slow", slow_[i]);
  }
}

void Optimizer::load_state(const nn::NamedTensors& in,
                           const std::string& prefix) {
  const Tensor* t = in.find(prefix + ".t");
  if (!t) throw std::runtime_error("optimizer state missing " + prefix);
  t_ = static_cast<i64>(t->data()[0]);
  for (size_t i = 0; i < params_.size(); ++i) {
    const std::string base = prefix + "." + std::to_string(i);
    const Tensor* m = in.find(base + ".m");
    const Tensor* v = in.find(base + ".v");
    if (!m || !v)
      throw std::runtime_error("optimizer state missing moments " + base);
    m_[i].assign_data(*m);
    v_[i].assign_data(*v);
    if (cfg_.lookahead) {
      const Tensor* s = in.find(base + ".slow");
      if (!s) throw std::runtime_error("optimizer state missing slow " + base);
      slow_[i].assign_data(*s);
    }
  }
}

}  // namespace tg
