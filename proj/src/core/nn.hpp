// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Small neural-net building blocks on top of the op layer. Modules are
// plain structs; parameter traversal goes through NamedTensors so
// checkpointing and the optimizer see a stable, ordered name -> tensor map.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/ops.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace tg::nn {

struct NamedTensors {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) {
    items.emplace_back(name, t);
  }
  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : items)
      if (n == name) return &t;
    return nullptr;
  }
  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    out.reserve(items.size());
    for (const auto& [n, t] : items) out.push_back(t);
    return out;
  }
};

// Kaiming-normal init with leaky-relu gain; weights stay modest so f64
// softplus/sigmoid heads start in their linear regions.
Tensor init_conv_weight(Rng& rng, i64 co, i64 ci, i64 k);
Tensor init_linear_weight(Rng& rng, i64 in, i64 out);

struct Linear {
  Tensor W;  // [in, out]
  Tensor b;  // [out], undefined when bias-free
  static Linear make(Rng& rng, i64 in, i64 out, bool bias = true);
  Tensor forward(const Tensor& x) const;  // [n,in] -> [n,out]
  void params(NamedTensors& out, const std::string& prefix);
};

struct Conv2d {
  Tensor W;  // [co, ci, k, k]
  Tensor b;  // [co], undefined when bias-free
  int pad = 1;
  static Conv2d make(Rng& rng, i64 ci, i64 co, i64 k, int pad,
                     bool bias = true);
  Tensor forward(const Tensor& x) const;
  void params(NamedTensors& out, const std::string& prefix);
};

// Style-modulated convolution: a per-sample style vector scales the input
// channels of the shared weight, the result is re-normalized per output
// channel (demodulation), then convolved sample by sample.
struct ModConv2d {
  Tensor W;      // [co, ci, k, k]
  Linear style;  // latent -> per-input-channel scale, bias starts at 1
  Tensor b;      // [co]
  int pad = 1;
  static ModConv2d make(Rng& rng, i64 ci, i64 co, i64 k, int pad, i64 dlat);
  Tensor forward(const Tensor& x, const Tensor& wlat) const;
  void params(NamedTensors& out, const std::string& prefix);
};

struct BatchNorm2d {
  Tensor gamma, beta;          // learned
  Tensor run_mean, run_var;    // buffers, updated in training forward
  double momentum = 0.1;
  double eps = 1e-5;
  static BatchNorm2d make(i64 c);
  Tensor forward(const Tensor& x, bool training);
  void params(NamedTensors& out, const std::string& prefix);
  void buffers(NamedTensors& out, const std::string& prefix);
};

}  // namespace tg::nn
