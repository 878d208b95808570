// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Training optimizer: Adam core with optional variance rectification
// (warmup-aware second moment) and optional slow/fast weight averaging
// (periodic interpolation toward a slow copy). Both knobs on is the default
// training configuration; both off is textbook Adam, kept as a fallback
// behind a config switch.

#pragma once

#include <cstdint>
#include <vector>

#include "core/nn.hpp"
#include "core/tensor.hpp"

namespace tg {

struct OptimConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool rectified = true;
  bool lookahead = true;
  i64 lookahead_k = 5;
  double lookahead_alpha = 0.5;
};

class Optimizer {
 public:
  Optimizer(std::vector<Tensor> params, const OptimConfig& cfg);

  // applies one update from the .grad fields; missing grads count as zero
  void step();
  void zero_grad();

  i64 step_count() const { return t_; }
  const OptimConfig& config() const { return cfg_; }

  // moment/slow tensors and the step counter, for exact training resume
  void state(nn::NamedTensors& out, const std::string& prefix) const;
  void load_state(const nn::NamedTensors& in, const std::string& prefix);

 private:
  std::vector<Tensor> params_, m_, v_, slow_;
  OptimConfig cfg_;
  i64 t_ = 0;
};

}  // namespace tg
