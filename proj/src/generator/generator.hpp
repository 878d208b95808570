// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Style-based tri-grid generator. A mapping network turns (z, camera
// record) into a d_w latent with truncation toward a running average; the
// synthesis pyramid grows a learned 4x4 constant to the tri-grid
// resolution through modulated convolutions, one latent layer per stage
// (the stage table lives in docs/layer_wiring.md), and a 1x1 head emits
// 3*D*C channels reshaped to the [3,D,C,H,W] tri-grid.

#pragma once

#include <vector>

#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "io/config.hpp"

namespace tg::gen {

// Orbit distance of every camera in this project; near/far planes 1.2/4.2
// bracket the scene cube seen from this radius.
constexpr double kOrbitRadius = 2.7;

// Truncation used for sampled (not encoded) latents.
constexpr double kSamplePsi = 0.85;

// Pose record of the canonical front camera (yaw 0, pitch 0), shape [1,25].
Tensor front_pose_record();

struct Generator {
  std::vector<nn::Linear> mapping;  // leaky-relu MLP on [z, pose record]
  Tensor w_avg;                     // [1, d_w] running mean of mapped latents

  Tensor const_input;                 // [1, c, 4, 4] learned start
  std::vector<nn::ModConv2d> stages;  // one per latent layer in wiring order
  std::vector<uint8_t> stage_up;      // stage doubles resolution first
  nn::Conv2d head;                    // 1x1 to 3*D*C feature channels

  i64 d_z = 0, d_w = 0, n_layers = 0;
  i64 depth = 0, channels = 0, res = 0;

  static Generator make(const io::RunConfig& cfg, Rng& rng);

  // z: [n, d_z], cond: [n, 25] pose records, psi in [0,1].
  // Returns (1-psi)*w_avg + psi*M(z, cond); both endpoints are exact.
  Tensor map_latent(const Tensor& z, const Tensor& cond, double psi) const;

  // l independent standard-normal draws mapped with front conditioning and
  // the sampling truncation; rows are the layers of one w-plus stack.
  Tensor sample_z_plus(i64 l, Rng& rng) const;

  // [n_layers, d_w] -> [3, D, C, H, W]; deterministic and differentiable.
  Tensor synthesize(const Tensor& w_plus) const;

  // parameters the optimizer may update
  void trainable(nn::NamedTensors& out, const std::string& prefix);
  // everything a checkpoint must carry (trainable + w_avg buffer)
  void state(nn::NamedTensors& out, const std::string& prefix);

  // w_avg <- beta*w_avg + (1-beta)*rowmean(w_raw); no gradient flows
  void update_w_avg(const Tensor& w_raw, double beta);
  void set_frozen(bool frozen);

  i64 n_stages() const { return static_cast<i64>(stages.size()); }
};

}  // namespace tg::gen
