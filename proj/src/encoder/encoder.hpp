// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Image encoder used by both inversion stages. A convolutional pyramid
// predicts the per-layer latent stack (coarse rows from deep features,
// fine rows from shallow ones); a second, smaller encoder-decoder sees the
// input, the first-pass render and their difference, and emits an additive
// tri-grid correction whose final layer starts at zero. The two stages
// carry disjoint parameter prefixes so they checkpoint independently.

#pragma once

#include <vector>

#include "camera/camera.hpp"
#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "generator/generator.hpp"
#include "io/config.hpp"
#include "render/renderer.hpp"

namespace tg::enc {

struct EncoderForward {
  Tensor w_plus;    // [L, d_w]
  Tensor t_first;   // synthesize(w_plus)
  render::RenderOutput first_render;
  Tensor residual;  // delta on the tri-grid
  Tensor t_final;   // t_first + residual
  render::RenderOutput final_render;
};

struct Encoder {
  // latent stage: pyramid plus one head per latent row
  nn::Conv2d b0, b1, b2;
  std::vector<nn::Linear> heads;
  // residual stage
  nn::Conv2d r_in, r_down, r_up, r_fuse, r_head;

  i64 d_w = 0, n_layers = 0;
  i64 depth = 0, channels = 0, trigrid_res = 0;
  i64 resolution = 0;

  static Encoder make(const io::RunConfig& cfg, Rng& rng);

  // [3, res, res] image in [0,1] -> [n_layers, d_w]
  Tensor encode_wplus(const Tensor& image) const;

  // correction from (image, first-pass render, difference); zero at init
  Tensor encode_residual(const Tensor& image,
                         const render::RenderOutput& first_pass) const;

  // full two-stage pass: w-plus, first-pass render, residual, final render
  EncoderForward forward(const Tensor& image, const cam::CameraPose& pose,
                         const cam::CameraIntrinsics& intr,
                         const gen::Generator& g,
                         const render::Decoder& dec,
                         const render::RenderConfig& rc) const;

  void trainable(nn::NamedTensors& out, const std::string& prefix);
  void state(nn::NamedTensors& out, const std::string& prefix);
  void set_frozen(bool frozen);
};

}  // namespace tg::enc
