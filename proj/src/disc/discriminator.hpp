// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Feature-space discriminator. Tri-grids are flattened plane-and-slice
// into channels and scored by a bias-free convolutional stack (leaky-relu
// 0.2, batch normalization on the middle blocks, widths doubling from 16
// and capped at 128), closed by a 3x3 valid convolution and global average
// pooling to one unbounded scalar per sample. The same stack over 3-channel
// inputs serves as the image-domain ablation.

#pragma once

#include <vector>

#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "io/config.hpp"

namespace tg::disc {

// [3,D,C,H,W] -> [3*D*C,H,W]; pure reshape, shares the buffer
Tensor reshape_for_disc(const Tensor& trigrid);
// inverse of reshape_for_disc
Tensor trigrid_from_disc(const Tensor& stacked, i64 d, i64 c);
// batch of tri-grids -> [n, 3*D*C, H, W]
Tensor stack_for_disc(const std::vector<Tensor>& trigrids);

struct Discriminator {
  std::vector<nn::Conv2d> blocks;   // bias-free, pool after each
  std::vector<nn::BatchNorm2d> bns;  // one per block after the first
  nn::Conv2d final_conv;             // bias-free 3x3 valid
  i64 in_channels = 0, res = 0;

  // in_channels 3*D*C over the tri-grid resolution, or 3 over the image
  // resolution for the image-domain ablation
  static Discriminator make(i64 in_channels, i64 res, Rng& rng);
  static Discriminator for_trigrid(const io::RunConfig& cfg, Rng& rng);
  static Discriminator for_images(const io::RunConfig& cfg, Rng& rng);

  // x: [n, in_channels, res, res] -> [n, 1]. training toggles batch-norm
  // batch statistics; the R1 path must score in evaluation mode.
  Tensor score(const Tensor& x, bool training);
  // single tri-grid convenience: reshape, add batch dim, score
  Tensor score_trigrid(const Tensor& trigrid, bool training);

  void trainable(nn::NamedTensors& out, const std::string& prefix);
  void state(nn::NamedTensors& out, const std::string& prefix);
  void set_frozen(bool frozen);
};

}  // namespace tg::disc
