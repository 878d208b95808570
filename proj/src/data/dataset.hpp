// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string>
#include <vector>

#include "camera/camera.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "generator/generator.hpp"
#include "io/config.hpp"
#include "render/renderer.hpp"

namespace tg::data {

// One dataset entry as consumed by training and evaluation. The stored
// latent makes oracle runs possible (the trigrid that produced the image
// can be rebuilt exactly); it is empty for images of unknown origin.
struct ToySample {
  std::string name;  // file name inside images/
  Tensor image;      // [3, res, res] in [0, 1]
  cam::CameraPose pose;
  cam::CameraIntrinsics intr;
  std::array<double, 25> record;
  Tensor w_plus;          // [n_layers, d_w] generating latent, may be empty
  bool mirrored = false;  // set by augmentation during batch assembly
};

// Orbit pose drawn from a front-biased distribution: yaw is a clamped
// normal centered on the front view, pitch a narrow clamped normal.
cam::CameraPose sample_front_biased_pose(Rng& rng);

// Renders cfg.dataset_n images of freshly sampled latents at front-biased
// orbit poses into out_dir: images/NNNN.png, labels.json (25-number pose
// records), latents.ckpt (the sampled w+ stacks). Deterministic in
// cfg.seed; rendering a stored latent at its stored pose reproduces the
// stored image exactly.
void generate_toy_dataset(const gen::Generator& g, const render::Decoder& dec,
                          const io::RunConfig& cfg, const std::string& out_dir);

// Loads a dataset directory written by generate_toy_dataset. Latents are
// attached when latents.ckpt is present. limit < 0 loads everything.
std::vector<ToySample> load_toy_dataset(const std::string& dir,
                                        i64 limit = -1);

// Horizontal flip of a [3,H,W] (or [n,3,H,W]) image tensor. Involution,
// bit-exact.
Tensor hflip_tensor(const Tensor& img);

// Camera-and-image mirroring: flips the image across the vertical axis and
// reflects the pose across the world x = 0 plane. Applying it twice
// restores the image bit-exactly and the pose within roundoff.
ToySample mirror_augment(const ToySample& s);

// Draws `batch` samples with replacement, mirroring each with probability
// one half. The mirrored flag records what happened to each slot.
std::vector<ToySample> assemble_batch(const std::vector<ToySample>& dataset,
                                      i64 batch, Rng& rng);

}  // namespace tg::data
