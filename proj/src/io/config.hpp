// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace tg::io {

// Every run is driven by one flat key=value config file. Unknown keys are
// rejected so typos fail loudly, and serialize() emits every field so the
// archived copy of a run's config is complete on its own.
struct RunConfig {
  // architecture (covered by the fingerprint; checkpoints refuse to load
  // into a differently shaped model)
  int64_t d_z = 64;
  int64_t d_w = 64;
  int64_t n_layers = 8;
  int64_t trigrid_depth = 3;
  int64_t trigrid_channels = 8;
  int64_t trigrid_res = 64;

  // rendering
  int64_t resolution = 32;
  int64_t n_samples = 32;
  double near_plane = 1.2;
  double far_plane = 4.2;

  // occlusion
  int64_t vis_volume = 32;

  // training
  double learning_rate = 1e-4;
  int64_t batch_size = 3;
  int64_t total_steps = 2000;
  int64_t pretrain_steps = 400;
  int64_t seed = 1;
  std::string optimizer = "ranger";  // or "adam" (documented fallback)
  bool no_disc = false;
  bool image_domain_disc = false;
  bool no_occlusion = false;
  bool e2_init_from_e1 = true;

  // loss weights
  double lambda_perceptual = 0.8;
  double lambda_l2 = 1.0;
  double lambda_identity = 0.5;
  double lambda_adv = 0.001;
  double lambda_disc = 0.5;
  double r1_weight = 10.0;
  int64_t r1_interval = 16;

  // sampling and evaluation
  double truncation_psi = 0.85;
  int64_t dataset_n = 48;
  std::string data_dir = "data";
  int64_t n_views = 8;
  int64_t fid_views = 12;
  int64_t mesh_res = 32;

  void validate() const;
  // SHA-256 over the architecture fields only; stored in checkpoints.
  std::string fingerprint() const;
  std::string serialize() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

}  // namespace tg::io
