// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "data/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "io/checkpoint.hpp"
#include "io/labels.hpp"
#include "io/png.hpp"

namespace tg::data {

namespace fs = std::filesystem;

cam::CameraPose sample_front_biased_pose(Rng& rng) {
  double yaw = std::clamp(rng.normal() * 0.7, -M_PI, M_PI);
  double pitch = std::clamp(rng.normal() * 0.12, -0.3, 0.3);
  return cam::pose_from_orbit(yaw, pitch, gen::kOrbitRadius);
}

void generate_toy_dataset(const gen::Generator& g, const render::Decoder& dec,
                          const io::RunConfig& cfg,
                          const std::string& out_dir) {
  if (cfg.dataset_n < 1) {
    throw std::invalid_argument("generate_toy_dataset: dataset_n must be >= 1");
  }
  fs::create_directories(fs::path(out_dir) / "images");

  render::RenderConfig rc;
  rc.resolution = cfg.resolution;
  rc.n_samples = cfg.n_samples;
  rc.near_plane = cfg.near_plane;
  rc.far_plane = cfg.far_plane;

  Rng rng = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), "toy-dataset");
  cam::CameraIntrinsics intr;

  std::vector<io::LabelEntry> labels;
  nn::NamedTensors latents;
  for (i64 i = 0; i < cfg.dataset_n; ++i) {
    Tensor w_plus = g.sample_z_plus(cfg.n_layers, rng);
    cam::CameraPose pose = sample_front_biased_pose(rng);

    Tensor trigrid = g.synthesize(w_plus);
    render::RenderOutput out = render::render(trigrid, dec, pose, intr, rc);

    char name[32];
    std::snprintf(name, sizeof(name), "%04lld.png",
                  static_cast<long long>(i));
    io::write_png((fs::path(out_dir) / "images" / name).string(),
                  io::tensor_to_image(out.image));
    labels.emplace_back(name, cam::pose_record(pose, intr));
    latents.add(std::string("w_plus.") + name, w_plus);
  }
  io::write_labels((fs::path(out_dir) / "labels.json").string(), labels);
  io::save_checkpoint((fs::path(out_dir) / "latents.ckpt").string(),
                      latents, cfg.fingerprint());
}

std::vector<ToySample> load_toy_dataset(const std::string& dir, i64 limit) {
  std::vector<io::LabelEntry> labels =
      io::read_labels((fs::path(dir) / "labels.json").string());

  const nn::NamedTensors* latents = nullptr;
  io::Checkpoint ckpt;
  std::string latents_path = (fs::path(dir) / "latents.ckpt").string();
  if (fs::exists(latents_path)) {
    ckpt = io::load_checkpoint(latents_path);
    latents = &ckpt.arrays;
  }

  std::vector<ToySample> out;
  for (const auto& [name, record] : labels) {
    if (limit >= 0 && static_cast<i64>(out.size()) >= limit) break;
    ToySample s;
    s.name = name;
    s.image = io::image_to_tensor(
        io::read_png((fs::path(dir) / "images" / name).string()));
    auto [pose, intr] = cam::parse_pose_record(record);
    s.pose = pose;
    s.intr = intr;
    s.record = record;
    if (latents) {
      if (const Tensor* w = latents->find("w_plus." + name)) s.w_plus = *w;
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) {
    throw std::runtime_error("load_toy_dataset: no records in " + dir);
  }
  return out;
}

Tensor hflip_tensor(const Tensor& img) {
  if (img.ndim() != 3 && img.ndim() != 4) {
    throw std::invalid_argument("hflip_tensor: expected [3,H,W] or [n,3,H,W]");
  }
  Tensor out = img.copy_data();
  i64 w = img.dim(img.ndim() - 1);
  i64 rows = img.numel() / w;
  double* d = out.data();
  const double* s = img.data();
  for (i64 r = 0; r < rows; ++r) {
    for (i64 x = 0; x < w; ++x) d[r * w + x] = s[r * w + (w - 1 - x)];
  }
  return out;
}

ToySample mirror_augment(const ToySample& s) {
  ToySample m = s;
  m.image = hflip_tensor(s.image);
  m.pose = cam::mirror_pose(s.pose);
  m.record = cam::pose_record(m.pose, s.intr);
  m.mirrored = !s.mirrored;
  return m;
}

std::vector<ToySample> assemble_batch(const std::vector<ToySample>& dataset,
                                      i64 batch, Rng& rng) {
  if (dataset.empty()) {
    throw std::invalid_argument("assemble_batch: empty dataset");
  }
  std::vector<ToySample> out;
  out.reserve(static_cast<size_t>(batch));
  for (i64 i = 0; i < batch; ++i) {
    const ToySample& pick =
        dataset[static_cast<size_t>(rng.below(dataset.size()))];
    bool flip = rng.uniform() < 0.5;
    out.push_back(flip ? mirror_augment(pick) : pick);
  }
  return out;
}

}  // namespace tg::data
