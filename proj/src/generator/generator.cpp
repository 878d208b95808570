// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "generator/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "camera/camera.hpp"
#include "core/ops.hpp"

namespace tg::gen {

namespace {

constexpr int kMappingLayers = 4;
constexpr double kLeakySlope = 0.2;

// pyramid width at a given resolution: 64 up to 8x8, halving afterwards
// with a floor of 16
i64 width_at(i64 r) {
  if (r <= 8) return 64;
  return std::max<i64>(16, 512 / r);
}

bool is_pow2(i64 x) { return x > 0 && (x & (x - 1)) == 0; }

}  // namespace

Tensor front_pose_record() {
  auto pose = cam::pose_from_orbit(0.0, 0.0, kOrbitRadius);
  auto rec = cam::pose_record(pose, cam::CameraIntrinsics{});
  return cam::pose_record_tensor({rec});
}

Generator Generator::make(const io::RunConfig& cfg, Rng& rng) {
  if (!is_pow2(cfg.trigrid_res) || cfg.trigrid_res < 8)
    throw std::invalid_argument(
        "generator: trigrid_res must be a power of two >= 8");

  Generator g;
  g.d_z = cfg.d_z;
  g.d_w = cfg.d_w;
  g.n_layers = cfg.n_layers;
  g.depth = cfg.trigrid_depth;
  g.channels = cfg.trigrid_channels;
  g.res = cfg.trigrid_res;

  i64 in = g.d_z + 25;
  for (int i = 0; i < kMappingLayers; ++i) {
    g.mapping.push_back(nn::Linear::make(rng, in, g.d_w));
    in = g.d_w;
  }
  g.w_avg = Tensor::zeros({1, g.d_w});

  // base conv at 4x4, then an up conv plus a plain conv per doubling,
  // except the final doubling which is the up conv alone
  g.const_input =
      Tensor::randn({1, width_at(4), 4, 4}, rng).set_requires_grad(true);
  i64 r = 4;
  i64 ci = width_at(4);
  auto add_stage = [&](i64 co, bool up) {
    g.stages.push_back(nn::ModConv2d::make(rng, ci, co, 3, 1, g.d_w));
    g.stage_up.push_back(up ? 1 : 0);
    ci = co;
  };
  add_stage(width_at(4), false);
  while (r < g.res) {
    r *= 2;
    add_stage(width_at(r), true);
    if (r < g.res) add_stage(width_at(r), false);
  }
  if (g.n_layers < g.n_stages())
    throw std::invalid_argument(
        "generator: n_layers smaller than the synthesis stage count");

  g.head = nn::Conv2d::make(rng, ci, 3 * g.depth * g.channels, 1, 0);
  return g;
}

Tensor Generator::map_latent(const Tensor& z, const Tensor& cond,
                             double psi) const {
  if (z.ndim() != 2 || z.dim(1) != d_z)
    throw std::invalid_argument("map_latent: z must be [n, d_z]");
  if (cond.ndim() != 2 || cond.dim(0) != z.dim(0) || cond.dim(1) != 25)
    throw std::invalid_argument("map_latent: cond must be [n, 25]");
  if (!(psi >= 0.0 && psi <= 1.0))
    throw std::invalid_argument("map_latent: psi must lie in [0, 1]");

  Tensor h = ops::cat({z, cond}, 1);
  for (const auto& layer : mapping)
    h = ops::leaky_relu(layer.forward(h), kLeakySlope);
  // affine blend; psi 0 and 1 reproduce w_avg and M(z) bit-exactly
  return ops::add(ops::scale(w_avg, 1.0 - psi), ops::scale(h, psi));
}

Tensor Generator::sample_z_plus(i64 l, Rng& rng) const {
  if (l < 1) throw std::invalid_argument("sample_z_plus: need l >= 1");
  Tensor z = Tensor::randn({l, d_z}, rng);
  Tensor front = front_pose_record();
  std::vector<Tensor> rows(static_cast<size_t>(l), front);
  return map_latent(z, ops::cat(rows, 0), kSamplePsi);
}

Tensor Generator::synthesize(const Tensor& w_plus) const {
  if (w_plus.ndim() != 2 || w_plus.dim(0) != n_layers ||
      w_plus.dim(1) != d_w)
    throw std::invalid_argument("synthesize: w_plus must be [n_layers, d_w]");

  Tensor x = const_input;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (stage_up[i]) x = ops::upsample2_nearest(x);
    Tensor wi = ops::slice(w_plus, 0, static_cast<i64>(i), 1);
    x = ops::leaky_relu(stages[i].forward(x, wi), kLeakySlope);
  }
  Tensor feats = head.forward(x);  // [1, 3*D*C, res, res]
  return ops::reshape(feats, {3, depth, channels, res, res});
}

void Generator::trainable(nn::NamedTensors& out, const std::string& prefix) {
  for (size_t i = 0; i < mapping.size(); ++i)
    mapping[i].params(out, prefix + ".map" + std::to_string(i));
  out.add(prefix + ".const_input", const_input);
  for (size_t i = 0; i < stages.size(); ++i)
    stages[i].params(out, prefix + ".stage" + std::to_string(i));
  head.params(out, prefix + ".head");
}

void Generator::state(nn::NamedTensors& out, const std::string& prefix) {
  trainable(out, prefix);
  out.add(prefix + ".w_avg", w_avg);
}

void Generator::update_w_avg(const Tensor& w_raw, double beta) {
  if (w_raw.ndim() != 2 || w_raw.dim(1) != d_w)
    throw std::invalid_argument("update_w_avg: w_raw must be [n, d_w]");
  const i64 n = w_raw.dim(0);
  for (i64 j = 0; j < d_w; ++j) {
    double m = 0.0;
    for (i64 i = 0; i < n; ++i) m += w_raw.data()[i * d_w + j];
    m /= double(n);
    w_avg.data()[j] = beta * w_avg.data()[j] + (1.0 - beta) * m;
  }
}

void Generator::set_frozen(bool frozen) {
  nn::NamedTensors all;
  trainable(all, "g");
  for (auto& [name, t] : all.items) {
    Tensor tt = t;
    tt.set_requires_grad(!frozen);
  }
}

}  // namespace tg::gen
