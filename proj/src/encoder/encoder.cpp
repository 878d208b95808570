// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "encoder/encoder.hpp"

#include <stdexcept>

#include "core/ops.hpp"

namespace tg::enc {

namespace {

constexpr double kSlope = 0.2;
constexpr i64 kC0 = 32, kC1 = 64, kC2 = 64;  // pyramid widths
constexpr i64 kR0 = 32, kR1 = 64, kRUp = 48, kRFuse = 32;

bool pow2_multiple(i64 big, i64 small) {
  if (big < small || big % small != 0) return false;
  i64 q = big / small;
  return (q & (q - 1)) == 0;
}

}  // namespace

Encoder Encoder::make(const io::RunConfig& cfg, Rng& rng) {
  if (cfg.resolution % 8 != 0 || cfg.resolution < 16)
    throw std::invalid_argument(
        "encoder: resolution must be a multiple of 8, at least 16");
  if (!pow2_multiple(cfg.trigrid_res, cfg.resolution))
    throw std::invalid_argument(
        "encoder: trigrid_res must be resolution times a power of two");

  Encoder e;
  e.d_w = cfg.d_w;
  e.n_layers = cfg.n_layers;
  e.depth = cfg.trigrid_depth;
  e.channels = cfg.trigrid_channels;
  e.trigrid_res = cfg.trigrid_res;
  e.resolution = cfg.resolution;

  e.b0 = nn::Conv2d::make(rng, 3, kC0, 3, 1);
  e.b1 = nn::Conv2d::make(rng, kC0, kC1, 3, 1);
  e.b2 = nn::Conv2d::make(rng, kC1, kC2, 3, 1);

  // deep rows read the flattened coarsest map, later rows read pooled
  // feature vectors from shallower levels
  const i64 deep_dim = kC2 * (cfg.resolution / 8) * (cfg.resolution / 8);
  for (i64 i = 0; i < e.n_layers; ++i) {
    i64 group = i * 3 / e.n_layers;
    i64 in = group == 0 ? deep_dim : (group == 1 ? kC1 : kC0);
    e.heads.push_back(nn::Linear::make(rng, in, e.d_w));
  }

  e.r_in = nn::Conv2d::make(rng, 9, kR0, 3, 1);
  e.r_down = nn::Conv2d::make(rng, kR0, kR1, 3, 1);
  e.r_up = nn::Conv2d::make(rng, kR1, kRUp, 3, 1);
  e.r_fuse = nn::Conv2d::make(rng, kRUp + kR0, kRFuse, 3, 1);
  e.r_head = nn::Conv2d::make(rng, kRFuse, 3 * e.depth * e.channels, 1, 0);
  // the residual stage starts as the zero function
  for (i64 i = 0; i < e.r_head.W.numel(); ++i) e.r_head.W.data()[i] = 0.0;
  for (i64 i = 0; i < e.r_head.b.numel(); ++i) e.r_head.b.data()[i] = 0.0;
  return e;
}

Tensor Encoder::encode_wplus(const Tensor& image) const {
  if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != resolution ||
      image.dim(2) != resolution)
    throw std::invalid_argument("encode_wplus: image must be [3, res, res]");

  Tensor x = ops::reshape(image, {1, 3, resolution, resolution});
  Tensor a = ops::leaky_relu(b0.forward(x), kSlope);
  Tensor b = ops::leaky_relu(b1.forward(ops::avg_pool2(a)), kSlope);
  Tensor c = ops::leaky_relu(b2.forward(ops::avg_pool2(b)), kSlope);
  Tensor pc = ops::avg_pool2(c);

  Tensor deep = ops::reshape(pc, {1, pc.numel()});
  Tensor mid = ops::mean(b, {2, 3}, false);   // [1, kC1]
  Tensor fine = ops::mean(a, {2, 3}, false);  // [1, kC0]

  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(n_layers));
  for (i64 i = 0; i < n_layers; ++i) {
    i64 group = i * 3 / n_layers;
    const Tensor& feat = group == 0 ? deep : (group == 1 ? mid : fine);
    rows.push_back(heads[static_cast<size_t>(i)].forward(feat));
  }
  return ops::cat(rows, 0);  // [n_layers, d_w]
}

Tensor Encoder::encode_residual(const Tensor& image,
                                const render::RenderOutput& first_pass) const {
  if (image.ndim() != 3 || image.dim(0) != 3 || image.dim(1) != resolution ||
      image.dim(2) != resolution)
    throw std::invalid_argument("encode_residual: image must be [3,res,res]");
  const auto& rs = first_pass.image.shape();
  if (rs != image.shape())
    throw std::invalid_argument(
        "encode_residual: first-pass render does not match the image");

  Tensor diff = ops::sub(image, first_pass.image);
  Tensor x = ops::reshape(ops::cat({image, first_pass.image, diff}, 0),
                          {1, 9, resolution, resolution});

  Tensor e0 = ops::leaky_relu(r_in.forward(x), kSlope);
  Tensor e1 = ops::leaky_relu(r_down.forward(ops::avg_pool2(e0)), kSlope);
  Tensor d0 =
      ops::leaky_relu(r_up.forward(ops::upsample2_nearest(e1)), kSlope);
  Tensor d1 =
      ops::leaky_relu(r_fuse.forward(ops::cat({d0, e0}, 1)), kSlope);
  while (d1.dim(2) < trigrid_res) d1 = ops::upsample2_nearest(d1);
  Tensor delta = r_head.forward(d1);  // [1, 3*D*C, R, R]
  return ops::reshape(delta, {3, depth, channels, trigrid_res, trigrid_res});
}

EncoderForward Encoder::forward(const Tensor& image,
                                const cam::CameraPose& pose,
                                const cam::CameraIntrinsics& intr,
                                const gen::Generator& g,
                                const render::Decoder& dec,
                                const render::RenderConfig& rc) const {
  EncoderForward out;
  out.w_plus = encode_wplus(image);
  out.t_first = g.synthesize(out.w_plus);
  out.first_render = render::render(out.t_first, dec, pose, intr, rc);
  out.residual = encode_residual(image, out.first_render);
  out.t_final = ops::add(out.t_first, out.residual);
  out.final_render = render::render(out.t_final, dec, pose, intr, rc);
  return out;
}

void Encoder::trainable(nn::NamedTensors& out, const std::string& prefix) {
  b0.params(out, prefix + ".wplus.b0");
  b1.params(out, prefix + ".wplus.b1");
  b2.params(out, prefix + ".wplus.b2");
  for (size_t i = 0; i < heads.size(); ++i)
    heads[i].params(out, prefix + ".wplus.head" + std::to_string(i));
  r_in.params(out, prefix + ".residual.in");
  r_down.params(out, prefix + ".residual.down");
  r_up.params(out, prefix + ".residual.up");
  r_fuse.params(out, prefix + ".residual.fuse");
  r_head.params(out, prefix + ".residual.head");
}

void Encoder::state(nn::NamedTensors& out, const std::string& prefix) {
  trainable(out, prefix);
}

void Encoder::set_frozen(bool frozen) {
  nn::NamedTensors all;
  trainable(all, "e");
  for (auto& [name, t] : all.items) {
    Tensor tt = t;
    tt.set_requires_grad(!frozen);
  }
}

}  // namespace tg::enc
