// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "disc/discriminator.hpp"

#include <stdexcept>

#include "core/ops.hpp"

namespace tg::disc {

namespace {
constexpr double kSlope = 0.2;
}

Tensor reshape_for_disc(const Tensor& trigrid) {
  if (trigrid.ndim() != 5 || trigrid.dim(0) != 3)
    throw std::invalid_argument("reshape_for_disc: want [3,D,C,H,W]");
  return ops::reshape(trigrid, {3 * trigrid.dim(1) * trigrid.dim(2),
                                trigrid.dim(3), trigrid.dim(4)});
}

Tensor trigrid_from_disc(const Tensor& stacked, i64 d, i64 c) {
  if (stacked.ndim() != 3 || stacked.dim(0) != 3 * d * c)
    throw std::invalid_argument("trigrid_from_disc: channel count mismatch");
  return ops::reshape(stacked, {3, d, c, stacked.dim(1), stacked.dim(2)});
}

Tensor stack_for_disc(const std::vector<Tensor>& trigrids) {
  if (trigrids.empty())
    throw std::invalid_argument("stack_for_disc: empty batch");
  std::vector<Tensor> rows;
  rows.reserve(trigrids.size());
  for (const auto& t : trigrids) {
    Tensor flat = reshape_for_disc(t);
    rows.push_back(
        ops::reshape(flat, {1, flat.dim(0), flat.dim(1), flat.dim(2)}));
  }
  return rows.size() == 1 ? rows[0] : ops::cat(rows, 0);
}

Discriminator Discriminator::make(i64 in_channels, i64 res, Rng& rng) {
  if (res < 16 || (res & (res - 1)) != 0)
    throw std::invalid_argument(
        "discriminator: resolution must be a power of two >= 16");

  Discriminator d;
  d.in_channels = in_channels;
  d.res = res;
  i64 ci = in_channels;
  i64 co = 16;
  for (i64 r = res; r > 4; r /= 2) {
    d.blocks.push_back(nn::Conv2d::make(rng, ci, co, 3, 1, false));
    if (d.blocks.size() > 1) d.bns.push_back(nn::BatchNorm2d::make(co));
    ci = co;
    co = std::min<i64>(co * 2, 128);
  }
  d.final_conv = nn::Conv2d::make(rng, ci, 1, 3, 0, false);
  return d;
}

Discriminator Discriminator::for_trigrid(const io::RunConfig& cfg, Rng& rng) {
  return make(3 * cfg.trigrid_depth * cfg.trigrid_channels, cfg.trigrid_res,
              rng);
}

Discriminator Discriminator::for_images(const io::RunConfig& cfg, Rng& rng) {
  return make(3, cfg.resolution, rng);
}

Tensor Discriminator::score(const Tensor& x, bool training) {
  if (x.ndim() != 4 || x.dim(1) != in_channels || x.dim(2) != res ||
      x.dim(3) != res)
    throw std::invalid_argument("discriminator: input shape mismatch");

  Tensor h = x;
  for (size_t i = 0; i < blocks.size(); ++i) {
    h = blocks[i].forward(h);
    if (i > 0) h = bns[i - 1].forward(h, training);
    h = ops::avg_pool2(ops::leaky_relu(h, kSlope));
  }
  Tensor s = final_conv.forward(h);   // [n, 1, 2, 2]
  return ops::mean(s, {2, 3}, false);  // [n, 1]
}

Tensor Discriminator::score_trigrid(const Tensor& trigrid, bool training) {
  Tensor flat = reshape_for_disc(trigrid);
  return score(
      ops::reshape(flat, {1, flat.dim(0), flat.dim(1), flat.dim(2)}),
      training);
}

void Discriminator::trainable(nn::NamedTensors& out,
                              const std::string& prefix) {
  for (size_t i = 0; i < blocks.size(); ++i)
    blocks[i].params(out, prefix + ".block" + std::to_string(i));
  for (size_t i = 0; i < bns.size(); ++i)
    bns[i].params(out, prefix + ".bn" + std::to_string(i + 1));
  final_conv.params(out, prefix + ".final");
}

void Discriminator::state(nn::NamedTensors& out, const std::string& prefix) {
  trainable(out, prefix);
  for (size_t i = 0; i < bns.size(); ++i)
    bns[i].buffers(out, prefix + ".bn" + std::to_string(i + 1));
}

void Discriminator::set_frozen(bool frozen) {
  nn::NamedTensors all;
  trainable(all, "d");
  for (auto& [name, t] : all.items) {
    Tensor tt = t;
    tt.set_requires_grad(!frozen);
  }
}

}  // namespace tg::disc
