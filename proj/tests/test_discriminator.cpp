// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "core/autograd.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "disc/discriminator.hpp"
#include "doctest.h"

using namespace tg;
using doctest::Approx;

TEST_CASE("plane-and-slice stacking round-trips and matches the rule") {
  Rng rng = Rng::seeded(201, "disc");

  // channel arithmetic of the full-scale layout: 3 planes x 3 slices x 32
  // channels stack to 288
  Tensor big = Tensor::randn({3, 3, 32, 8, 8}, rng);
  Tensor flat = disc::reshape_for_disc(big);
  REQUIRE(flat.shape() == std::vector<i64>({288, 8, 8}));

  // toy layout
  Tensor toy = Tensor::randn({3, 3, 8, 64, 64}, rng);
  Tensor tf = disc::reshape_for_disc(toy);
  REQUIRE(tf.shape() == std::vector<i64>({72, 64, 64}));

  Tensor back = disc::trigrid_from_disc(tf, 3, 8);
  REQUIRE(back.shape() == toy.shape());
  for (i64 i = 0; i < toy.numel(); ++i)
    CHECK(back.data()[i] == toy.data()[i]);

  // the stacking order is (plane, slice, channel): element [p,d,c,y,x]
  // lands in flat channel (p*D + d)*C + c
  Tensor probe = Tensor::zeros({3, 2, 4, 4, 4});
  probe.data()[(((2 * 2 + 1) * 4 + 3) * 4 + 1) * 4 + 2] = 5.0;  // p2 d1 c3
  Tensor pf = disc::reshape_for_disc(probe);
  CHECK(pf.data()[((2 * 2 + 1) * 4 + 3) * 16 + 1 * 4 + 2] == 5.0);

  CHECK_THROWS(disc::reshape_for_disc(Tensor::zeros({2, 3, 8, 4, 4})));
  CHECK_THROWS(disc::trigrid_from_disc(Tensor::zeros({71, 8, 8}), 3, 8));
}

TEST_CASE("scores are one finite unbounded scalar per sample") {
  io::RunConfig cfg;  // toy defaults: 72 channels at 64x64
  Rng rng = Rng::seeded(202, "disc");
  auto d = disc::Discriminator::for_trigrid(cfg, rng);
  CHECK(d.blocks.size() == 4);  // 16 -> 32 -> 64 -> 128 widths

  Rng xr = Rng::seeded(1, "x");
  Tensor t1 = Tensor::randn({3, 3, 8, 64, 64}, xr);
  Tensor t2 = Tensor::randn({3, 3, 8, 64, 64}, xr);

  Tensor s1 = d.score_trigrid(t1, false);
  REQUIRE(s1.shape() == std::vector<i64>({1, 1}));
  CHECK(std::isfinite(s1.data()[0]));

  Tensor batch = disc::stack_for_disc({t1, t2});
  REQUIRE(batch.shape() == std::vector<i64>({2, 72, 64, 64}));
  Tensor sb = d.score(batch, false);
  REQUIRE(sb.shape() == std::vector<i64>({2, 1}));

  // evaluation mode is pure: batch composition cannot leak between samples
  CHECK(sb.data()[0] == s1.data()[0]);
  Tensor sb2 = d.score(batch, false);
  for (i64 i = 0; i < 2; ++i) CHECK(sb.data()[i] == sb2.data()[i]);

  // no saturating output: at initialization the stack is positively
  // homogeneous (bias-free convs, unit batch-norm buffers), so a suitable
  // input scaling pushes the score far outside [0,1]
  double s = s1.data()[0];
  REQUIRE(s != 0.0);
  Tensor scaled = ops::scale(t1, 0.2 / std::abs(s));
  double base = d.score_trigrid(scaled, false).data()[0];
  double ten = d.score_trigrid(ops::scale(scaled, 10.0), false).data()[0];
  CHECK(ten == Approx(10.0 * base).epsilon(1e-6));
  CHECK(std::abs(ten) > 1.0);

  CHECK_THROWS(d.score(Tensor::zeros({1, 71, 64, 64}), false));
  CHECK_THROWS(d.score(Tensor::zeros({1, 72, 32, 32}), false));
}

TEST_CASE("no convolution carries a bias term") {
  io::RunConfig cfg;
  Rng rng = Rng::seeded(203, "disc");
  auto d = disc::Discriminator::for_trigrid(cfg, rng);

  for (const auto& blk : d.blocks) CHECK(!blk.b.defined());
  CHECK(!d.final_conv.b.defined());

  // the parameter tree holds only conv weights and batch-norm affines
  nn::NamedTensors params;
  d.trainable(params, "d");
  for (const auto& [name, t] : params.items) {
    bool is_conv_w = t.ndim() == 4;
    bool is_bn = name.find(".bn") != std::string::npos;
    CHECK((is_conv_w || is_bn));
  }
}

TEST_CASE("training-mode batch statistics couple samples, eval does not") {
  io::RunConfig cfg;
  Rng rng = Rng::seeded(204, "disc");
  auto d = disc::Discriminator::for_trigrid(cfg, rng);

  Rng xr = Rng::seeded(2, "x");
  Tensor a = Tensor::randn({1, 72, 64, 64}, xr);
  Tensor b1 = Tensor::randn({1, 72, 64, 64}, xr);
  Tensor b2 = ops::scale(Tensor::randn({1, 72, 64, 64}, xr), 3.0);

  auto fresh = [&]() {
    Rng r2 = Rng::seeded(204, "disc");
    return disc::Discriminator::for_trigrid(cfg, r2);
  };

  // same first sample, different batchmates: training scores differ
  auto da = fresh();
  double t1 = da.score(ops::cat({a, b1}, 0), true).data()[0];
  auto db = fresh();
  double t2 = db.score(ops::cat({a, b2}, 0), true).data()[0];
  CHECK(std::abs(t1 - t2) > 1e-12);

  // evaluation scores do not
  auto dc = fresh();
  double e1 = dc.score(ops::cat({a, b1}, 0), false).data()[0];
  double e2 = dc.score(ops::cat({a, b2}, 0), false).data()[0];
  CHECK(e1 == e2);

  // training mode advances the running buffers toward batch statistics
  auto dd = fresh();
  Tensor mean_before = Tensor::from_data(
      dd.bns[0].run_mean.shape(),
      std::vector<double>(dd.bns[0].run_mean.data(),
                          dd.bns[0].run_mean.data() +
                              dd.bns[0].run_mean.numel()));
  dd.score(ops::cat({a, b2}, 0), true);
  double moved = 0.0;
  for (i64 i = 0; i < mean_before.numel(); ++i)
    moved += std::abs(dd.bns[0].run_mean.data()[i] - mean_before.data()[i]);
  CHECK(moved > 0.0);
}

TEST_CASE("score gradients exist, are finite, and support a second pass") {
  io::RunConfig cfg;
  Rng rng = Rng::seeded(205, "disc");
  auto d = disc::Discriminator::for_trigrid(cfg, rng);

  Rng xr = Rng::seeded(3, "x");
  Tensor x = Tensor::randn({2, 72, 64, 64}, xr).set_requires_grad(true);
  Tensor s = ops::sum(d.score(x, false));
  auto gs = grad(s, {x}, true);
  REQUIRE(gs.size() == 1);
  REQUIRE(gs[0].defined());
  REQUIRE(gs[0].shape() == x.shape());
  double norm2 = 0.0;
  for (i64 i = 0; i < gs[0].numel(); ++i) {
    REQUIRE(std::isfinite(gs[0].data()[i]));
    norm2 += gs[0].data()[i] * gs[0].data()[i];
  }
  CHECK(norm2 > 0.0);

  // the input-gradient norm is itself differentiable (R1 needs this)
  Tensor penalty = ops::sum(ops::square(gs[0]));
  backward(penalty);
  REQUIRE(d.blocks[0].W.grad().defined());
  double pg = 0.0;
  for (i64 i = 0; i < d.blocks[0].W.grad().numel(); ++i) {
    REQUIRE(std::isfinite(d.blocks[0].W.grad().data()[i]));
    pg += std::abs(d.blocks[0].W.grad().data()[i]);
  }
  CHECK(pg > 0.0);

  // spot check the input gradient against finite differences
  const i64 idx = 12345;
  {
    NoGradGuard ng;
    const double h = 1e-4;
    double keep = x.data()[idx];
    x.data()[idx] = keep + h;
    double lp = ops::sum(d.score(x, false)).data()[0];
    x.data()[idx] = keep - h;
    double lm = ops::sum(d.score(x, false)).data()[0];
    x.data()[idx] = keep;
    double fd = (lp - lm) / (2.0 * h);
    CHECK(gs[0].data()[idx] == Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("image-domain variant accepts rendered frames") {
  io::RunConfig cfg;  // resolution 32
  Rng rng = Rng::seeded(206, "disc");
  auto d = disc::Discriminator::for_images(cfg, rng);
  Rng xr = Rng::seeded(4, "x");
  Tensor imgs = Tensor::uniform({3, 3, 32, 32}, xr, 0.0, 1.0);
  Tensor s = d.score(imgs, false);
  REQUIRE(s.shape() == std::vector<i64>({3, 1}));
  for (i64 i = 0; i < 3; ++i) CHECK(std::isfinite(s.data()[i]));
}
