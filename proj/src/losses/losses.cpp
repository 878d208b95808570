// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "losses/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "core/autograd.hpp"
#include "core/ops.hpp"

namespace tg::loss {

namespace {

constexpr double kLeak = 0.2;
constexpr double kNormEps = 1e-10;

// Accept [3,H,W] or [n,3,H,W]; always hand back a batched view.
Tensor as_batch(const Tensor& x, const char* who) {
  if (x.ndim() == 3) {
    return ops::reshape(x, {1, x.dim(0), x.dim(1), x.dim(2)});
  }
  if (x.ndim() == 4) return x;
  throw std::invalid_argument(std::string(who) +
                              ": expected a [3,H,W] or [n,3,H,W] image");
}

// Unit-normalize across the channel dimension at every spatial location.
Tensor channel_normalize(const Tensor& f) {
  Tensor sq = ops::sum(ops::square(f), {1}, true);
  return ops::div(f, ops::sqrt_(ops::add_scalar(sq, kNormEps)));
}

// min(x, hi) phrased through clamp_min so 1.0 passes through untouched.
Tensor clamp_to_unit(const Tensor& x) {
  Tensor lo = ops::clamp_min(x, -1.0);
  return ops::neg(ops::clamp_min(ops::neg(lo), -1.0));
}

void freeze(nn::NamedTensors& params) {
  for (auto& [name, t] : params.items) {
    (void)name;
    t.set_requires_grad(false);
  }
}

}  // namespace

LossWeights LossWeights::from_config(const io::RunConfig& cfg) {
  LossWeights w;
  w.perceptual = cfg.lambda_perceptual;
  w.l2 = cfg.lambda_l2;
  w.identity = cfg.lambda_identity;
  w.adv = cfg.lambda_adv;
  w.disc = cfg.lambda_disc;
  w.r1_weight = cfg.r1_weight;
  w.r1_interval = cfg.r1_interval;
  w.validate();
  return w;
}

void LossWeights::validate() const {
  if (perceptual < 0 || l2 < 0 || identity < 0 || adv < 0 || disc < 0 ||
      r1_weight < 0) {
    throw std::invalid_argument("loss weights must be nonnegative");
  }
  if (r1_interval < 1) {
    throw std::invalid_argument("r1_interval must be at least 1");
  }
}

PerceptualMetric PerceptualMetric::make() {
  // The pyramid's weights are an arbitrary but fixed random basis; any
  // reseed would silently change every recorded metric, so the seed lives
  // here and nowhere else.
  Rng rng = Rng::seeded(0x5eed, "perceptual-metric");
  PerceptualMetric m;
  m.l0 = nn::Conv2d::make(rng, 3, 16, 3, 1);
  m.l1 = nn::Conv2d::make(rng, 16, 32, 3, 1);
  m.l2 = nn::Conv2d::make(rng, 32, 64, 3, 1);
  nn::NamedTensors p;
  m.l0.params(p, "l0.");
  m.l1.params(p, "l1.");
  m.l2.params(p, "l2.");
  freeze(p);
  return m;
}

Tensor PerceptualMetric::distance(const Tensor& a, const Tensor& b) const {
  Tensor xa = as_batch(a, "perceptual");
  Tensor xb = as_batch(b, "perceptual");
  if (xa.shape() != xb.shape()) {
    throw std::invalid_argument("perceptual: image shapes differ");
  }

  // Run both images through the same pyramid and compare the normalized
  // feature maps level by level. Identical inputs follow identical code
  // paths, so each difference is exactly zero, not merely tiny.
  std::vector<const nn::Conv2d*> levels = {&l0, &l1, &l2};
  Tensor total;
  for (size_t i = 0; i < levels.size(); ++i) {
    xa = ops::leaky_relu(levels[i]->forward(xa), kLeak);
    xb = ops::leaky_relu(levels[i]->forward(xb), kLeak);
    Tensor d = ops::mean(
        ops::square(ops::sub(channel_normalize(xa), channel_normalize(xb))));
    total = (i == 0) ? d : ops::add(total, d);
    if (i + 1 < levels.size()) {
      xa = ops::avg_pool2(xa);
      xb = ops::avg_pool2(xb);
    }
  }
  return ops::scale(total, 1.0 / static_cast<double>(levels.size()));
}

IdentityEmbedder IdentityEmbedder::make() {
  Rng rng = Rng::seeded(0x1d, "identity-embedder");
  IdentityEmbedder e;
  e.c0 = nn::Conv2d::make(rng, 3, 16, 3, 1);
  e.c1 = nn::Conv2d::make(rng, 16, 32, 3, 1);
  e.proj = nn::Linear::make(rng, 32, 64);
  nn::NamedTensors p;
  e.c0.params(p, "c0.");
  e.c1.params(p, "c1.");
  e.proj.params(p, "proj.");
  freeze(p);
  return e;
}

Tensor IdentityEmbedder::embed(const Tensor& image) const {
  Tensor x = as_batch(image, "identity");
  x = ops::avg_pool2(ops::leaky_relu(c0.forward(x), kLeak));
  x = ops::avg_pool2(ops::leaky_relu(c1.forward(x), kLeak));
  // Global average over space, then a linear projection.
  Tensor pooled = ops::mean(x, {2, 3}, false);  // [n, 32]
  Tensor out = proj.forward(pooled);            // [n, 32]
  if (out.dim(0) != 1) {
    throw std::invalid_argument("identity: expected a single image");
  }
  return ops::reshape(out, {out.dim(1)});
}

Tensor IdentityEmbedder::similarity(const Tensor& a, const Tensor& b) const {
  Tensor ea = embed(a);
  Tensor eb = embed(b);
  Tensor dot = ops::sum(ops::mul(ea, eb));
  Tensor sa = ops::sum(ops::square(ea));
  Tensor sb = ops::sum(ops::square(eb));
  // For a == b this is dot / sqrt(s * s) with dot == s, and IEEE sqrt of a
  // correctly rounded square returns the original value, so the ratio is
  // exactly 1. The floor only guards the all-zero embedding.
  Tensor denom = ops::sqrt_(ops::clamp_min(ops::mul(sa, sb), 1e-300));
  return clamp_to_unit(ops::div(dot, denom));
}

Tensor adv_gen_loss(const Tensor& score) {
  return ops::mean(ops::softplus(ops::neg(score)));
}

Tensor adv_disc_loss(const Tensor& real_score, const Tensor& fake_score) {
  return ops::add(ops::mean(ops::softplus(ops::neg(real_score))),
                  ops::mean(ops::softplus(fake_score)));
}

Tensor r1_penalty(disc::Discriminator& d, const Tensor& x, double r1_weight) {
  if (!x.requires_grad()) {
    throw std::invalid_argument("r1_penalty: input must be tracked");
  }
  Tensor s = ops::sum(d.score(x, /*training=*/false));
  Tensor g = grad(s, {x}, /*create_graph=*/true)[0];
  double n = static_cast<double>(x.dim(0));
  return ops::scale(ops::sum(ops::square(g)), r1_weight / n);
}

Losses Losses::make(const LossWeights& w) {
  w.validate();
  Losses l;
  l.w = w;
  l.perc = PerceptualMetric::make();
  l.ident = IdentityEmbedder::make();
  return l;
}

LossBreakdown Losses::loss_e1(const Tensor& render,
                              const Tensor& target) const {
  LossBreakdown out;
  Tensor p = perc.distance(render, target);
  Tensor mse = ops::mean(ops::square(ops::sub(render, target)));
  Tensor sim = ident.similarity(render, target);
  Tensor id_term = ops::add_scalar(ops::neg(sim), 1.0);
  out.total = ops::add(ops::add(ops::scale(p, w.perceptual),
                                ops::scale(mse, w.l2)),
                       ops::scale(id_term, w.identity));
  out.perceptual = p.data()[0];
  out.l2 = mse.data()[0];
  out.identity = sim.data()[0];
  return out;
}

LossBreakdown Losses::loss_e2(const Tensor& render, const Tensor& target,
                              const Tensor& disc_score) const {
  LossBreakdown out = loss_e1(render, target);
  Tensor adv = adv_gen_loss(disc_score);
  out.total = ops::add(out.total, ops::scale(adv, w.adv));
  out.adv = adv.data()[0];
  return out;
}

}  // namespace tg::loss
