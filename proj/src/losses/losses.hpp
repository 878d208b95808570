// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/tensor.hpp"
#include "disc/discriminator.hpp"
#include "io/config.hpp"

namespace tg::loss {

// Weighted sum coefficients for the encoder objectives plus the adversarial
// side. Defaults match the training recipe the rest of the pipeline assumes;
// from_config picks up overrides from a run's config file.
struct LossWeights {
  double perceptual = 0.8;
  double l2 = 1.0;
  double identity = 0.5;
  double adv = 0.001;      // encoder-side adversarial term (second stage only)
  double disc = 0.5;       // discriminator loss scale
  double r1_weight = 10.0;
  i64 r1_interval = 16;    // penalty applied on steps divisible by this

  static LossWeights from_config(const io::RunConfig& cfg);
  void validate() const;
};

// Feature-space image distance built on a frozen, seed-fixed convolutional
// pyramid. Features are unit-normalized across channels at every spatial
// location before comparison, so the distance measures structure rather than
// raw magnitude. Properties the tests pin down: d(a,a) = 0 exactly,
// d(a,b) = d(b,a), differentiable w.r.t. both images.
struct PerceptualMetric {
  nn::Conv2d l0;  // 3 -> 16
  nn::Conv2d l1;  // 16 -> 32, after one pooling
  nn::Conv2d l2;  // 32 -> 64, after two poolings

  static PerceptualMetric make();
  // a, b: [3,H,W] or [n,3,H,W] images. Returns a scalar tensor.
  Tensor distance(const Tensor& a, const Tensor& b) const;
};

// Frozen, seed-fixed convolutional embedder standing in for a pretrained
// face-identity network. Cosine similarity of embeddings; the local-scale
// stand-in preserves the contract (sim(a,a) = 1 exactly, range [-1,1])
// without pretrained weights. The same 64-dimensional embedding feeds the
// Frechet distance, so identity and distributional scores share one ruler.
struct IdentityEmbedder {
  nn::Conv2d c0;  // 3 -> 16
  nn::Conv2d c1;  // 16 -> 32
  nn::Linear proj;  // 32 -> 64

  static IdentityEmbedder make();
  Tensor embed(const Tensor& image) const;  // [64] embedding
  // Cosine similarity as a scalar tensor in [-1, 1].
  Tensor similarity(const Tensor& a, const Tensor& b) const;
};

// Non-saturating generator-side adversarial loss: softplus(-score), averaged
// over the batch. score: [n,1] (or any shape; mean over all entries).
Tensor adv_gen_loss(const Tensor& score);

// Discriminator loss: softplus(-real) + softplus(fake), each term averaged
// over its batch. Drives real scores up and fake scores down.
Tensor adv_disc_loss(const Tensor& real_score, const Tensor& fake_score);

// Gradient penalty on the discriminator's real-batch input:
//   r1_weight * mean_i ||d score_i / d x_i||^2
// Differentiating the result reaches the discriminator parameters through
// the inner gradient, so x must be a tracked leaf. Scoring runs in eval
// mode so the per-sample gradient is well defined with batch statistics
// frozen.
Tensor r1_penalty(disc::Discriminator& d, const Tensor& x, double r1_weight);

// Scalar views of the individual terms (unweighted), recorded alongside the
// graph-carrying total for metrics logs.
struct LossBreakdown {
  Tensor total;            // weighted sum, carries the autograd graph
  double perceptual = 0.0;
  double l2 = 0.0;
  double identity = 0.0;   // cosine similarity, not the (1 - sim) term
  double adv = 0.0;        // mean softplus(-score); 0 when unused
};

// Bundle of frozen metric networks plus weights. One instance is shared by
// training, evaluation, and the acceptance checks so every consumer measures
// with identical rulers.
struct Losses {
  LossWeights w;
  PerceptualMetric perc;
  IdentityEmbedder ident;

  static Losses make(const LossWeights& w);

  // First-stage reconstruction objective:
  //   w.perceptual * perceptual + w.l2 * mse + w.identity * (1 - cosine)
  LossBreakdown loss_e1(const Tensor& render, const Tensor& target) const;

  // Second-stage objective: loss_e1 plus w.adv * softplus(-disc_score).
  LossBreakdown loss_e2(const Tensor& render, const Tensor& target,
                        const Tensor& disc_score) const;
};

}  // namespace tg::loss
