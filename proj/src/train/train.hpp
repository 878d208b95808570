// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "core/optim.hpp"
#include "core/rng.hpp"
#include "data/dataset.hpp"
#include "disc/discriminator.hpp"
#include "encoder/encoder.hpp"
#include "generator/generator.hpp"
#include "io/config.hpp"
#include "io/jsonl.hpp"
#include "losses/losses.hpp"
#include "render/renderer.hpp"

namespace tg::train {

// Everything a training step needs besides the trainee: weights, frozen
// metric networks, and the render setup. Built once per run.
struct TrainContext {
  io::RunConfig cfg;
  render::RenderConfig rc;
  loss::Losses losses;

  static TrainContext make(const io::RunConfig& cfg);
};

OptimConfig optim_config(const io::RunConfig& cfg);

// Throws when a loss turns non-finite; callers surface it as a failed run
// rather than continuing with poisoned weights.
void require_finite(double v, const std::string& what);

// ---------------------------------------------------------------------------
// Generator pretraining: an image-domain adversarial game against the
// procedural blob-head scene family. Stands in for a large pretrained
// model: afterwards the generator is frozen and treated as ground truth.

struct PretrainMetrics {
  double disc_loss = 0.0;
  double gen_loss = 0.0;
  double opaque_fraction = 0.0;  // front-view pixels with opacity > 0.5
};

PretrainMetrics pretrain_generator(gen::Generator& g, render::Decoder& dec,
                                   const TrainContext& ctx,
                                   io::JsonlWriter* log);

// ---------------------------------------------------------------------------
// First-stage encoder: pure reconstruction objective against a frozen
// generator. One step consumes one assembled batch.

struct E1StepMetrics {
  double total = 0.0;
  double perceptual = 0.0;
  double l2 = 0.0;
  double identity = 0.0;
};

E1StepMetrics train_step_e1(enc::Encoder& e1, Optimizer& opt,
                            const std::vector<data::ToySample>& batch,
                            const gen::Generator& g,
                            const render::Decoder& dec,
                            const TrainContext& ctx);

// Runs steps [start_step, start_step + n_steps) over the dataset with
// probability-half mirror augmentation, logging one JSONL record per step.
void train_e1(enc::Encoder& e1, Optimizer& opt,
              const std::vector<data::ToySample>& dataset,
              const gen::Generator& g, const render::Decoder& dec,
              const TrainContext& ctx, i64 start_step, i64 n_steps,
              io::JsonlWriter* log);

// ---------------------------------------------------------------------------
// Second-stage encoder plus tri-grid discriminator, trained alternately:
// each step first updates the discriminator (fresh synthesized latents as
// the real side, the encoder's tri-grids as the fake side, both under the
// same per-slot occlusion mask), then updates the encoder against the
// reconstruction and adversarial objectives.

struct E2StepMetrics {
  double e_total = 0.0;
  double e_perceptual = 0.0;
  double e_l2 = 0.0;
  double e_identity = 0.0;
  double e_adv = 0.0;
  double d_loss = 0.0;
  double r1 = 0.0;
  bool r1_applied = false;
};

E2StepMetrics train_step_e2_d(enc::Encoder& e2, disc::Discriminator* d,
                              Optimizer& opt_e, Optimizer* opt_d,
                              const std::vector<data::ToySample>& batch,
                              i64 step, Rng& zrng, const gen::Generator& g,
                              const render::Decoder& dec,
                              const TrainContext& ctx);

void train_e2(enc::Encoder& e2, disc::Discriminator* d, Optimizer& opt_e,
              Optimizer* opt_d, const std::vector<data::ToySample>& dataset,
              const gen::Generator& g, const render::Decoder& dec,
              const TrainContext& ctx, i64 start_step, i64 n_steps,
              io::JsonlWriter* log);

}  // namespace tg::train
