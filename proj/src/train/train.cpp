// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "train/train.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "core/autograd.hpp"
#include "core/ops.hpp"
#include "data/blobhead.hpp"
#include "occlusion/occlusion.hpp"

namespace tg::train {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Tensor ones_mask(i64 d, i64 r) {
  return Tensor::from_data({3, d, r, r},
                           std::vector<double>(size_t(3 * d * r * r), 1.0));
}

// Occlusion mask for one sample, derived from its first-pass render depth.
Tensor occlusion_mask_from_depth(const Tensor& depth,
                                 const cam::CameraPose& pose,
                                 const cam::CameraIntrinsics& intr,
                                 const io::RunConfig& cfg) {
  occl::VisibilityVolume vol =
      occl::visibility_volume(depth, pose, intr, cfg.vis_volume);
  Tensor visible =
      occl::to_trigrid_mask(vol, cfg.trigrid_depth, cfg.trigrid_res);
  return occl::occlusion_of(visible);
}

// Fresh stack of identical mapped rows: [1,d_w] broadcast to [l,d_w].
Tensor repeat_rows(const Tensor& w_row, i64 l) {
  return ops::broadcast_to(w_row, {l, w_row.dim(1)});
}

Tensor leaf_copy(const Tensor& t) {
  Tensor c = t.copy_data();
  c.set_requires_grad(true);
  return c;
}

cam::CameraPose random_orbit_pose(Rng& rng) {
  double yaw = rng.uniform(-M_PI, M_PI);
  double pitch = rng.uniform(-0.25, 0.25);
  return cam::pose_from_orbit(yaw, pitch, gen::kOrbitRadius);
}

}  // namespace

TrainContext TrainContext::make(const io::RunConfig& cfg) {
  cfg.validate();
  TrainContext ctx;
  ctx.cfg = cfg;
  ctx.rc.resolution = cfg.resolution;
  ctx.rc.n_samples = cfg.n_samples;
  ctx.rc.near_plane = cfg.near_plane;
  ctx.rc.far_plane = cfg.far_plane;
  ctx.losses = loss::Losses::make(loss::LossWeights::from_config(cfg));
  return ctx;
}

OptimConfig optim_config(const io::RunConfig& cfg) {
  OptimConfig oc;
  oc.lr = cfg.learning_rate;
  if (cfg.optimizer == "adam") {
    oc.rectified = false;
    oc.lookahead = false;
  } else if (cfg.optimizer != "ranger") {
    throw std::invalid_argument("unknown optimizer: " + cfg.optimizer);
  }
  return oc;
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("non-finite " + what +
                             "; aborting before the model is poisoned");
  }
}

// ---------------------------------------------------------------------------
// generator pretraining

PretrainMetrics pretrain_generator(gen::Generator& g, render::Decoder& dec,
                                   const TrainContext& ctx,
                                   io::JsonlWriter* log) {
  const io::RunConfig& cfg = ctx.cfg;
  Rng rng = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), "pretrain-gen");

  disc::Discriminator d = disc::Discriminator::for_images(cfg, rng);

  std::vector<Tensor> g_params;
  {
    nn::NamedTensors named;
    g.trainable(named, "g.");
    dec.params(named, "dec.");
    for (auto& [name, t] : named.items) {
      (void)name;
      g_params.push_back(t);
    }
  }
  std::vector<Tensor> d_params;
  {
    nn::NamedTensors named;
    d.trainable(named, "d.");
    for (auto& [name, t] : named.items) {
      (void)name;
      d_params.push_back(t);
    }
  }
  Optimizer opt_g(g_params, optim_config(cfg));
  Optimizer opt_d(d_params, optim_config(cfg));

  const i64 n = cfg.batch_size;
  const double kWAvgBeta = 0.99;
  std::uint64_t scene_counter = 0;
  cam::CameraIntrinsics intr;
  PretrainMetrics last;

  for (i64 step = 0; step < cfg.pretrain_steps; ++step) {
    Clock::time_point t0 = Clock::now();
    bool want_r1 = (step % cfg.r1_interval) == 0;

    // one batch of scene/pose pairs, shared by both halves of the step
    std::vector<render::DensityField> scenes;
    std::vector<cam::CameraPose> poses;
    std::vector<std::array<double, 25>> records;
    for (i64 i = 0; i < n; ++i) {
      scenes.push_back(data::blob_head_field(
          static_cast<std::uint64_t>(cfg.seed) * 1000003u + scene_counter++));
      poses.push_back(data::sample_front_biased_pose(rng));
      records.push_back(cam::pose_record(poses.back(), intr));
    }

    // ---- discriminator half
    opt_d.zero_grad();
    std::vector<Tensor> reals, fakes;
    {
      NoGradGuard ng;
      for (i64 i = 0; i < n; ++i) {
        Tensor real =
            render::render_field(scenes[size_t(i)], poses[size_t(i)], intr,
                                 ctx.rc)
                .image;
        reals.push_back(ops::reshape(real, {1, 3, ctx.rc.resolution,
                                            ctx.rc.resolution}));
        Tensor z = Tensor::randn({1, cfg.d_z}, rng);
        Tensor cond = cam::pose_record_tensor({records[size_t(i)]});
        Tensor w = g.map_latent(z, cond, 1.0);
        Tensor t = g.synthesize(repeat_rows(w, cfg.n_layers));
        Tensor fake =
            render::render(t, dec, poses[size_t(i)], intr, ctx.rc).image;
        fakes.push_back(ops::reshape(fake, {1, 3, ctx.rc.resolution,
                                            ctx.rc.resolution}));
      }
    }
    Tensor real_b = ops::cat(reals, 0);
    Tensor fake_b = ops::cat(fakes, 0);
    Tensor d_obj = ops::scale(
        loss::adv_disc_loss(d.score(real_b, true), d.score(fake_b, true)),
        cfg.lambda_disc);
    if (want_r1) {
      d_obj = ops::add(d_obj, loss::r1_penalty(d, leaf_copy(real_b),
                                               cfg.r1_weight));
    }
    last.disc_loss = d_obj.data()[0];
    require_finite(last.disc_loss, "pretrain discriminator loss");
    backward(d_obj);
    opt_d.step();

    // ---- generator half: fresh latents, same scenes' poses
    opt_g.zero_grad();
    Tensor g_obj;
    double opaque = 0.0;
    for (i64 i = 0; i < n; ++i) {
      Tensor z = Tensor::randn({1, cfg.d_z}, rng);
      Tensor cond = cam::pose_record_tensor({records[size_t(i)]});
      Tensor w = g.map_latent(z, cond, 1.0);
      g.update_w_avg(w, kWAvgBeta);
      Tensor t = g.synthesize(repeat_rows(w, cfg.n_layers));
      render::RenderOutput out =
          render::render(t, dec, poses[size_t(i)], intr, ctx.rc);
      Tensor img = ops::reshape(
          out.image, {1, 3, ctx.rc.resolution, ctx.rc.resolution});
      Tensor term = loss::adv_gen_loss(d.score(img, false));
      g_obj = (i == 0) ? term : ops::add(g_obj, term);

      const double* op = out.opacity.data();
      i64 hits = 0;
      for (i64 p = 0; p < out.opacity.numel(); ++p) {
        if (op[p] > 0.5) ++hits;
      }
      opaque += double(hits) / double(out.opacity.numel());
    }
    g_obj = ops::scale(g_obj, 1.0 / double(n));
    last.gen_loss = g_obj.data()[0];
    last.opaque_fraction = opaque / double(n);
    require_finite(last.gen_loss, "pretrain generator loss");
    backward(g_obj);
    opt_g.step();

    if (log) {
      nlohmann::ordered_json rec;
      rec["step"] = step;
      rec["d_loss"] = last.disc_loss;
      rec["g_loss"] = last.gen_loss;
      rec["opaque_fraction"] = last.opaque_fraction;
      rec["r1_applied"] = want_r1;
      rec["wall_ms"] = ms_since(t0);
      log->write(rec);
    }
  }
  return last;
}

// ---------------------------------------------------------------------------
// encoder 1

E1StepMetrics train_step_e1(enc::Encoder& e1, Optimizer& opt,
                            const std::vector<data::ToySample>& batch,
                            const gen::Generator& g,
                            const render::Decoder& dec,
                            const TrainContext& ctx) {
  if (batch.empty()) throw std::invalid_argument("train_step_e1: empty batch");
  opt.zero_grad();
  const i64 n = static_cast<i64>(batch.size());
  Tensor total;
  E1StepMetrics m;
  for (i64 i = 0; i < n; ++i) {
    const data::ToySample& s = batch[size_t(i)];
    enc::EncoderForward fwd =
        e1.forward(s.image, s.pose, s.intr, g, dec, ctx.rc);
    loss::LossBreakdown lb =
        ctx.losses.loss_e1(fwd.final_render.image, s.image);
    total = (i == 0) ? lb.total : ops::add(total, lb.total);
    m.perceptual += lb.perceptual;
    m.l2 += lb.l2;
    m.identity += lb.identity;
  }
  total = ops::scale(total, 1.0 / double(n));
  m.total = total.data()[0];
  m.perceptual /= double(n);
  m.l2 /= double(n);
  m.identity /= double(n);
  require_finite(m.total, "encoder reconstruction loss");
  backward(total);
  opt.step();
  return m;
}

void train_e1(enc::Encoder& e1, Optimizer& opt,
              const std::vector<data::ToySample>& dataset,
              const gen::Generator& g, const render::Decoder& dec,
              const TrainContext& ctx, i64 start_step, i64 n_steps,
              io::JsonlWriter* log) {
  Rng brng = Rng::seeded(static_cast<std::uint64_t>(ctx.cfg.seed), "e1-batch");
  // deterministic resume: replay the batch stream up to start_step
  for (i64 s = 0; s < start_step; ++s) {
    (void)data::assemble_batch(dataset, ctx.cfg.batch_size, brng);
  }
  for (i64 s = start_step; s < start_step + n_steps; ++s) {
    Clock::time_point t0 = Clock::now();
    std::vector<data::ToySample> batch =
        data::assemble_batch(dataset, ctx.cfg.batch_size, brng);
    E1StepMetrics m = train_step_e1(e1, opt, batch, g, dec, ctx);
    if (log) {
      nlohmann::ordered_json rec;
      rec["step"] = s;
      rec["total"] = m.total;
      rec["perceptual"] = m.perceptual;
      rec["l2"] = m.l2;
      rec["identity"] = m.identity;
      rec["wall_ms"] = ms_since(t0);
      log->write(rec);
    }
  }
}

// ---------------------------------------------------------------------------
// encoder 2 + discriminator

E2StepMetrics train_step_e2_d(enc::Encoder& e2, disc::Discriminator* d,
                              Optimizer& opt_e, Optimizer* opt_d,
                              const std::vector<data::ToySample>& batch,
                              i64 step, Rng& zrng, const gen::Generator& g,
                              const render::Decoder& dec,
                              const TrainContext& ctx) {
  const io::RunConfig& cfg = ctx.cfg;
  E2StepMetrics m;

  if (cfg.no_disc) {
    E1StepMetrics em = train_step_e1(e2, opt_e, batch, g, dec, ctx);
    m.e_total = em.total;
    m.e_perceptual = em.perceptual;
    m.e_l2 = em.l2;
    m.e_identity = em.identity;
    return m;
  }
  if (d == nullptr || opt_d == nullptr) {
    throw std::invalid_argument(
        "train_step_e2_d: discriminator required unless no_disc is set");
  }

  const i64 n = static_cast<i64>(batch.size());
  if (n == 0) throw std::invalid_argument("train_step_e2_d: empty batch");
  const bool want_r1 = (step % cfg.r1_interval) == 0;

  // ---- discriminator update. The real side is freshly synthesized
  // tri-grids, the fake side the encoder's; each batch slot's occlusion
  // mask comes from that sample's first-pass depth and multiplies both
  // sides identically.
  opt_d->zero_grad();
  std::vector<Tensor> reals, fakes;
  {
    NoGradGuard ng;
    for (i64 i = 0; i < n; ++i) {
      const data::ToySample& s = batch[size_t(i)];
      enc::EncoderForward fwd =
          e2.forward(s.image, s.pose, s.intr, g, dec, ctx.rc);
      Tensor t_syn = g.synthesize(g.sample_z_plus(cfg.n_layers, zrng));
      if (cfg.image_domain_disc) {
        cam::CameraPose vp = random_orbit_pose(zrng);
        Tensor real = render::render(t_syn, dec, vp, s.intr, ctx.rc).image;
        Tensor fake =
            render::render(fwd.t_final, dec, vp, s.intr, ctx.rc).image;
        Shape img_shape = {1, 3, ctx.rc.resolution, ctx.rc.resolution};
        reals.push_back(ops::reshape(real, img_shape));
        fakes.push_back(ops::reshape(fake, img_shape));
      } else {
        Tensor occluded =
            cfg.no_occlusion
                ? ones_mask(cfg.trigrid_depth, cfg.trigrid_res)
                : occlusion_mask_from_depth(fwd.first_render.depth, s.pose,
                                            s.intr, cfg);
        reals.push_back(occl::apply_mask(t_syn, occluded));
        fakes.push_back(occl::apply_mask(fwd.t_final, occluded));
      }
    }
  }
  Tensor real_b = cfg.image_domain_disc ? ops::cat(reals, 0)
                                        : disc::stack_for_disc(reals);
  Tensor fake_b = cfg.image_domain_disc ? ops::cat(fakes, 0)
                                        : disc::stack_for_disc(fakes);
  Tensor d_obj = ops::scale(
      loss::adv_disc_loss(d->score(real_b, true), d->score(fake_b, true)),
      cfg.lambda_disc);
  m.d_loss = d_obj.data()[0];
  if (want_r1) {
    Tensor r1 = loss::r1_penalty(*d, leaf_copy(real_b), cfg.r1_weight);
    m.r1 = r1.data()[0];
    m.r1_applied = true;
    d_obj = ops::add(d_obj, r1);
  }
  require_finite(d_obj.data()[0], "discriminator loss");
  backward(d_obj);
  opt_d->step();

  // ---- encoder update. The adversarial score is taken on the encoder's
  // masked tri-grid with the discriminator in evaluation mode, so batch
  // statistics do not drift from encoder-only batches.
  opt_e.zero_grad();
  Tensor total;
  for (i64 i = 0; i < n; ++i) {
    const data::ToySample& s = batch[size_t(i)];
    enc::EncoderForward fwd =
        e2.forward(s.image, s.pose, s.intr, g, dec, ctx.rc);
    Tensor score;
    if (cfg.image_domain_disc) {
      cam::CameraPose vp = random_orbit_pose(zrng);
      Tensor img = render::render(fwd.t_final, dec, vp, s.intr, ctx.rc).image;
      score = d->score(
          ops::reshape(img, {1, 3, ctx.rc.resolution, ctx.rc.resolution}),
          false);
    } else {
      Tensor occluded =
          cfg.no_occlusion
              ? ones_mask(cfg.trigrid_depth, cfg.trigrid_res)
              : occlusion_mask_from_depth(fwd.first_render.depth, s.pose,
                                          s.intr, cfg);
      score = d->score(disc::stack_for_disc({occl::apply_mask(fwd.t_final,
                                                             occluded)}),
                       false);
    }
    loss::LossBreakdown lb =
        ctx.losses.loss_e2(fwd.final_render.image, s.image, score);
    total = (i == 0) ? lb.total : ops::add(total, lb.total);
    m.e_perceptual += lb.perceptual;
    m.e_l2 += lb.l2;
    m.e_identity += lb.identity;
    m.e_adv += lb.adv;
  }
  total = ops::scale(total, 1.0 / double(n));
  m.e_total = total.data()[0];
  m.e_perceptual /= double(n);
  m.e_l2 /= double(n);
  m.e_identity /= double(n);
  m.e_adv /= double(n);
  require_finite(m.e_total, "encoder adversarial-stage loss");
  backward(total);
  opt_e.step();
  return m;
}

void train_e2(enc::Encoder& e2, disc::Discriminator* d, Optimizer& opt_e,
              Optimizer* opt_d, const std::vector<data::ToySample>& dataset,
              const gen::Generator& g, const render::Decoder& dec,
              const TrainContext& ctx, i64 start_step, i64 n_steps,
              io::JsonlWriter* log) {
  Rng brng = Rng::seeded(static_cast<std::uint64_t>(ctx.cfg.seed), "e2-batch");
  Rng zrng = Rng::seeded(static_cast<std::uint64_t>(ctx.cfg.seed), "e2-synth");
  for (i64 s = 0; s < start_step; ++s) {
    (void)data::assemble_batch(dataset, ctx.cfg.batch_size, brng);
  }
  for (i64 s = start_step; s < start_step + n_steps; ++s) {
    Clock::time_point t0 = Clock::now();
    std::vector<data::ToySample> batch =
        data::assemble_batch(dataset, ctx.cfg.batch_size, brng);
    E2StepMetrics m =
        train_step_e2_d(e2, d, opt_e, opt_d, batch, s, zrng, g, dec, ctx);
    if (log) {
      nlohmann::ordered_json rec;
      rec["step"] = s;
      rec["e_total"] = m.e_total;
      rec["e_perceptual"] = m.e_perceptual;
      rec["e_l2"] = m.e_l2;
      rec["e_identity"] = m.e_identity;
      rec["e_adv"] = m.e_adv;
      rec["d_loss"] = m.d_loss;
      rec["r1"] = m.r1;
      rec["r1_applied"] = m.r1_applied;
      rec["wall_ms"] = ms_since(t0);
      log->write(rec);
    }
  }
}

}  // namespace tg::train
