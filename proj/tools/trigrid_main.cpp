// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface of the pipeline. One process runs one verb; every
// verb archives the effective config next to its outputs and writes a
// manifest of artifact hashes, so any result directory is reproducible
// from its own contents plus the named checkpoints.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "core/autograd.hpp"
#include "core/optim.hpp"
#include "core/rng.hpp"
#include "data/dataset.hpp"
#include "disc/discriminator.hpp"
#include "dual/dual.hpp"
#include "encoder/encoder.hpp"
#include "eval/eval.hpp"
#include "generator/generator.hpp"
#include "io/checkpoint.hpp"
#include "io/config.hpp"
#include "io/jsonl.hpp"
#include "io/obj.hpp"
#include "io/png.hpp"
#include "io/sha256.hpp"
#include "losses/losses.hpp"
#include "render/renderer.hpp"
#include "train/train.hpp"

namespace fs = std::filesystem;
using namespace tg;

namespace {

// ---------------------------------------------------------------------------
// shared plumbing

struct CommonArgs {
  std::string config;
  std::int64_t seed = -1;  // <0 keeps the config value
};

io::RunConfig effective_config(const CommonArgs& c) {
  io::RunConfig cfg =
      c.config.empty() ? io::RunConfig{} : io::load_config(c.config);
  if (c.seed >= 0) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

render::RenderConfig rc_of(const io::RunConfig& cfg) {
  render::RenderConfig rc;
  rc.resolution = cfg.resolution;
  rc.n_samples = cfg.n_samples;
  rc.near_plane = cfg.near_plane;
  rc.far_plane = cfg.far_plane;
  return rc;
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw std::runtime_error(what + " not found: " + path);
  }
}

// every output directory carries the config that produced it
void archive_config(const fs::path& out, const io::RunConfig& cfg) {
  fs::create_directories(out);
  io::save_config((out / "config.cfg").string(), cfg);
}

// manifest.json lists every artifact in the directory with size and hash
void write_manifest(const fs::path& out) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    auto rel = fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  nlohmann::ordered_json m;
  m["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& rel : files) {
    nlohmann::ordered_json e;
    e["path"] = rel;
    e["bytes"] = static_cast<std::int64_t>(fs::file_size(out / rel));
    e["sha256"] = io::sha256_file((out / rel).string());
    m["artifacts"].push_back(e);
  }
  std::ofstream f(out / "manifest.json");
  f << m.dump(2) << "\n";
  if (!f) throw std::runtime_error("cannot write manifest.json");
}

// fresh models; weights are overwritten by checkpoints where applicable
gen::Generator fresh_generator(const io::RunConfig& cfg) {
  Rng r = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), "init-generator");
  return gen::Generator::make(cfg, r);
}
render::Decoder fresh_decoder(const io::RunConfig& cfg) {
  Rng r = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), "init-decoder");
  return render::Decoder::make(cfg.trigrid_channels, r);
}
enc::Encoder fresh_encoder(const io::RunConfig& cfg, const char* stream) {
  Rng r = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), stream);
  return enc::Encoder::make(cfg, r);
}

void check_fingerprint(const io::Checkpoint& ck, const io::RunConfig& cfg,
                       const std::string& path) {
  if (ck.fingerprint != cfg.fingerprint()) {
    throw std::runtime_error("checkpoint " + path +
                             " was written for a different architecture; "
                             "check the config");
  }
}

void load_generator(const std::string& path, const io::RunConfig& cfg,
                    gen::Generator& g, render::Decoder& dec) {
  require_file(path, "generator checkpoint");
  auto ck = io::load_checkpoint(path);
  check_fingerprint(ck, cfg, path);
  nn::NamedTensors st;
  g.state(st, "g.");
  dec.params(st, "dec.");
  io::restore_into(st, ck);
}

void load_encoder(const std::string& path, const io::RunConfig& cfg,
                  enc::Encoder& e, const std::string& prefix) {
  require_file(path, "encoder checkpoint");
  auto ck = io::load_checkpoint(path);
  check_fingerprint(ck, cfg, path);
  nn::NamedTensors st;
  e.state(st, prefix);
  io::restore_into(st, ck);
}

// number of completed steps, stored inside training checkpoints for resume
i64 saved_steps(const io::Checkpoint& ck) {
  const Tensor* t = ck.arrays.find("meta.steps");
  if (t == nullptr || t->numel() != 1) {
    throw std::runtime_error("checkpoint lacks a step counter; not a "
                             "training checkpoint");
  }
  return static_cast<i64>(t->data()[0]);
}

Tensor steps_tensor(i64 steps) {
  return Tensor::from_data({1}, {double(steps)});
}

void save_png(const fs::path& path, const Tensor& image) {
  io::write_png(path.string(), io::tensor_to_image(image));
}

// loads the dataset and picks one record by file name ("" = first)
data::ToySample pick_sample(const std::vector<data::ToySample>& dataset,
                            const std::string& name) {
  if (dataset.empty()) throw std::runtime_error("dataset is empty");
  if (name.empty()) return dataset.front();
  for (const auto& s : dataset)
    if (s.name == name) return s;
  throw std::runtime_error("no dataset image named " + name);
}

// everything invert-family verbs need
struct Pipeline {
  io::RunConfig cfg;
  render::RenderConfig rc;
  gen::Generator g;
  render::Decoder dec;
  enc::Encoder e1, e2;
};

Pipeline load_pipeline(const CommonArgs& common, const std::string& gen_ckpt,
                       const std::string& e1_ckpt,
                       const std::string& e2_ckpt) {
  io::RunConfig cfg = effective_config(common);
  Pipeline p{cfg,
             rc_of(cfg),
             fresh_generator(cfg),
             fresh_decoder(cfg),
             fresh_encoder(cfg, "init-encoder1"),
             fresh_encoder(cfg, "init-encoder2")};
  load_generator(gen_ckpt, cfg, p.g, p.dec);
  load_encoder(e1_ckpt, cfg, p.e1, "e1.");
  load_encoder(e2_ckpt, cfg, p.e2, "e2.");
  p.g.set_frozen(true);
  p.e1.set_frozen(true);
  p.e2.set_frozen(true);
  return p;
}

// ---------------------------------------------------------------------------
// verbs

int cmd_pretrain_gen(const CommonArgs& common, const std::string& out) {
  io::RunConfig cfg = effective_config(common);
  archive_config(out, cfg);

  auto ctx = train::TrainContext::make(cfg);
  auto g = fresh_generator(cfg);
  auto dec = fresh_decoder(cfg);
  {
    io::JsonlWriter log((fs::path(out) / "pretrain.jsonl").string(), false);
    auto m = train::pretrain_generator(g, dec, ctx, &log);
    std::printf("pretrained %lld steps: d_loss %.4f g_loss %.4f "
                "opaque_fraction %.3f\n",
                static_cast<long long>(cfg.pretrain_steps), m.disc_loss,
                m.gen_loss, m.opaque_fraction);
  }

  nn::NamedTensors st;
  g.state(st, "g.");
  dec.params(st, "dec.");
  io::save_checkpoint((fs::path(out) / "gen.ckpt").string(), st,
                      cfg.fingerprint());
  write_manifest(out);
  return 0;
}

int cmd_gen_data(const CommonArgs& common, const std::string& gen_ckpt,
                 const std::string& out) {
  io::RunConfig cfg = effective_config(common);
  auto g = fresh_generator(cfg);
  auto dec = fresh_decoder(cfg);
  load_generator(gen_ckpt, cfg, g, dec);

  archive_config(out, cfg);
  data::generate_toy_dataset(g, dec, cfg, out);
  write_manifest(out);
  std::printf("wrote %lld images to %s\n",
              static_cast<long long>(cfg.dataset_n), out.c_str());
  return 0;
}

int cmd_train_e1(const CommonArgs& common, const std::string& gen_ckpt,
                 const std::string& data_dir, const std::string& out,
                 bool resume) {
  io::RunConfig cfg = effective_config(common);
  archive_config(out, cfg);

  auto ctx = train::TrainContext::make(cfg);
  auto g = fresh_generator(cfg);
  auto dec = fresh_decoder(cfg);
  load_generator(gen_ckpt, cfg, g, dec);
  g.set_frozen(true);
  auto dataset = data::load_toy_dataset(data_dir);

  auto e1 = fresh_encoder(cfg, "init-encoder1");
  nn::NamedTensors params;
  e1.trainable(params, "e1.");
  Optimizer opt(params.tensors(), train::optim_config(cfg));

  const std::string ckpt_path = (fs::path(out) / "e1.ckpt").string();
  i64 start_step = 0;
  if (resume) {
    require_file(ckpt_path, "resume checkpoint");
    auto ck = io::load_checkpoint(ckpt_path);
    check_fingerprint(ck, cfg, ckpt_path);
    nn::NamedTensors st;
    e1.state(st, "e1.");
    io::restore_into(st, ck);
    opt.load_state(ck.arrays, "opt.");
    start_step = saved_steps(ck);
  }
  i64 remaining = cfg.total_steps - start_step;
  if (remaining <= 0) {
    std::printf("nothing to do: %lld of %lld steps already trained\n",
                static_cast<long long>(start_step),
                static_cast<long long>(cfg.total_steps));
    return 0;
  }

  {
    io::JsonlWriter log((fs::path(out) / "e1.jsonl").string(), resume);
    train::train_e1(e1, opt, dataset, g, dec, ctx, start_step, remaining,
                    &log);
  }

  nn::NamedTensors st;
  e1.state(st, "e1.");
  opt.state(st, "opt.");
  st.add("meta.steps", steps_tensor(cfg.total_steps));
  io::save_checkpoint(ckpt_path, st, cfg.fingerprint());
  write_manifest(out);
  std::printf("trained e1 steps %lld..%lld\n",
              static_cast<long long>(start_step),
              static_cast<long long>(cfg.total_steps - 1));
  return 0;
}

int cmd_train_e2(const CommonArgs& common, const std::string& gen_ckpt,
                 const std::string& e1_ckpt, const std::string& data_dir,
                 const std::string& out, bool resume, bool no_disc,
                 bool image_domain, bool no_occlusion) {
  io::RunConfig cfg = effective_config(common);
  if (no_disc) cfg.no_disc = true;
  if (image_domain) cfg.image_domain_disc = true;
  if (no_occlusion) cfg.no_occlusion = true;
  if (!cfg.no_disc && cfg.lambda_disc <= 0.0) {
    throw std::runtime_error(
        "adversarial training enabled but lambda_disc is zero; set it or "
        "pass --no-disc");
  }
  archive_config(out, cfg);

  auto ctx = train::TrainContext::make(cfg);
  auto g = fresh_generator(cfg);
  auto dec = fresh_decoder(cfg);
  load_generator(gen_ckpt, cfg, g, dec);
  g.set_frozen(true);
  auto dataset = data::load_toy_dataset(data_dir);

  auto e2 = fresh_encoder(cfg, "init-encoder2");
  nn::NamedTensors params;
  e2.trainable(params, "e2.");
  Optimizer opt_e(params.tensors(), train::optim_config(cfg));

  disc::Discriminator d;
  std::unique_ptr<Optimizer> opt_d;
  if (!cfg.no_disc) {
    Rng drng = Rng::seeded(static_cast<std::uint64_t>(cfg.seed), "init-disc");
    d = cfg.image_domain_disc ? disc::Discriminator::for_images(cfg, drng)
                              : disc::Discriminator::for_trigrid(cfg, drng);
    nn::NamedTensors dp;
    d.trainable(dp, "d.");
    opt_d =
        std::make_unique<Optimizer>(dp.tensors(), train::optim_config(cfg));
  }

  const std::string ckpt_path = (fs::path(out) / "e2.ckpt").string();
  const std::string disc_path = (fs::path(out) / "disc.ckpt").string();
  i64 start_step = 0;
  if (resume) {
    require_file(ckpt_path, "resume checkpoint");
    auto ck = io::load_checkpoint(ckpt_path);
    check_fingerprint(ck, cfg, ckpt_path);
    nn::NamedTensors st;
    e2.state(st, "e2.");
    io::restore_into(st, ck);
    opt_e.load_state(ck.arrays, "opt.");
    start_step = saved_steps(ck);
    if (!cfg.no_disc) {
      require_file(disc_path, "discriminator checkpoint");
      auto dck = io::load_checkpoint(disc_path);
      check_fingerprint(dck, cfg, disc_path);
      nn::NamedTensors ds;
      d.state(ds, "d.");
      io::restore_into(ds, dck);
      opt_d->load_state(dck.arrays, "opt_d.");
    }
  } else if (cfg.e2_init_from_e1) {
    if (e1_ckpt.empty()) {
      throw std::runtime_error(
          "config asks to initialize e2 from e1 (e2_init_from_e1) but no "
          "--e1 checkpoint was given");
    }
    require_file(e1_ckpt, "e1 checkpoint");
    auto ck = io::load_checkpoint(e1_ckpt);
    check_fingerprint(ck, cfg, e1_ckpt);
    nn::NamedTensors st;
    e2.state(st, "e1.");  // e1 checkpoints store arrays under "e1."
    io::restore_into(st, ck);
  }

  i64 remaining = cfg.total_steps - start_step;
  if (remaining <= 0) {
    std::printf("nothing to do: %lld of %lld steps already trained\n",
                static_cast<long long>(start_step),
                static_cast<long long>(cfg.total_steps));
    return 0;
  }

  {
    io::JsonlWriter log((fs::path(out) / "e2.jsonl").string(), resume);
    train::train_e2(e2, cfg.no_disc ? nullptr : &d, opt_e, opt_d.get(),
                    dataset, g, dec, ctx, start_step, remaining, &log);
  }

  nn::NamedTensors st;
  e2.state(st, "e2.");
  opt_e.state(st, "opt.");
  st.add("meta.steps", steps_tensor(cfg.total_steps));
  io::save_checkpoint(ckpt_path, st, cfg.fingerprint());
  if (!cfg.no_disc) {
    nn::NamedTensors ds;
    d.state(ds, "d.");
    opt_d->state(ds, "opt_d.");
    io::save_checkpoint(disc_path, ds, cfg.fingerprint());
  }
  write_manifest(out);
  std::printf("trained e2 steps %lld..%lld\n",
              static_cast<long long>(start_step),
              static_cast<long long>(cfg.total_steps - 1));
  return 0;
}

// shared by invert / render360 / export-mesh
dual::InversionResult run_inversion(const Pipeline& p,
                                    const data::ToySample& s) {
  return dual::invert(s.image, s.pose, s.intr, p.e1, p.e2, p.g, p.dec, p.rc,
                      p.cfg.vis_volume);
}

int cmd_invert(const Pipeline& p, const std::string& data_dir,
               const std::string& name, const std::string& out, i64 views) {
  auto dataset = data::load_toy_dataset(data_dir);
  auto s = pick_sample(dataset, name);
  archive_config(out, p.cfg);

  auto result = run_inversion(p, s);
  NoGradGuard ng;
  save_png(fs::path(out) / "input.png", s.image);
  save_png(fs::path(out) / "same_view.png",
           dual::render_novel(result, p.dec, s.pose, p.rc).image);
  auto ring = dual::render_360(result, p.dec, views, p.rc);
  for (size_t k = 0; k < ring.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03zu.png", k);
    save_png(fs::path(out) / buf, ring[k].image);
  }
  io::Mesh mesh =
      dual::export_mesh(result, p.dec, p.cfg.mesh_res,
                        dual::default_density_threshold(p.rc));
  io::write_obj((fs::path(out) / "mesh.obj").string(), mesh);
  write_manifest(out);
  std::printf("inverted %s: %lld views, mesh with %zu vertices\n",
              s.name.c_str(), static_cast<long long>(views),
              mesh.vertices.size());
  return 0;
}

int cmd_render360(const Pipeline& p, const std::string& data_dir,
                  const std::string& name, const std::string& out,
                  i64 views) {
  auto dataset = data::load_toy_dataset(data_dir);
  auto s = pick_sample(dataset, name);
  archive_config(out, p.cfg);

  auto result = run_inversion(p, s);
  NoGradGuard ng;
  auto ring = dual::render_360(result, p.dec, views, p.rc);
  for (size_t k = 0; k < ring.size(); ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03zu.png", k);
    save_png(fs::path(out) / buf, ring[k].image);
  }
  write_manifest(out);
  std::printf("rendered %lld views of %s\n", static_cast<long long>(views),
              s.name.c_str());
  return 0;
}

int cmd_export_mesh(const Pipeline& p, const std::string& data_dir,
                    const std::string& name, const std::string& out,
                    i64 mesh_res, double threshold) {
  auto dataset = data::load_toy_dataset(data_dir);
  auto s = pick_sample(dataset, name);
  archive_config(out, p.cfg);

  auto result = run_inversion(p, s);
  double iso =
      threshold > 0.0 ? threshold : dual::default_density_threshold(p.rc);
  io::Mesh mesh = dual::export_mesh(result, p.dec, mesh_res, iso);
  io::write_obj((fs::path(out) / "mesh.obj").string(), mesh);
  write_manifest(out);
  std::printf("mesh.obj: %zu vertices, %zu faces at iso %.4f\n",
              mesh.vertices.size(), mesh.faces.size(), iso);
  return 0;
}

int cmd_eval(const Pipeline& p, const std::string& data_dir,
             const std::string& out, bool oracle, i64 n_ref) {
  auto dataset = data::load_toy_dataset(data_dir);
  if (dataset.empty()) throw std::runtime_error("dataset is empty");
  archive_config(out, p.cfg);

  auto L = loss::Losses::make(loss::LossWeights::from_config(p.cfg));

  // oracle mode replaces the encoders with the generating latents; it
  // documents the degenerate best case of every metric
  eval::ReconstructFn reconstruct;
  eval::InvertFn invert_fn;
  if (oracle) {
    for (const auto& s : dataset)
      if (s.w_plus.numel() == 0)
        throw std::runtime_error("oracle eval needs stored latents");
    reconstruct = [&](const data::ToySample& s) { return s.image; };
    invert_fn = [&](const data::ToySample& s) {
      return p.g.synthesize(s.w_plus);
    };
  } else {
    reconstruct = [&](const data::ToySample& s) {
      auto result = run_inversion(p, s);
      return dual::render_novel(result, p.dec, s.pose, p.rc).image;
    };
    invert_fn = [&](const data::ToySample& s) {
      return run_inversion(p, s).stitched;
    };
  }

  NoGradGuard ng;
  auto same_view = eval::eval_same_view(reconstruct, dataset, L);

  Rng fid_rng =
      Rng::seeded(static_cast<std::uint64_t>(p.cfg.seed), "eval-fid-ref");
  if (n_ref <= 0) n_ref = static_cast<i64>(dataset.size());
  double fid = eval::eval_360_fid(invert_fn, dataset, p.g, p.dec, p.rc, L,
                                  n_ref, p.cfg.fid_views, fid_rng);

  // multi-view pairs need ground-truth novel views, available through the
  // stored latents regardless of eval mode
  std::vector<eval::MultiviewPair> pairs;
  const double target_yaws[2] = {M_PI / 6.0, -M_PI / 3.0};
  for (const auto& s : dataset) {
    if (s.w_plus.numel() == 0) continue;
    Tensor truth = p.g.synthesize(s.w_plus);
    for (double yaw : target_yaws) {
      eval::MultiviewPair pair;
      pair.front = s;
      pair.target_pose = cam::pose_from_orbit(yaw, 0.0, gen::kOrbitRadius);
      pair.target_image =
          render::render(truth, p.dec, pair.target_pose, s.intr, p.rc).image;
      pairs.push_back(std::move(pair));
    }
  }
  std::vector<eval::BucketReport> buckets;
  if (!pairs.empty())
    buckets = eval::eval_multiview(invert_fn, pairs, p.dec, p.rc, L);

  nlohmann::ordered_json report;
  report["mode"] = oracle ? "oracle" : "pipeline";
  report["same_view"] = {{"n", same_view.n},
                         {"l2", same_view.l2},
                         {"perceptual", same_view.perceptual},
                         {"identity", same_view.identity}};
  report["fid_360"] = fid;
  report["multiview"] = nlohmann::ordered_json::array();
  for (const auto& b : buckets) {
    report["multiview"].push_back({{"bucket", b.label},
                                   {"n", b.report.n},
                                   {"l2", b.report.l2},
                                   {"perceptual", b.report.perceptual},
                                   {"identity", b.report.identity}});
  }
  {
    std::ofstream f(fs::path(out) / "eval.json");
    f << report.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write eval.json");
  }

  std::printf("same-view  n=%lld  l2=%.6f  perceptual=%.6f  identity=%.4f\n",
              static_cast<long long>(same_view.n), same_view.l2,
              same_view.perceptual, same_view.identity);
  std::printf("360-fid    %.6f over %lld yaws\n", fid,
              static_cast<long long>(p.cfg.fid_views));
  for (const auto& b : buckets) {
    std::printf("multiview  %s  n=%lld  perceptual=%.6f  identity=%.4f\n",
                b.label.c_str(), static_cast<long long>(b.report.n),
                b.report.perceptual, b.report.identity);
  }
  write_manifest(out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tri-grid 3D GAN inversion pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string out, gen_ckpt, e1_ckpt, e2_ckpt, data_dir, name;
  bool resume = false, no_disc = false, image_domain = false,
       no_occlusion = false, oracle = false;
  std::int64_t views = 0, mesh_res = 0, n_ref = 0;
  double threshold = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config,
                    "run config file (defaults used when omitted)");
    sub->add_option("--seed", common.seed, "override the config seed");
  };

  auto* pre = app.add_subcommand("pretrain-gen",
                                 "adversarially pretrain the toy generator");
  add_common(pre);
  pre->add_option("--out", out, "output directory")->required();

  auto* gd = app.add_subcommand("gen-data",
                                "render a labeled dataset from the generator");
  add_common(gd);
  gd->add_option("--gen", gen_ckpt, "generator checkpoint")->required();
  gd->add_option("--out", out, "dataset directory")->required();

  auto* t1 = app.add_subcommand("train-e1", "train the first-stage encoder");
  add_common(t1);
  t1->add_option("--gen", gen_ckpt, "generator checkpoint")->required();
  t1->add_option("--data", data_dir, "dataset directory")->required();
  t1->add_option("--out", out, "output directory")->required();
  t1->add_flag("--resume", resume, "continue from the saved checkpoint");

  auto* t2 = app.add_subcommand(
      "train-e2", "train the occlusion-stage encoder and discriminator");
  add_common(t2);
  t2->add_option("--gen", gen_ckpt, "generator checkpoint")->required();
  t2->add_option("--e1", e1_ckpt, "first-stage checkpoint to initialize from");
  t2->add_option("--data", data_dir, "dataset directory")->required();
  t2->add_option("--out", out, "output directory")->required();
  t2->add_flag("--resume", resume, "continue from the saved checkpoint");
  t2->add_flag("--no-disc", no_disc, "ablation: drop the adversarial term");
  t2->add_flag("--image-domain-disc", image_domain,
               "ablation: discriminate rendered images instead of tri-grids");
  t2->add_flag("--no-occlusion", no_occlusion,
               "ablation: score unmasked tri-grids");

  auto add_pipeline_opts = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--gen", gen_ckpt, "generator checkpoint")->required();
    sub->add_option("--e1", e1_ckpt, "first-stage encoder checkpoint")
        ->required();
    sub->add_option("--e2", e2_ckpt, "occlusion encoder checkpoint")
        ->required();
    sub->add_option("--data", data_dir, "dataset directory")->required();
    sub->add_option("--out", out, "output directory")->required();
  };

  auto* inv = app.add_subcommand(
      "invert", "invert one image: renders, 360 strip and mesh");
  add_pipeline_opts(inv);
  inv->add_option("--name", name, "dataset image name (default: first)");
  inv->add_option("--views", views, "number of 360 views (default: config)");

  auto* r360 =
      app.add_subcommand("render360", "render the 360 strip of one inversion");
  add_pipeline_opts(r360);
  r360->add_option("--name", name, "dataset image name (default: first)");
  r360->add_option("--views", views, "number of views (default: config)");

  auto* mesh = app.add_subcommand("export-mesh",
                                  "extract the iso-surface of one inversion");
  add_pipeline_opts(mesh);
  mesh->add_option("--name", name, "dataset image name (default: first)");
  mesh->add_option("--mesh-res", mesh_res,
                   "lattice resolution (default: config)");
  mesh->add_option("--threshold", threshold,
                   "density iso level (default: half-transmittance)");

  auto* ev = app.add_subcommand(
      "eval", "same-view, 360-distribution and multi-view reports");
  add_pipeline_opts(ev);
  ev->add_flag("--oracle", oracle,
               "score stored generating latents instead of the encoders");
  ev->add_option("--n-ref", n_ref,
                 "reference latent count (default: dataset size)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(pre)) return cmd_pretrain_gen(common, out);
    if (app.got_subcommand(gd)) return cmd_gen_data(common, gen_ckpt, out);
    if (app.got_subcommand(t1))
      return cmd_train_e1(common, gen_ckpt, data_dir, out, resume);
    if (app.got_subcommand(t2))
      return cmd_train_e2(common, gen_ckpt, e1_ckpt, data_dir, out, resume,
                          no_disc, image_domain, no_occlusion);

    Pipeline p = load_pipeline(common, gen_ckpt, e1_ckpt, e2_ckpt);
    if (views <= 0) views = p.cfg.n_views;
    if (mesh_res <= 0) mesh_res = p.cfg.mesh_res;
    if (app.got_subcommand(inv))
      return cmd_invert(p, data_dir, name, out, views);
    if (app.got_subcommand(r360))
      return cmd_render360(p, data_dir, name, out, views);
    if (app.got_subcommand(mesh))
      return cmd_export_mesh(p, data_dir, name, out, mesh_res, threshold);
    if (app.got_subcommand(ev))
      return cmd_eval(p, data_dir, out, oracle, n_ref);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
