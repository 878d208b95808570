// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "eval/eval.hpp"

#include <cmath>
#include <stdexcept>

#include "core/autograd.hpp"
#include "core/ops.hpp"

namespace tg::eval {

namespace {

double yaw_of(const cam::CameraPose& pose) {
  // orbit camera position: r * (sin yaw * cos pitch, sin pitch, cos yaw *
  // cos pitch); yaw survives as atan2 of the x and z coordinates
  return std::atan2(pose.translation[0], pose.translation[2]);
}

}  // namespace

MetricsReport eval_same_view(const ReconstructFn& reconstruct,
                             const std::vector<data::ToySample>& records,
                             const loss::Losses& L) {
  if (records.empty()) {
    throw std::invalid_argument("eval_same_view: empty record set");
  }
  NoGradGuard ng;
  MetricsReport r;
  for (const data::ToySample& s : records) {
    Tensor recon = reconstruct(s);
    r.l2 += ops::mean(ops::square(ops::sub(recon, s.image))).data()[0];
    r.perceptual += L.perc.distance(recon, s.image).data()[0];
    r.identity += L.ident.similarity(recon, s.image).data()[0];
    ++r.n;
  }
  r.l2 /= double(r.n);
  r.perceptual /= double(r.n);
  r.identity /= double(r.n);
  return r;
}

Tensor embed_set(const loss::IdentityEmbedder& e,
                 const std::vector<Tensor>& images) {
  if (images.empty()) throw std::invalid_argument("embed_set: no images");
  NoGradGuard ng;
  std::vector<Tensor> rows;
  rows.reserve(images.size());
  for (const Tensor& img : images) {
    Tensor emb = e.embed(img);
    rows.push_back(ops::reshape(emb, {1, emb.dim(0)}));
  }
  return ops::cat(rows, 0);
}

double eval_360_fid(const InvertFn& invert,
                    const std::vector<data::ToySample>& records,
                    const gen::Generator& g, const render::Decoder& dec,
                    const render::RenderConfig& rc, const loss::Losses& L,
                    i64 n_ref, i64 n_views, Rng& rng) {
  if (records.empty()) {
    throw std::invalid_argument("eval_360_fid: empty record set");
  }
  if (n_ref < 1 || n_views < 1) {
    throw std::invalid_argument("eval_360_fid: n_ref and n_views must be >= 1");
  }
  NoGradGuard ng;
  cam::CameraIntrinsics intr;

  std::vector<cam::CameraPose> ring;
  for (i64 k = 0; k < n_views; ++k) {
    double yaw = 2.0 * M_PI * double(k) / double(n_views);
    ring.push_back(cam::pose_from_orbit(yaw, 0.0, gen::kOrbitRadius));
  }

  std::vector<Tensor> ref_images;
  for (i64 i = 0; i < n_ref; ++i) {
    Tensor t = g.synthesize(g.sample_z_plus(g.n_layers, rng));
    for (const cam::CameraPose& p : ring) {
      ref_images.push_back(render::render(t, dec, p, intr, rc).image);
    }
  }
  std::vector<Tensor> test_images;
  for (const data::ToySample& s : records) {
    Tensor t = invert(s);
    for (const cam::CameraPose& p : ring) {
      test_images.push_back(render::render(t, dec, p, intr, rc).image);
    }
  }
  return frechet_distance(embed_set(L.ident, ref_images),
                          embed_set(L.ident, test_images));
}

std::vector<BucketReport> eval_multiview(
    const InvertFn& invert, const std::vector<MultiviewPair>& pairs,
    const render::Decoder& dec, const render::RenderConfig& rc,
    const loss::Losses& L) {
  if (pairs.empty()) {
    throw std::invalid_argument("eval_multiview: no pairs");
  }
  NoGradGuard ng;
  cam::CameraIntrinsics intr;
  BucketReport near{"30deg", {}};
  BucketReport far{"60deg", {}};
  for (const MultiviewPair& p : pairs) {
    Tensor t = invert(p.front);
    Tensor novel = render::render(t, dec, p.target_pose, intr, rc).image;
    double deg = std::abs(yaw_of(p.target_pose)) * 180.0 / M_PI;
    BucketReport& b = (deg <= 45.0) ? near : far;
    b.report.perceptual += L.perc.distance(novel, p.target_image).data()[0];
    b.report.identity += L.ident.similarity(novel, p.target_image).data()[0];
    b.report.l2 +=
        ops::mean(ops::square(ops::sub(novel, p.target_image))).data()[0];
    ++b.report.n;
  }
  for (BucketReport* b : {&near, &far}) {
    if (b->report.n > 0) {
      b->report.l2 /= double(b->report.n);
      b->report.perceptual /= double(b->report.n);
      b->report.identity /= double(b->report.n);
    }
  }
  return {near, far};
}

}  // namespace tg::eval
