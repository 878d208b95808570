// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "data/dataset.hpp"
#include "eval/frechet.hpp"
#include "generator/generator.hpp"
#include "losses/losses.hpp"
#include "render/renderer.hpp"

namespace tg::eval {

// Mean metrics over a record set. identity lives in [-1, 1]; the others
// are nonnegative.
struct MetricsReport {
  i64 n = 0;
  double l2 = 0.0;
  double perceptual = 0.0;
  double identity = 0.0;
};

// Image-level reconstruction: maps a dataset record to the pipeline's
// same-view (or novel-view) render of it. Keeping the signature at the
// image level lets the identity pipeline (return the input) serve as the
// degenerate oracle.
using ReconstructFn = std::function<Tensor(const data::ToySample&)>;

// Tri-grid-level inversion, needed wherever novel views of the inverted
// scene are rendered.
using InvertFn = std::function<Tensor(const data::ToySample&)>;

// Same-view fidelity: mean L2 / perceptual / identity of reconstruct(s)
// against s.image. Rejects an empty record set.
MetricsReport eval_same_view(const ReconstructFn& reconstruct,
                             const std::vector<data::ToySample>& records,
                             const loss::Losses& L);

// Stacks one embedding row per image: [n, 64].
Tensor embed_set(const loss::IdentityEmbedder& e,
                 const std::vector<Tensor>& images);

// Distributional realism over the full yaw range: reference features come
// from renders of freshly synthesized latents at n_views uniform yaws
// (pitch 0), test features from renders of the inverted records on the
// same yaw grid. Returns the squared Frechet distance.
double eval_360_fid(const InvertFn& invert,
                    const std::vector<data::ToySample>& records,
                    const gen::Generator& g, const render::Decoder& dec,
                    const render::RenderConfig& rc, const loss::Losses& L,
                    i64 n_ref, i64 n_views, Rng& rng);

// One front image paired with a ground-truth novel view of the same scene.
struct MultiviewPair {
  data::ToySample front;
  Tensor target_image;  // [3, res, res]
  cam::CameraPose target_pose;
};

struct BucketReport {
  std::string label;  // e.g. "30deg" / "60deg", bucketed by |target yaw|
  MetricsReport report;
};

// Inverts each front image, renders at the paired target pose, and scores
// perceptual and identity against the target, bucketed by |yaw|.
std::vector<BucketReport> eval_multiview(
    const InvertFn& invert, const std::vector<MultiviewPair>& pairs,
    const render::Decoder& dec, const render::RenderConfig& rc,
    const loss::Losses& L);

}  // namespace tg::eval
