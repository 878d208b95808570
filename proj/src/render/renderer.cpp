// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "render/renderer.hpp"

#include <cmath>
#include <stdexcept>

#include "core/ops.hpp"

namespace tg::render {

namespace {

constexpr i64 kDecoderHidden = 32;
constexpr double kLeakySlope = 0.2;
constexpr double kOpacityFloor = 1e-8;
constexpr double kDepthCutoff = 0.01;

}  // namespace

void RenderConfig::validate() const {
  if (resolution < 1) throw std::invalid_argument("render: resolution < 1");
  if (n_samples < 2) throw std::invalid_argument("render: n_samples < 2");
  if (!(near_plane > 0.0) || !(near_plane < far_plane))
    throw std::invalid_argument("render: need 0 < near < far");
}

Decoder Decoder::make(i64 in_features, Rng& rng) {
  Decoder d;
  d.hidden = nn::Linear::make(rng, in_features, kDecoderHidden);
  d.head = nn::Linear::make(rng, kDecoderHidden, 4);
  return d;
}

std::pair<Tensor, Tensor> Decoder::decode(const Tensor& feats) const {
  const Tensor h = ops::leaky_relu(hidden.forward(feats), kLeakySlope);
  const Tensor out = head.forward(h);
  const i64 n = feats.shape()[0];
  const Tensor sigma =
      ops::reshape(ops::softplus(ops::slice(out, 1, 0, 1)), {n});
  const Tensor color = ops::sigmoid(ops::slice(out, 1, 1, 3));
  return {sigma, color};
}

void Decoder::params(nn::NamedTensors& out, const std::string& prefix) {
  hidden.params(out, prefix + ".hidden");
  head.params(out, prefix + ".head");
}

RayBatch make_ray_batch(const cam::CameraPose& pose,
                        const cam::CameraIntrinsics& intr,
                        const RenderConfig& rc) {
  rc.validate();
  const i64 res = rc.resolution;
  const i64 s = rc.n_samples;
  const double dt = (rc.far_plane - rc.near_plane) / double(s);

  RayBatch rb;
  rb.n_pixels = res * res;
  rb.n_samples = s;
  rb.points = Tensor::zeros({rb.n_pixels * s, 3});
  rb.deltas = Tensor::zeros({rb.n_pixels, 1});
  rb.ts = Tensor::zeros({1, s});

  double* ts = rb.ts.data();
  for (i64 i = 0; i < s; ++i)
    ts[i] = rc.near_plane + (double(i) + 0.5) * dt;

  double* pts = rb.points.data();
  double* deltas = rb.deltas.data();
  const cam::Vec3& o = pose.translation;
  for (i64 iv = 0; iv < res; ++iv) {
    for (i64 iu = 0; iu < res; ++iu) {
      const double u = (double(iu) + 0.5) / double(res);
      const double v = (double(iv) + 0.5) / double(res);
      // z_cam stays 1 so the ray parameter is camera depth
      const cam::Vec3 dir_cam = {(u - intr.cx) / intr.fx,
                                 (v - intr.cy) / intr.fy, 1.0};
      const cam::Vec3 d = cam::matvec(pose.rotation, dir_cam);
      const i64 pix = iv * res + iu;
      deltas[pix] = dt * cam::norm(dir_cam);
      for (i64 i = 0; i < s; ++i) {
        double* p = pts + (pix * s + i) * 3;
        p[0] = o[0] + ts[i] * d[0];
        p[1] = o[1] + ts[i] * d[1];
        p[2] = o[2] + ts[i] * d[2];
      }
    }
  }
  return rb;
}

Tensor sample_features(const Tensor& trigrid, const Tensor& points) {
  const Shape& s = trigrid.shape();
  if (s.size() != 5 || s[0] != 3 || s[3] != s[4])
    throw std::invalid_argument("sample_features: expected [3,D,C,R,R]");
  // gather kernels take channel-last planes
  const Tensor cl = ops::permute(trigrid, {0, 1, 3, 4, 2});
  return ops::trigrid_gather(cl, points);
}

RenderOutput composite(const Tensor& sigma, const Tensor& color,
                       const Tensor& ts, const Tensor& deltas,
                       const RenderConfig& rc) {
  const Shape& ss = sigma.shape();
  if (ss.size() != 2) throw std::invalid_argument("composite: sigma not 2-d");
  const i64 p = ss[0];
  const i64 s = ss[1];
  if (color.shape() != Shape{p, s, 3})
    throw std::invalid_argument("composite: color shape mismatch");
  const i64 res = static_cast<i64>(std::llround(std::sqrt(double(p))));
  if (res * res != p)
    throw std::invalid_argument("composite: pixel count not square");

  // optical thickness per segment, then transmittance via exclusive cumsum
  const Tensor thick = sigma * deltas;                  // [P,S]
  const Tensor trans = ops::exp_(ops::neg(ops::cumsum_excl(thick)));
  const Tensor alpha =
      ops::add_scalar(ops::neg(ops::exp_(ops::neg(thick))), 1.0);
  const Tensor weights = trans * alpha;                 // [P,S]

  const Tensor opacity = ops::sum(weights, {1}, false);  // [P]
  const Tensor t_final =
      ops::exp_(ops::neg(ops::sum(thick, {1}, false)));  // [P]

  const Tensor w3 = ops::reshape(weights, {p, s, 1});
  Tensor img = ops::sum(w3 * color, {1}, false);  // [P,3]
  const Tensor residual = ops::add_scalar(ops::neg(opacity), 1.0);
  img = img + ops::reshape(residual, {p, 1}) * rc.background;

  const Tensor tsum = ops::sum(weights * ts, {1}, false);  // [P]
  const Tensor depth_raw = tsum / ops::clamp_min(opacity, kOpacityFloor);
  // repo convention: depth reads "far" wherever the ray hit almost nothing
  Tensor solid = Tensor::zeros({p});
  {
    const double* o = opacity.data();
    double* m = solid.data();
    for (i64 i = 0; i < p; ++i) m[i] = o[i] < kDepthCutoff ? 0.0 : 1.0;
  }
  const Tensor depth =
      solid * depth_raw + ops::scale(ops::add_scalar(ops::neg(solid), 1.0),
                                     rc.far_plane);

  RenderOutput out;
  out.image = ops::permute(ops::reshape(img, {res, res, 3}), {2, 0, 1});
  out.depth = ops::reshape(depth, {res, res});
  out.opacity = ops::reshape(opacity, {res, res});
  out.transmittance = ops::reshape(t_final, {res, res});
  return out;
}

RenderOutput render(const Tensor& trigrid, const Decoder& decoder,
                    const cam::CameraPose& pose,
                    const cam::CameraIntrinsics& intr,
                    const RenderConfig& rc) {
  const RayBatch rb = make_ray_batch(pose, intr, rc);
  const Tensor feats = sample_features(trigrid, rb.points);
  auto [sigma, color] = decoder.decode(feats);
  // decoded density is positive everywhere; zero it outside the scene cube
  const Tensor inside = ops::trigrid_inside(rb.points);
  sigma = ops::reshape(sigma * inside, {rb.n_pixels, rb.n_samples});
  color = ops::reshape(color, {rb.n_pixels, rb.n_samples, 3});
  return composite(sigma, color, rb.ts, rb.deltas, rc);
}

RenderOutput render_field(const DensityField& field,
                          const cam::CameraPose& pose,
                          const cam::CameraIntrinsics& intr,
                          const RenderConfig& rc) {
  const RayBatch rb = make_ray_batch(pose, intr, rc);
  const i64 n = rb.n_pixels * rb.n_samples;
  Tensor sigma = Tensor::zeros({rb.n_pixels, rb.n_samples});
  Tensor color = Tensor::zeros({rb.n_pixels, rb.n_samples, 3});
  const double* p = rb.points.data();
  double* sig = sigma.data();
  double* col = color.data();
  for (i64 i = 0; i < n; ++i) {
    const cam::Vec3 x = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    const bool inside = std::fabs(x[0]) <= 1.0 && std::fabs(x[1]) <= 1.0 &&
                        std::fabs(x[2]) <= 1.0;
    const FieldSample fs = inside ? field(x) : FieldSample{};
    sig[i] = fs.sigma;
    col[3 * i] = fs.rgb[0];
    col[3 * i + 1] = fs.rgb[1];
    col[3 * i + 2] = fs.rgb[2];
  }
  return composite(sigma, color, rb.ts, rb.deltas, rc);
}

}  // namespace tg::render
