// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable op surface. Everything here records a Node when gradients
// are enabled and an input is tracked. Backward implementations are written
// in terms of these same ops, so every op is differentiable to any order;
// the gradient penalty (grad of a grad) depends on that closure property.
//
// Convolutions come as a triad (conv2d, conv2d_grad_input,
// conv2d_grad_weight) that is closed under differentiation. All convs are
// stride 1; spatial downsampling is explicit pooling.

#pragma once

#include <vector>

#include "core/tensor.hpp"

namespace tg::ops {

// broadcasting binary arithmetic (numpy alignment rules)
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& x, double s);
Tensor scale(const Tensor& x, double s);
Tensor neg(const Tensor& x);

// unary elementwise
Tensor exp_(const Tensor& x);
Tensor log_(const Tensor& x);
Tensor sqrt_(const Tensor& x);
Tensor square(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope);
Tensor clamp_min(const Tensor& x, double c);

// reductions
Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, const std::vector<int>& dims, bool keepdims);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, const std::vector<int>& dims, bool keepdims);

// exclusive prefix / suffix sums along the last dimension (adjoint pair)
Tensor cumsum_excl(const Tensor& x);
Tensor sumrev_excl(const Tensor& x);

// shape
Tensor reshape(const Tensor& x, const Shape& s);  // shares the buffer
Tensor broadcast_to(const Tensor& x, const Shape& s);
Tensor reduce_to(const Tensor& x, const Shape& s);  // sum down to s
Tensor permute(const Tensor& x, const std::vector<int>& dims);
Tensor transpose2d(const Tensor& x);
Tensor slice(const Tensor& x, int dim, i64 start, i64 len);
Tensor cat(const std::vector<Tensor>& xs, int dim);

// linear algebra / nn building blocks
Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor conv2d(const Tensor& x, const Tensor& w, int pad);
Tensor conv2d_grad_input(const Tensor& gy, const Tensor& w, int pad);
Tensor conv2d_grad_weight(const Tensor& x, const Tensor& gy, int pad);
Tensor avg_pool2(const Tensor& x);
Tensor upsample2_nearest(const Tensor& x);

// tri-grid sampling. planes [3,d,r,r,c] channel-last, pts [n,3] constant
// (gradients flow to the planes, never to the points).
Tensor trigrid_gather(const Tensor& planes, const Tensor& pts);
Tensor trigrid_scatter(const Tensor& gfeats, const Tensor& pts, i64 d, i64 r);
// 1 where the point lies in [-1,1]^3, else 0; plain data, never recorded
Tensor trigrid_inside(const Tensor& pts);

}  // namespace tg::ops

namespace tg {

inline Tensor operator+(const Tensor& a, const Tensor& b) {
  return ops::add(a, b);
}
inline Tensor operator-(const Tensor& a, const Tensor& b) {
  return ops::sub(a, b);
}
inline Tensor operator*(const Tensor& a, const Tensor& b) {
  return ops::mul(a, b);
}
inline Tensor operator/(const Tensor& a, const Tensor& b) {
  return ops::div(a, b);
}
inline Tensor operator*(const Tensor& a, double s) { return ops::scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return ops::scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) {
  return ops::add_scalar(a, s);
}
inline Tensor operator-(const Tensor& a, double s) {
  return ops::add_scalar(a, -s);
}
inline Tensor operator-(double s, const Tensor& a) {
  return ops::add_scalar(ops::neg(a), s);
}
inline Tensor operator-(const Tensor& a) { return ops::neg(a); }

}  // namespace tg
