// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "core/tensor.hpp"

#include <sstream>
#include <stdexcept>

#include "core/autograd.hpp"

namespace tg {

i64 shape_numel(const Shape& s) {
  i64 n = 1;
  for (i64 d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

Tensor make_tensor(Shape s) {
  auto impl = std::make_shared<TensorImpl>();
  impl->buf =
      std::make_shared<std::vector<double>>(static_cast<size_t>(shape_numel(s)));
  impl->shape = std::move(s);
  return Tensor(std::move(impl));
}

Tensor Tensor::zeros(const Shape& s) { return make_tensor(s); }

Tensor Tensor::ones(const Shape& s) { return full(s, 1.0); }

Tensor Tensor::full(const Shape& s, double v) {
  Tensor t = make_tensor(s);
  std::fill(t.impl_->buf->begin(), t.impl_->buf->end(), v);
  return t;
}

Tensor Tensor::scalar(double v) { return full({}, v); }

Tensor Tensor::from_data(const Shape& s, std::vector<double> data) {
  if (shape_numel(s) != static_cast<i64>(data.size()))
    throw std::invalid_argument("from_data: size mismatch for " +
                                shape_str(s));
  auto impl = std::make_shared<TensorImpl>();
  impl->buf = std::make_shared<std::vector<double>>(std::move(data));
  impl->shape = s;
  return Tensor(std::move(impl));
}

Tensor Tensor::randn(const Shape& s, Rng& rng, double stddev) {
  Tensor t = make_tensor(s);
  for (double& v : *t.impl_->buf) v = stddev * rng.normal();
  return t;
}

Tensor Tensor::uniform(const Shape& s, Rng& rng, double lo, double hi) {
  Tensor t = make_tensor(s);
  for (double& v : *t.impl_->buf) v = rng.uniform(lo, hi);
  return t;
}

i64 Tensor::numel() const { return static_cast<i64>(impl_->buf->size()); }

double Tensor::item() const {
  if (numel() != 1)
    throw std::logic_error("item() on tensor of shape " + shape_str(shape()));
  return (*impl_->buf)[0];
}

Tensor& Tensor::set_requires_grad(bool v) {
  if (v && impl_->grad_fn)
    throw std::logic_error("requires_grad can only be set on leaf tensors");
  impl_->requires_grad = v;
  return *this;
}

Tensor Tensor::grad() const {
  return impl_->grad ? Tensor(impl_->grad) : Tensor();
}

void Tensor::zero_grad() { impl_->grad.reset(); }

void Tensor::accumulate_grad(const Tensor& g) {
  if (!impl_->grad) {
    impl_->grad = g.copy_data().impl();
    return;
  }
  auto& dst = *impl_->grad->buf;
  const auto& src = *g.impl()->buf;
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->buf = impl_->buf;
  impl->shape = impl_->shape;
  return Tensor(std::move(impl));
}

Tensor Tensor::copy_data() const {
  auto impl = std::make_shared<TensorImpl>();
  impl->buf = std::make_shared<std::vector<double>>(*impl_->buf);
  impl->shape = impl_->shape;
  return Tensor(std::move(impl));
}

void Tensor::assign_data(const Tensor& src) {
  if (src.impl()->shape != impl_->shape)
    throw std::invalid_argument("assign_data: shape mismatch " +
                                shape_str(impl_->shape) + " vs " +
                                shape_str(src.shape()));
  *impl_->buf = *src.impl()->buf;
}

}  // namespace tg
