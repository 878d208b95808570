// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Dense f64 tensor with reverse-mode autodiff. Storage is always contiguous
// row-major; views exist only for reshape (same element count, shared
// buffer). Gradient support is double-backward capable: every op's backward
// is itself built from recorded ops, which the gradient-penalty path relies
// on.

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace tg {

using i64 = std::int64_t;
using Shape = std::vector<i64>;

i64 shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;

struct TensorImpl {
  std::shared_ptr<std::vector<double>> buf;
  Shape shape;
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;     // set only on op outputs
  std::shared_ptr<TensorImpl> grad;  // leaf gradient, filled by backward()
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s);
  static Tensor ones(const Shape& s);
  static Tensor full(const Shape& s, double v);
  static Tensor scalar(double v);  // 0-d
  static Tensor from_data(const Shape& s, std::vector<double> data);
  static Tensor randn(const Shape& s, Rng& rng, double stddev = 1.0);
  static Tensor uniform(const Shape& s, Rng& rng, double lo, double hi);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  i64 dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  i64 numel() const;

  double* data() { return impl_->buf->data(); }
  const double* data() const { return impl_->buf->data(); }
  double item() const;  // numel()==1 only

  Tensor& set_requires_grad(bool v);
  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  bool is_leaf() const { return impl_ && !impl_->grad_fn; }
  // true if gradients flow through this tensor
  bool tracked() const {
    return impl_ && (impl_->requires_grad || impl_->grad_fn != nullptr);
  }

  Tensor grad() const;  // undefined Tensor if none accumulated
  void zero_grad();
  void accumulate_grad(const Tensor& g);

  // same buffer, detached from the graph
  Tensor detach() const;
  // deep copy of the data, no graph
  Tensor copy_data() const;
  // overwrite this tensor's buffer with src's values (no recording)
  void assign_data(const Tensor& src);

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Construct an op output sharing no buffer. Helper for ops.cpp.
Tensor make_tensor(Shape s);

}  // namespace tg
