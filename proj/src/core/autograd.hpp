// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "core/tensor.hpp"

namespace tg {

// One recorded operation. Nodes hold their inputs strongly (upstream only,
// so no reference cycles) and their output weakly; the output impl is kept
// alive by whoever consumes it, which is exactly who can trigger backward.
struct Node {
  std::vector<Tensor> inputs;
  std::weak_ptr<TensorImpl> out;

  virtual ~Node() = default;
  virtual const char* name() const = 0;
  // Gradients w.r.t. each input given the output gradient. Entries for
  // non-differentiable inputs may be undefined Tensors. Implementations
  // build their result from recorded ops so higher derivatives work.
  virtual std::vector<Tensor> backward(const Tensor& gy) = 0;

  Tensor output() const;
};

bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  void operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

// Accumulate d(root)/d(leaf) into .grad of every reachable leaf that has
// requires_grad. root must be a single-element tensor. Runs with recording
// off; the stored grads carry no graph.
void backward(const Tensor& root);

// d(root)/d(wrt[i]) as fresh tensors, .grad untouched. With create_graph the
// returned tensors are themselves differentiable. Unreachable entries come
// back as zeros of the right shape.
std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt,
                         bool create_graph);

// Registers `node` as producer of `out` if recording is on and any input is
// tracked. Called by every op in ops.cpp after computing the output value.
void record(const std::shared_ptr<Node>& node, Tensor& out);

}  // namespace tg
