// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include "core/autograd.hpp"

#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "core/ops.hpp"

namespace tg {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Node::output() const {
  auto impl = out.lock();
  if (!impl)
    throw std::logic_error(std::string("autograd: output of ") + name() +
                           " expired before backward");
  return Tensor(impl);
}

void record(const std::shared_ptr<Node>& node, Tensor& out) {
  if (!g_grad_enabled) return;
  bool any = false;
  for (const Tensor& t : node->inputs)
    if (t.defined() && t.tracked()) {
      any = true;
      break;
    }
  if (!any) return;
  node->out = out.impl();
  out.impl()->grad_fn = node;
}

namespace {

// Reverse post-order over the recorded DAG: every node is processed before
// the producers of its inputs.
void topo_visit(Node* n, std::unordered_set<Node*>& seen,
                std::vector<Node*>& order) {
  // iterative DFS; graphs can be thousands of nodes deep after unrolling
  struct Frame {
    Node* node;
    size_t next_input;
  };
  std::vector<Frame> stack{{n, 0}};
  seen.insert(n);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_input < f.node->inputs.size()) {
      const Tensor& in = f.node->inputs[f.next_input++];
      Node* child = in.defined() ? in.impl()->grad_fn.get() : nullptr;
      if (child && !seen.count(child)) {
        seen.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
}

struct Flow {
  std::unordered_map<TensorImpl*, Tensor> grads;

  void add(const Tensor& t, const Tensor& g) {
    auto it = grads.find(t.impl().get());
    if (it == grads.end())
      grads.emplace(t.impl().get(), g);
    else
      it->second = ops::add(it->second, g);
  }

  void run(const Tensor& root) {
    if (root.numel() != 1)
      throw std::invalid_argument("backward: root must be a single element");
    if (!root.impl()->grad_fn && !root.requires_grad())
      throw std::invalid_argument("backward: root is not part of a graph");
    grads.emplace(root.impl().get(),
                  Tensor::full(root.shape(), 1.0));
    if (!root.impl()->grad_fn) return;

    std::unordered_set<Node*> seen;
    std::vector<Node*> order;
    topo_visit(root.impl()->grad_fn.get(), seen, order);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* node = *it;
      auto out_impl = node->out.lock();
      if (!out_impl) continue;
      auto git = grads.find(out_impl.get());
      if (git == grads.end()) continue;
      const Tensor gy = git->second;
      std::vector<Tensor> gins = node->backward(gy);
      if (gins.size() != node->inputs.size())
        throw std::logic_error(std::string("autograd: ") + node->name() +
                               " returned wrong gradient count");
      for (size_t i = 0; i < gins.size(); ++i) {
        if (!gins[i].defined()) continue;
        const Tensor& in = node->inputs[i];
        if (!in.defined() || !in.tracked()) continue;
        if (gins[i].shape() != in.shape())
          throw std::logic_error(std::string("autograd: ") + node->name() +
                                 " gradient shape " +
                                 shape_str(gins[i].shape()) +
                                 " does not match input " +
                                 shape_str(in.shape()));
        add(in, gins[i]);
      }
      // free the output grad if nobody else needs it? kept: map is small
      // relative to activations and cleared when Flow dies.
    }
  }
};

}  // namespace

void backward(const Tensor& root) {
  NoGradGuard ng;
  Flow flow;
  flow.run(root);
  for (auto& [implp, g] : flow.grads) {
    if (!implp->requires_grad || implp->grad_fn) continue;
    if (!implp->grad) {
      implp->grad = g.copy_data().impl();
    } else {
      auto& dst = *implp->grad->buf;
      const auto& src = *g.impl()->buf;
      for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

std::vector<Tensor> grad(const Tensor& root, const std::vector<Tensor>& wrt,
                         bool create_graph) {
  std::unique_ptr<NoGradGuard> ng;
  if (!create_graph) ng = std::make_unique<NoGradGuard>();
  Flow flow;
  flow.run(root);
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const Tensor& t : wrt) {
    auto it = flow.grads.find(t.impl().get());
    if (it == flow.grads.end())
      out.push_back(Tensor::zeros(t.shape()));
    else
      out.push_back(it->second);
  }
  return out;
}

}  // namespace tg
