// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// The optimizer is pinned against a self-contained scalar transcription of
// the update rules, written independently of the production code.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/autograd.hpp"
#include "core/nn.hpp"
#include "core/optim.hpp"
#include "core/ops.hpp"

using namespace tg;

namespace {

// scalar reference: rectified-Adam inner step + periodic slow-weight pull
struct RefOpt {
  double lr, b1, b2, eps;
  bool rectified, lookahead;
  long k;
  double alpha;
  long t = 0;
  std::vector<double> m, v, slow;

  explicit RefOpt(const std::vector<double>& x0, const OptimConfig& c)
      : lr(c.lr), b1(c.beta1), b2(c.beta2), eps(c.eps),
        rectified(c.rectified), lookahead(c.lookahead),
        k(c.lookahead_k), alpha(c.lookahead_alpha),
        m(x0.size(), 0.0), v(x0.size(), 0.0), slow(x0) {}

  void step(std::vector<double>& x, const std::vector<double>& g) {
    ++t;
    const double b1t = std::pow(b1, double(t));
    const double b2t = std::pow(b2, double(t));
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho_t = rho_inf - 2.0 * double(t) * b2t / (1.0 - b2t);
    for (size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - b1t);
      if (!rectified) {
        x[i] -= lr * mh / (std::sqrt(v[i] / (1 - b2t)) + eps);
      } else if (rho_t > 4.0) {
        const double r = std::sqrt(((rho_t - 4) * (rho_t - 2) * rho_inf) /
                                   ((rho_inf - 4) * (rho_inf - 2) * rho_t));
        x[i] -= lr * r * mh / (std::sqrt(v[i] / (1 - b2t)) + eps);
      } else {
        x[i] -= lr * mh;
      }
    }
    if (lookahead && t % k == 0)
      for (size_t i = 0; i < x.size(); ++i) {
        slow[i] += alpha * (x[i] - slow[i]);
        x[i] = slow[i];
      }
  }
};

// quadratic objective 0.5*(x-target)^T A (x-target) with diagonal A
Tensor quad_loss(const Tensor& x, const std::vector<double>& a,
                 const std::vector<double>& tgt) {
  Tensor diff = x - Tensor::from_data(x.shape(), tgt);
  Tensor aw = Tensor::from_data(x.shape(), a);
  return ops::sum(diff * diff * aw) * 0.5;
}

}  // namespace

TEST_CASE("optimizer trajectory matches the scalar reference") {
  const std::vector<double> a{2.0, 0.5, 1.0, 4.0};
  const std::vector<double> tgt{1.0, -2.0, 0.5, 3.0};
  for (bool rect : {false, true}) {
    for (bool la : {false, true}) {
      OptimConfig cfg;
      cfg.lr = 0.05;
      cfg.rectified = rect;
      cfg.lookahead = la;

      Tensor x = Tensor::from_data({4}, {0, 0, 0, 0}).set_requires_grad(true);
      Optimizer opt({x}, cfg);
      std::vector<double> xr{0, 0, 0, 0};
      RefOpt ref(xr, cfg);

      for (int it = 0; it < 37; ++it) {
        opt.zero_grad();
        backward(quad_loss(x, a, tgt));
        opt.step();

        std::vector<double> g(4);
        for (int i = 0; i < 4; ++i) g[size_t(i)] = a[size_t(i)] * (xr[size_t(i)] - tgt[size_t(i)]);
        ref.step(xr, g);

        for (int i = 0; i < 4; ++i)
          CHECK(x.data()[i] == doctest::Approx(xr[size_t(i)]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("rectification holds back the variance term early on") {
  // with beta2 = 0.999 the threshold is crossed at step 5, so steps 1-4 use
  // the unadapted first moment: constant gradient gives exactly lr-sized
  // moves (bias-corrected m equals the gradient)
  OptimConfig cfg;
  cfg.lr = 0.01;
  cfg.rectified = true;
  cfg.lookahead = false;
  Tensor x = Tensor::from_data({1}, {10.0}).set_requires_grad(true);
  Optimizer opt({x}, cfg);
  double prev = 10.0;
  for (int it = 1; it <= 4; ++it) {
    opt.zero_grad();
    backward(ops::sum(x));  // gradient 1 everywhere
    opt.step();
    CHECK(x.data()[0] == doctest::Approx(prev - cfg.lr).epsilon(1e-12));
    prev = x.data()[0];
  }
  // step 5: rectified variance kicks in, the move shrinks below lr
  opt.zero_grad();
  backward(ops::sum(x));
  opt.step();
  const double move5 = prev - x.data()[0];
  CHECK(move5 < cfg.lr);
  CHECK(move5 > 0.0);
}

TEST_CASE("slow-weight sync happens exactly every k steps") {
  OptimConfig cfg;
  cfg.lr = 0.1;
  cfg.lookahead = true;
  cfg.lookahead_k = 5;
  cfg.rectified = false;
  Tensor x = Tensor::from_data({1}, {1.0}).set_requires_grad(true);
  Optimizer opt({x}, cfg);

  std::vector<double> history;
  for (int it = 1; it <= 10; ++it) {
    opt.zero_grad();
    backward(ops::sum(x * x) * 0.5);
    opt.step();
    history.push_back(x.data()[0]);
  }
  // after step 5 the fast weights snap to slow = x0 + 0.5*(x5_fast - x0);
  // verify the jump: |x5 - x4| is larger than the typical inner move
  const double inner = std::fabs(history[3] - history[2]);
  const double jump = std::fabs(history[4] - history[3]);
  CHECK(jump > inner);
}

TEST_CASE("optimizer converges on the quadratic") {
  OptimConfig cfg;
  cfg.lr = 0.05;
  Tensor x = Tensor::from_data({4}, {5, -5, 5, -5}).set_requires_grad(true);
  Optimizer opt({x}, cfg);
  const std::vector<double> a{1, 1, 2, 0.5};
  const std::vector<double> tgt{0.3, -1.0, 2.0, 0.0};
  double loss = 0;
  for (int it = 0; it < 3000; ++it) {
    opt.zero_grad();
    Tensor l = quad_loss(x, a, tgt);
    loss = l.item();
    backward(l);
    opt.step();
  }
  CHECK(loss < 1e-4);
}

TEST_CASE("optimizer state round-trips through NamedTensors") {
  OptimConfig cfg;
  cfg.lr = 0.02;
  auto run = [&](int presteps, int totsteps, bool reload) {
    Tensor x = Tensor::from_data({3}, {2, 2, 2}).set_requires_grad(true);
    Optimizer opt({x}, cfg);
    nn::NamedTensors snap;
    Tensor xsnap;
    for (int it = 0; it < totsteps; ++it) {
      if (reload && it == presteps) {
        // transplant state into a fresh optimizer mid-run
        Optimizer opt2({x}, cfg);
        opt2.load_state(snap, "opt");
        for (; it < totsteps; ++it) {
          opt2.zero_grad();
          backward(quad_loss(x, {1, 2, 3}, {0, 1, -1}));
          opt2.step();
        }
        break;
      }
      if (reload && it == presteps - 1) {
        // snapshot BEFORE the step at presteps
      }
      opt.zero_grad();
      backward(quad_loss(x, {1, 2, 3}, {0, 1, -1}));
      opt.step();
      if (reload && it == presteps - 1) {
        snap = nn::NamedTensors();
        opt.state(snap, "opt");
        // deep-copy so later steps of opt don't alias
        for (auto& [n, t] : snap.items) t = t.copy_data();
      }
    }
    return std::vector<double>(x.data(), x.data() + 3);
  };
  auto straight = run(0, 20, false);
  auto resumed = run(8, 20, true);
  for (int i = 0; i < 3; ++i)
    CHECK(straight[size_t(i)] == doctest::Approx(resumed[size_t(i)]).epsilon(1e-15));
}
