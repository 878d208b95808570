// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "core/ops.hpp"
#include "core/tensor.hpp"

using namespace tg;

TEST_CASE("tensor construction and basic accessors") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.shape() == Shape{2, 3});
  for (i64 i = 0; i < 6; ++i) CHECK(z.data()[i] == 0.0);

  Tensor f = Tensor::full({4}, 2.5);
  CHECK(f.data()[3] == 2.5);

  Tensor s = Tensor::scalar(-1.25);
  CHECK(s.ndim() == 0);
  CHECK(s.item() == -1.25);
  CHECK_THROWS(z.item());

  CHECK_THROWS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}));
}

TEST_CASE("elementwise arithmetic with equal shapes") {
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 2}, {10, 20, 30, 40});
  Tensor y = a * b + a - b * 0.5;
  const double want[] = {1 * 10 + 1 - 5.0, 2 * 20 + 2 - 10.0,
                         3 * 30 + 3 - 15.0, 4 * 40 + 4 - 20.0};
  for (i64 i = 0; i < 4; ++i) CHECK(y.data()[i] == doctest::Approx(want[i]));
}

TEST_CASE("broadcasting follows numpy alignment") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor row = Tensor::from_data({3}, {10, 20, 30});
  Tensor col = Tensor::from_data({2, 1}, {100, 200});

  Tensor y = a + row;
  CHECK(y.shape() == Shape{2, 3});
  CHECK(y.data()[0] == 11);
  CHECK(y.data()[5] == 36);

  Tensor z = a + col;
  CHECK(z.data()[0] == 101);
  CHECK(z.data()[3] == 204);

  Tensor s = a * Tensor::scalar(2.0);
  CHECK(s.data()[4] == 10);

  Tensor bias = Tensor::from_data({1, 2, 1, 1}, {1, -1});
  Tensor img = Tensor::ones({3, 2, 4, 4});
  Tensor out = img + bias;
  CHECK(out.shape() == Shape{3, 2, 4, 4});
  CHECK(out.data()[0] == 2.0);
  CHECK(out.data()[16] == 0.0);  // second channel

  CHECK_THROWS(ops::add(Tensor::zeros({2, 3}), Tensor::zeros({2, 4})));
}

TEST_CASE("reductions") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(ops::sum(a).item() == 21.0);
  CHECK(ops::mean(a).item() == doctest::Approx(3.5));

  Tensor s0 = ops::sum(a, {0}, false);
  CHECK(s0.shape() == Shape{3});
  CHECK(s0.data()[0] == 5.0);
  CHECK(s0.data()[2] == 9.0);

  Tensor s1 = ops::sum(a, {1}, true);
  CHECK(s1.shape() == Shape{2, 1});
  CHECK(s1.data()[0] == 6.0);
  CHECK(s1.data()[1] == 15.0);

  Tensor m = ops::mean(a, {0, 1}, false);
  CHECK(m.ndim() == 0);
  CHECK(m.item() == doctest::Approx(3.5));
}

TEST_CASE("exclusive prefix and suffix sums") {
  Tensor x = Tensor::from_data({2, 4}, {1, 2, 3, 4, 10, 20, 30, 40});
  Tensor p = ops::cumsum_excl(x);
  const double wantp[] = {0, 1, 3, 6, 0, 10, 30, 60};
  for (i64 i = 0; i < 8; ++i) CHECK(p.data()[i] == wantp[i]);

  Tensor sfx = ops::sumrev_excl(x);
  const double wants[] = {9, 7, 4, 0, 90, 70, 40, 0};
  for (i64 i = 0; i < 8; ++i) CHECK(sfx.data()[i] == wants[i]);
}

TEST_CASE("reshape shares storage, permute copies") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor r = ops::reshape(a, {3, 2});
  CHECK(r.data() == a.data());
  CHECK_THROWS(ops::reshape(a, {4, 2}));

  Tensor t = ops::transpose2d(a);
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.data()[0] == 1);
  CHECK(t.data()[1] == 4);
  CHECK(t.data()[4] == 3);

  Tensor p = ops::permute(Tensor::from_data({1, 2, 2}, {1, 2, 3, 4}),
                          {2, 0, 1});
  CHECK(p.shape() == Shape{2, 1, 2});
  CHECK(p.data()[0] == 1);
  CHECK(p.data()[1] == 3);
  CHECK(p.data()[2] == 2);
  CHECK(p.data()[3] == 4);
}

TEST_CASE("slice and cat round-trip") {
  Tensor a = Tensor::from_data({2, 5}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor mid = ops::slice(a, 1, 1, 3);
  CHECK(mid.shape() == Shape{2, 3});
  CHECK(mid.data()[0] == 1);
  CHECK(mid.data()[5] == 8);

  Tensor lo = ops::slice(a, 1, 0, 1);
  Tensor hi = ops::slice(a, 1, 4, 1);
  Tensor back = ops::cat({lo, mid, hi}, 1);
  CHECK(back.shape() == a.shape());
  for (i64 i = 0; i < 10; ++i) CHECK(back.data()[i] == a.data()[i]);

  CHECK_THROWS(ops::slice(a, 1, 3, 4));
  CHECK_THROWS(ops::cat({a, Tensor::zeros({3, 5})}, 1));
}

TEST_CASE("matmul agrees with manual computation") {
  Tensor a = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_data({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = ops::matmul(a, b);
  CHECK(c.shape() == Shape{2, 2});
  CHECK(c.data()[0] == doctest::Approx(58));
  CHECK(c.data()[1] == doctest::Approx(64));
  CHECK(c.data()[2] == doctest::Approx(139));
  CHECK(c.data()[3] == doctest::Approx(154));
  CHECK_THROWS(ops::matmul(a, a));
}

TEST_CASE("conv2d matches direct summation on a tiny example") {
  // 1x1x3x3 input, 1x1x3x3 weights, pad 1: center output = full overlap
  Tensor x = Tensor::from_data({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor y = ops::conv2d(x, w, 1);
  CHECK(y.shape() == Shape{1, 1, 3, 3});
  CHECK(y.data()[4] == doctest::Approx(45));   // sum of all
  CHECK(y.data()[0] == doctest::Approx(12));   // corner: 1+2+4+5

  // valid (pad 0) collapses to the full-overlap value only
  Tensor yv = ops::conv2d(x, w, 0);
  CHECK(yv.shape() == Shape{1, 1, 1, 1});
  CHECK(yv.item() == doctest::Approx(45));

  // 1x1 kernels act per-pixel
  Tensor w1 = Tensor::from_data({2, 1, 1, 1}, {2.0, -1.0});
  Tensor y1 = ops::conv2d(x, w1, 0);
  CHECK(y1.shape() == Shape{1, 2, 3, 3});
  CHECK(y1.data()[0] == 2.0);
  CHECK(y1.data()[9] == -1.0);
}

TEST_CASE("pooling and upsampling") {
  Tensor x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor p = ops::avg_pool2(x);
  CHECK(p.shape() == Shape{1, 1, 1, 1});
  CHECK(p.item() == doctest::Approx(2.5));

  Tensor u = ops::upsample2_nearest(p);
  CHECK(u.shape() == Shape{1, 1, 2, 2});
  for (int i = 0; i < 4; ++i) CHECK(u.data()[i] == doctest::Approx(2.5));

  CHECK_THROWS(ops::avg_pool2(Tensor::zeros({1, 1, 3, 3})));
}

TEST_CASE("unary op values") {
  Tensor x = Tensor::from_data({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
  Tensor lr = ops::leaky_relu(x, 0.2);
  CHECK(lr.data()[0] == doctest::Approx(-0.4));
  CHECK(lr.data()[4] == doctest::Approx(2.0));

  Tensor sp = ops::softplus(x);
  CHECK(sp.data()[2] == doctest::Approx(std::log(2.0)));
  // linear tail does not overflow
  Tensor big = ops::softplus(Tensor::from_data({1}, {800.0}));
  CHECK(big.item() == doctest::Approx(800.0));
  Tensor sm = ops::softplus(Tensor::from_data({1}, {-800.0}));
  CHECK(sm.item() == doctest::Approx(0.0));

  Tensor sg = ops::sigmoid(x);
  CHECK(sg.data()[2] == doctest::Approx(0.5));
  CHECK(sg.data()[0] + sg.data()[4] == doctest::Approx(1.0));

  Tensor cm = ops::clamp_min(x, 0.1);
  CHECK(cm.data()[0] == doctest::Approx(0.1));
  CHECK(cm.data()[4] == doctest::Approx(2.0));
}

TEST_CASE("trigrid inside mask is pure geometry") {
  Tensor pts = Tensor::from_data(
      {4, 3}, {0, 0, 0, 1.0, -1.0, 1.0, 1.0001, 0, 0, 0, -2, 0});
  Tensor in = ops::trigrid_inside(pts);
  CHECK(in.data()[0] == 1.0);
  CHECK(in.data()[1] == 1.0);
  CHECK(in.data()[2] == 0.0);
  CHECK(in.data()[3] == 0.0);
}
