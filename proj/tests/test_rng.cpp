// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include <vector>
#include "core/rng.hpp"

using tg::Rng;

TEST_CASE("seeded streams are reproducible and tag-separated") {
  Rng a = Rng::seeded(42, "stream");
  Rng b = Rng::seeded(42, "stream");
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c = Rng::seeded(42, "other");
  Rng d = Rng::seeded(43, "stream");
  bool differs_c = false, differs_d = false;
  Rng a2 = Rng::seeded(42, "stream");
  for (int i = 0; i < 10; ++i) {
    const auto v = a2.next_u64();
    differs_c |= v != c.next_u64();
    differs_d |= v != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("state round-trip resumes the exact sequence") {
  Rng a = Rng::seeded(7, "ckpt");
  for (int i = 0; i < 17; ++i) a.next_u64();
  const auto snap = a.state();
  std::vector<double> expect;
  for (int i = 0; i < 50; ++i) expect.push_back(a.normal());

  Rng b;
  b.set_state(snap);
  for (int i = 0; i < 50; ++i) CHECK(b.normal() == expect[size_t(i)]);
}

TEST_CASE("uniform strictly inside [0,1) and ranged variant respects bounds") {
  Rng r = Rng::seeded(1, "uniform");
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform(-2.5, 3.5);
    CHECK(v >= -2.5);
    CHECK(v < 3.5);
  }
}

TEST_CASE("normal draws have sane moments") {
  Rng r = Rng::seeded(2026, "moments");
  const int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  const double mean = s1 / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(std::fabs(var - 1.0) < 0.02);
  CHECK(std::fabs(s3 / n) < 0.05);        // skew ~ 0
  CHECK(std::fabs(s4 / n - 3.0) < 0.15);  // kurtosis ~ 3
}

TEST_CASE("below() is in range and covers all residues") {
  Rng r = Rng::seeded(5, "below");
  int counts[7] = {0};
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    counts[v]++;
  }
  for (int c : counts) CHECK(c > 800);
}
