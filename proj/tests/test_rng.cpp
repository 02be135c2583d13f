#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "plmc/rng.hpp"

using namespace plmc;

TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::generate(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::generate(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
  RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  for (int i = 0; i < 100; ++i) {
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
    CHECK(x != d.normal());
  }
}

TEST_CASE("copies continue identically") {
  RngStream a(1, 1);
  a.normal();  // leaves a spare cached
  a.uniform(RngLane::selection);
  RngStream b = a;
  CHECK(a == b);
  for (int i = 0; i < 10; ++i) {
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform(RngLane::selection) == b.uniform(RngLane::selection));
  }
}

TEST_CASE("lanes do not interfere") {
  RngStream a(5, 0), b(5, 0);
  for (int i = 0; i < 17; ++i) b.uniform(RngLane::selection);
  for (int i = 0; i < 50; ++i) CHECK(a.normal() == b.normal());
}

TEST_CASE("uniform stays in the open unit interval") {
  RngStream r(2, 0);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform(RngLane::auxiliary);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n) * 1.5);
}

TEST_CASE("normal moments") {
  RngStream r(11, 2);
  const int n = 400000;
  std::vector<double> z(n);
  r.fill_normal(z);
  double m1 = 0, m2 = 0, m4 = 0;
  for (double x : z) {
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}
