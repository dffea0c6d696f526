#include <doctest.h>

#include <cmath>

#include "stiffopt/random.hpp"

using namespace stiffopt;

TEST_CASE("identical (seed, label) pairs replay the same sequence") {
  RandomStream a(42, "root");
  RandomStream b(42, "root");
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different labels and seeds give different sequences") {
  RandomStream a(42, "root");
  RandomStream b(42, "other");
  RandomStream c(43, "root");
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    same_ab += a.next_u64() == b.next_u64();
    same_ac += a.next_u64() == c.next_u64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("fork derives an independent child stream") {
  RandomStream parent(7, "run");
  RandomStream child = parent.fork("eval");
  CHECK(child.label() == "run/eval");
  // Forking does not consume parent state.
  RandomStream parent2(7, "run");
  (void)parent2.fork("eval");
  CHECK(parent.next_u64() == parent2.next_u64());
  // Child differs from parent.
  RandomStream parent3(7, "run");
  CHECK(child.next_u64() != parent3.next_u64());
}

TEST_CASE("uniform lies in [0,1) and has the right mean") {
  RandomStream s(5, "u");
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("uniform(lo,hi) respects its bounds") {
  RandomStream s(5, "u2");
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform(-3.0, 2.0);
    CHECK(u >= -3.0);
    CHECK(u < 2.0);
  }
}

TEST_CASE("normal has approximately unit moments") {
  RandomStream s(11, "n");
  const int n = 40000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("uniform_index stays in range and covers all values") {
  RandomStream s(3, "idx");
  bool seen[7] = {};
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = s.uniform_index(7);
    REQUIRE(k < 7);
    seen[k] = true;
  }
  for (bool b : seen) CHECK(b);
}
