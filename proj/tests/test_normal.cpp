#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "eemix/normal.hpp"

using namespace eemix;

namespace {

// Reference values computed with 30-digit arithmetic (mpmath), frozen here.
struct TailPoint {
  double z;
  double lower_tail;   // Phi(-z)
  double two_sided;    // 2 Phi(-z)
};

constexpr TailPoint kTails[] = {
    {0.0, 0.5, 1.0},
    {1.0, 0.15865525393145705141, 0.31731050786291410283},
    {1.96, 0.024997895148220434137, 0.049995790296440868273},
    {3.0, 0.0013498980316300945267, 0.0026997960632601890533},
    {6.0, 9.8658764503769814070e-10, 1.9731752900753962814e-9},
};

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::fabs(want);
}

}  // namespace

TEST_CASE("normal cdf matches the high-precision oracle on tails", "[normal]") {
  for (const TailPoint& t : kTails) {
    CAPTURE(t.z);
    if (t.z == 0.0) {
      REQUIRE(normal_cdf(0.0) == 0.5);
      REQUIRE(two_sided_p(0.0) == 1.0);
      continue;
    }
    REQUIRE(rel_err(normal_cdf(-t.z), t.lower_tail) < 1e-12);
    REQUIRE(rel_err(two_sided_p(t.z), t.two_sided) < 1e-12);
    REQUIRE(rel_err(two_sided_p(-t.z), t.two_sided) < 1e-12);
    // Upper tail through the symmetric branch.
    REQUIRE(std::fabs(normal_cdf(t.z) - (1.0 - t.lower_tail)) < 1e-14);
  }
}

TEST_CASE("two-sided p-values at the frozen reference points", "[normal]") {
  REQUIRE(rel_err(two_sided_p(2.0), 0.045500263896358414401) < 1e-12);
  REQUIRE(rel_err(two_sided_p(-1.959964), 0.049999998192884808605) < 1e-12);
}

TEST_CASE("normal cdf is symmetric and monotone", "[normal]") {
  std::mt19937 rng(7741);
  std::uniform_real_distribution<double> zdist(-8.0, 8.0);
  double prev_z = -9.0;
  double prev_cdf = normal_cdf(prev_z);
  for (int i = 0; i < 500; ++i) {
    const double z = zdist(rng);
    REQUIRE(std::fabs(normal_cdf(z) + normal_cdf(-z) - 1.0) < 1e-14);
    REQUIRE(two_sided_p(z) >= 0.0);
    REQUIRE(two_sided_p(z) <= 1.0);
  }
  for (double z = -8.0; z <= 8.0; z += 0.25) {
    const double c = normal_cdf(z);
    REQUIRE(c >= prev_cdf);
    prev_cdf = c;
    prev_z = z;
  }
}

TEST_CASE("extreme arguments saturate cleanly", "[normal]") {
  REQUIRE(normal_cdf(-40.0) == 0.0);
  REQUIRE(normal_cdf(40.0) == 1.0);
  REQUIRE(two_sided_p(40.0) == 0.0);
}
