#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "eemix/synth.hpp"
#include "eemix/variation.hpp"
#include "helpers.hpp"

using namespace eemix;
using Catch::Approx;
using test_util::set_of;

TEST_CASE("replicate correlations against the sample mean", "[variation]") {
  SECTION("a replicate equal to the mean correlates perfectly") {
    const auto set = set_of("s", {{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}});
    const auto rho = replicate_correlations(set);
    REQUIRE(rho[0].value() == Approx(1.0).margin(1e-14));
    REQUIRE(rho[1].value() == Approx(1.0).margin(1e-14));
  }
  SECTION("hand-evaluated Pearson value") {
    // Mean of (1,2,3) and (3,6,11) is (2,4,7).
    const auto set = set_of("s", {{1.0, 2.0, 3.0}, {3.0, 6.0, 11.0}});
    const auto rho = replicate_correlations(set);
    REQUIRE(rho[0].value() == Approx(0.99339926779878285).epsilon(1e-12));
  }
  SECTION("constant replicate yields an undefined marker") {
    const auto set = set_of("s", {{5.0, 5.0, 5.0}, {1.0, 2.0, 3.0}});
    const auto rho = replicate_correlations(set);
    REQUIRE_FALSE(rho[0].has_value());
    REQUIRE(rho[1].has_value());
  }
}

TEST_CASE("scale factors on exactly multiplicative data", "[variation]") {
  SECTION("multiples of a common profile") {
    const std::vector<double> v = {2.0, 5.0, 11.0, 0.5};
    std::vector<std::vector<double>> reps;
    for (double c : {0.9, 1.0, 1.1}) {
      std::vector<double> r;
      for (double x : v) r.push_back(c * x);
      reps.push_back(r);
    }
    const ScaleEstimates est = estimate_scale_factors(set_of("s", reps));
    REQUIRE(est.factors[0] == Approx(0.9).margin(1e-14));
    REQUIRE(est.factors[1] == Approx(1.0).margin(1e-14));
    REQUIRE(est.factors[2] == Approx(1.1).margin(1e-14));
    REQUIRE(est.sigma_a == Approx(0.1).margin(1e-14));
    REQUIRE(est.excluded_pixels == 0);
  }
  SECTION("identical replicates") {
    const auto set = set_of("s", {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
    const ScaleEstimates est = estimate_scale_factors(set);
    REQUIRE(est.factors == std::vector<double>{1.0, 1.0, 1.0});
    REQUIRE(est.sigma_a == 0.0);
  }
  SECTION("hand-worked ratios") {
    const auto set = set_of("s", {{1.0, 2.0}, {3.0, 6.0}, {2.0, 4.0}});
    const ScaleEstimates est = estimate_scale_factors(set);
    REQUIRE(est.factors[0] == Approx(0.5).margin(1e-14));
    REQUIRE(est.factors[1] == Approx(1.5).margin(1e-14));
    REQUIRE(est.factors[2] == Approx(1.0).margin(1e-14));
    REQUIRE(est.sigma_a == Approx(0.5).margin(1e-14));
  }
  SECTION("low-signal pixels are excluded and counted") {
    const auto set = set_of("s", {{1.0, 0.0}, {3.0, 0.0}});
    const ScaleEstimates est = estimate_scale_factors(set);
    REQUIRE(est.excluded_pixels == 1);
    REQUIRE(est.factors[0] == Approx(0.5).margin(1e-14));
  }
  SECTION("all pixels excluded is an error") {
    const auto set = set_of("s", {{0.0, 0.0}, {0.0, 0.0}});
    REQUIRE_THROWS_AS(estimate_scale_factors(set), ComputeError);
  }
}

TEST_CASE("pooled sigma_a is the root mean square", "[variation]") {
  auto with_sigma = [](double s) {
    ScaleEstimates e;
    e.sigma_a = s;
    return e;
  };
  SECTION("single sample") {
    const std::vector<ScaleEstimates> one = {with_sigma(0.05)};
    REQUIRE(pool_sigma_a(one) == Approx(0.05).margin(1e-15));
  }
  SECTION("hand-worked pooling") {
    const std::vector<ScaleEstimates> three = {with_sigma(0.03), with_sigma(0.04),
                                               with_sigma(0.05)};
    REQUIRE(pool_sigma_a(three) == Approx(0.040824829046386302).epsilon(1e-12));
  }
  SECTION("all zero") {
    const std::vector<ScaleEstimates> zeros = {with_sigma(0.0), with_sigma(0.0)};
    REQUIRE(pool_sigma_a(zeros) == 0.0);
  }
  SECTION("empty input") {
    REQUIRE_THROWS_AS(pool_sigma_a({}), ValidationError);
  }
}

TEST_CASE("sigma_e on exactly multiplicative data is zero", "[variation]") {
  const std::vector<double> v = {2.0, 5.0, 11.0};
  std::vector<std::vector<double>> reps;
  for (double c : {0.9, 1.0, 1.1}) {
    std::vector<double> r;
    for (double x : v) r.push_back(c * x);
    reps.push_back(r);
  }
  const auto set = set_of("s", reps);
  const ScaleEstimates scale = estimate_scale_factors(set);
  const NoiseEstimates noise = estimate_sigma_e(set, scale);
  REQUIRE(noise.sigma_e == Approx(0.0).margin(1e-13));
  REQUIRE(noise.residual_sd == Approx(0.0).margin(1e-13));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 3; ++k)
      REQUIRE(noise.residuals(i, k) == Approx(1.0).margin(1e-13));
}

TEST_CASE("plain sample sd of the reference residual multiset", "[variation]") {
  // The residual-spread computation reduces to a sample sd; frozen hand value.
  const std::vector<double> residuals = {0.9, 1.1, 1.0, 1.0};
  REQUIRE(detail::sample_sd(residuals).value() ==
          Approx(0.081649658092772603).epsilon(1e-12));
}

TEST_CASE("zero-mean pixels are excluded from residuals", "[variation]") {
  const auto set = set_of("s", {{1.0, 0.0, 4.0}, {3.0, 0.0, 4.0}});
  const ScaleEstimates scale = estimate_scale_factors(set);
  const NoiseEstimates noise = estimate_sigma_e(set, scale);
  REQUIRE(noise.excluded_pixels == 1);
  REQUIRE(std::isnan(noise.residuals(0, 1)));
  REQUIRE(std::isnan(noise.residuals(1, 1)));
}

TEST_CASE("snr formula and its failure modes", "[variation]") {
  REQUIRE(snr(0.0, 0.01) == Approx(100.0).epsilon(1e-12));
  REQUIRE(snr(0.0016, 0.155) == Approx(6.3755993063347955).epsilon(1e-12));
  REQUIRE(snr(0.0016, 0.0) == Approx(625.0).epsilon(1e-12));
  REQUIRE_THROWS_AS(snr(0.0, 0.0), ComputeError);
  REQUIRE_THROWS_AS(snr(-0.1, 0.01), ValidationError);
}

TEST_CASE("snr is strictly decreasing in each variance", "[variation]") {
  std::mt19937 rng(15);
  std::uniform_real_distribution<double> var(0.0001, 0.5);
  for (int i = 0; i < 100; ++i) {
    const double a = var(rng), e = var(rng), bump = var(rng);
    REQUIRE(snr(a + bump, e) < snr(a, e));
    REQUIRE(snr(a, e + bump) < snr(a, e));
  }
}

TEST_CASE("mean-sd curve", "[variation]") {
  SECTION("identical replicates give a flat zero curve") {
    const auto set = set_of("s", {{1.0, 5.0, 9.0}, {1.0, 5.0, 9.0}});
    for (const MeanSdPoint& pt : mean_sd_curve(set, 3)) REQUIRE(pt.sd == 0.0);
  }
  SECTION("two pixels, two bins, hand-worked") {
    const auto set = set_of("s", {{0.0, 10.0}, {0.0, 20.0}});
    const auto curve = mean_sd_curve(set, 2);
    REQUIRE(curve.size() == 2);
    REQUIRE(curve[0].mean == Approx(0.0).margin(1e-15));
    REQUIRE(curve[0].sd == Approx(0.0).margin(1e-15));
    REQUIRE(curve[1].mean == Approx(15.0).margin(1e-12));
    REQUIRE(curve[1].sd == Approx(7.0710678118654752).epsilon(1e-12));
  }
  SECTION("more bins than pixels is an error") {
    const auto set = set_of("s", {{1.0, 2.0}, {2.0, 3.0}});
    REQUIRE_THROWS_AS(mean_sd_curve(set, 3), ValidationError);
  }
}

TEST_CASE("mean-sd slope recovers sigma_e on multiplicative data", "[variation][slow]") {
  // Pure pixel noise (sigma_a = 0), many replicates so the per-pixel sd is
  // nearly unbiased; the sd-vs-mean relation is linear through the origin
  // with slope sigma_e.
  const std::size_t p = 20000;
  const double sigma_e = 0.05;
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> level(1.0, 100.0);
  std::vector<double> mu(p);
  for (double& v : mu) v = level(rng);

  NoiseSpec spec;
  spec.sigma_a = 0.0;
  spec.sigma_e = sigma_e;
  spec.seed = 808;
  const ReplicateSet set = generate_replicates(test_util::vector_grid(mu), 50, spec);

  const auto curve = mean_sd_curve(set, 50);
  double sxy = 0.0, sxx = 0.0;
  for (const MeanSdPoint& pt : curve) {
    sxy += pt.mean * pt.sd;
    sxx += pt.mean * pt.mean;
  }
  const double slope = sxy / sxx;
  REQUIRE(slope == Approx(sigma_e).epsilon(0.02));
}

TEST_CASE("scale identifiability for mean-one factors", "[variation]") {
  std::mt19937 rng(444);
  std::uniform_real_distribution<double> level(0.5, 20.0);
  std::normal_distribution<double> delta(0.0, 0.05);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + rng() % 3;
    const std::size_t p = 50;
    std::vector<double> c(n);
    double mean_c = 0.0;
    for (double& v : c) {
      v = 1.0 + delta(rng);
      mean_c += v;
    }
    mean_c /= static_cast<double>(n);
    for (double& v : c) v /= mean_c;  // force mean exactly 1 up to rounding

    std::vector<double> base(p);
    for (double& v : base) v = level(rng);
    std::vector<std::vector<double>> reps;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> r(p);
      for (std::size_t k = 0; k < p; ++k) r[k] = c[i] * base[k];
      reps.push_back(r);
    }
    const ScaleEstimates est = estimate_scale_factors(set_of("s", reps));
    for (std::size_t i = 0; i < n; ++i)
      REQUIRE(est.factors[i] == Approx(c[i]).margin(1e-12));
  }
}

TEST_CASE("variation estimates are invariant to common rescaling", "[variation]") {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> level(0.5, 30.0);
  std::vector<std::vector<double>> reps(3, std::vector<double>(40));
  for (auto& r : reps)
    for (double& v : r) v = level(rng);

  const auto base_set = set_of("s", reps);
  const ScaleEstimates base_scale = estimate_scale_factors(base_set);
  const NoiseEstimates base_noise = estimate_sigma_e(base_set, base_scale);

  const double k = 37.5;
  std::vector<std::vector<double>> scaled = reps;
  for (auto& r : scaled)
    for (double& v : r) v *= k;
  const auto scaled_set = set_of("s", scaled);
  const ScaleEstimates s_scale = estimate_scale_factors(scaled_set);
  const NoiseEstimates s_noise = estimate_sigma_e(scaled_set, s_scale);

  for (std::size_t i = 0; i < 3; ++i)
    REQUIRE(s_scale.factors[i] == Approx(base_scale.factors[i]).epsilon(1e-13));
  REQUIRE(s_scale.sigma_a == Approx(base_scale.sigma_a).margin(1e-13));
  REQUIRE(s_noise.sigma_e == Approx(base_noise.sigma_e).margin(1e-12));
}

TEST_CASE("sigma_e estimator is calibrated on synthetic data", "[variation][slow]") {
  // Model draws with known parameters; the corrected pooled spread should
  // average close to the true sigma_e despite the estimated pixel means.
  const double sigma_a = 0.005, sigma_e = 0.02;
  const std::size_t p = 4000, n = 3, sims = 30;
  std::vector<double> mu(p);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> level(5.0, 50.0);
  for (double& v : mu) v = level(rng);
  const EemGrid mu_grid = test_util::vector_grid(mu);

  double acc = 0.0;
  for (std::size_t sim = 0; sim < sims; ++sim) {
    NoiseSpec spec;
    spec.sigma_a = sigma_a;
    spec.sigma_e = sigma_e;
    spec.seed = 5000 + sim;
    const ReplicateSet set = generate_replicates(mu_grid, n, spec);
    const ScaleEstimates scale = estimate_scale_factors(set);
    acc += estimate_sigma_e(set, scale).sigma_e;
  }
  const double avg = acc / static_cast<double>(sims);
  REQUIRE(avg == Approx(sigma_e).epsilon(0.10));
}

TEST_CASE("analyze_variation wires pooled sigma_a into SNR", "[variation]") {
  NoiseSpec spec;
  spec.sigma_a = 0.04;
  spec.sigma_e = 0.01;
  spec.seed = 77;
  std::vector<double> mu(500);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> level(5.0, 50.0);
  for (double& v : mu) v = level(rng);
  const EemGrid mu_grid = test_util::vector_grid(mu);

  std::vector<ReplicateSet> samples;
  for (int k = 0; k < 3; ++k) {
    NoiseSpec s = spec;
    s.seed = 100 + k;
    samples.push_back(generate_replicates(mu_grid, 3, s, "s" + std::to_string(k)));
  }
  const VariationAnalysis analysis = analyze_variation(samples);
  REQUIRE(analysis.samples.size() == 3);
  REQUIRE(analysis.pooled_sigma_a > 0.0);
  const double sa2 = analysis.pooled_sigma_a * analysis.pooled_sigma_a;
  for (const auto& rep : analysis.samples) {
    REQUIRE(rep.snr.has_value());
    const double se2 = rep.noise.sigma_e * rep.noise.sigma_e;
    REQUIRE(*rep.snr == Approx(snr(sa2, se2)).epsilon(1e-12));
  }
}
