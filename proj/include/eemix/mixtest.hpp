#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/normal.hpp"
#include "eemix/samples.hpp"

namespace eemix {

// Inputs for the per-pixel linear-mixing test. The variance parameters are
// explicit so callers can choose sample-specific or pooled estimates.
struct TestInputs {
  ReplicateSet mixture;  // must carry known weights
  std::vector<ReplicateSet> endmembers;
  double sigma_a2 = 0.0;
  double sigma_e2_mixture = 0.0;
  std::vector<double> sigma_e2_endmembers;
};

// Plug-in standard deviation of mu_hat - theta_hat . b under the
// multiplicative model:
//   Var(mean y_j)   = mu_hat^2  ((sigma_a^2+1)(sigma_e^2+1) - 1) / n
//   Var(mean x_j^k) = theta_k^2 ((sigma_a^2+1)(sigma_e_k^2+1) - 1) / n
//   sigma_j^2       = Var(mean y_j) + sum_k b_k^2 Var(mean x_j^k)
inline double sigma_j_hat(double mu_hat, std::span<const double> theta_hat,
                          std::span<const double> weights, std::size_t n, double sigma_a2,
                          double sigma_e2_mixture, std::span<const double> sigma_e2_endmembers) {
  if (n < 1) throw ValidationError("sigma_j: n must be >= 1");
  if (theta_hat.size() != weights.size() || theta_hat.size() != sigma_e2_endmembers.size())
    throw ValidationError("sigma_j: endmember vector length mismatch");
  if (sigma_a2 < 0.0 || sigma_e2_mixture < 0.0)
    throw ValidationError("sigma_j: negative variance");
  const double inv_n = 1.0 / static_cast<double>(n);
  double var = mu_hat * mu_hat * ((sigma_a2 + 1.0) * (sigma_e2_mixture + 1.0) - 1.0) * inv_n;
  for (std::size_t k = 0; k < theta_hat.size(); ++k) {
    if (sigma_e2_endmembers[k] < 0.0) throw ValidationError("sigma_j: negative variance");
    const double vk =
        theta_hat[k] * theta_hat[k] * ((sigma_a2 + 1.0) * (sigma_e2_endmembers[k] + 1.0) - 1.0) *
        inv_n;
    var += weights[k] * weights[k] * vk;
  }
  return std::sqrt(var);
}

struct ZandP {
  double z;
  double p;
};

// z = (mu_hat - theta_hat . b) / sigma_j, p = two-sided normal tail.
// sigma_j = 0 marks the pixel untestable (nullopt).
inline std::optional<ZandP> z_and_p(double mu_hat, std::span<const double> theta_hat,
                                    std::span<const double> weights, double sigma_j) {
  if (theta_hat.size() != weights.size()) throw ValidationError("z: vector length mismatch");
  if (sigma_j < 0.0) throw ValidationError("z: negative sigma");
  if (sigma_j == 0.0) return std::nullopt;
  double predicted = 0.0;
  for (std::size_t k = 0; k < theta_hat.size(); ++k) predicted += theta_hat[k] * weights[k];
  const double z = (mu_hat - predicted) / sigma_j;
  return ZandP{z, two_sided_p(z)};
}

struct BhResult {
  double threshold = 0.0;
  std::vector<std::uint8_t> rejected;
};

// Step-up false discovery rate control: sort p ascending, find the largest k
// with p_(k) <= k * alpha / m, reject everything at or below that p-value.
// Ties at the threshold are rejected together.
inline BhResult benjamini_hochberg(std::span<const double> p_values, double alpha) {
  const std::size_t m = p_values.size();
  if (m == 0) throw ValidationError("benjamini-hochberg: empty input");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("benjamini-hochberg: alpha not in (0, 1)");
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("benjamini-hochberg: p-value not in [0, 1]");

  std::vector<double> sorted(p_values.begin(), p_values.end());
  std::sort(sorted.begin(), sorted.end());

  double threshold = 0.0;
  bool any = false;
  for (std::size_t k = m; k-- > 0;) {
    if (sorted[k] <= static_cast<double>(k + 1) * alpha / static_cast<double>(m)) {
      threshold = sorted[k];
      any = true;
      break;
    }
  }

  BhResult out;
  out.threshold = threshold;
  out.rejected.assign(m, 0);
  if (any)
    for (std::size_t i = 0; i < m; ++i) out.rejected[i] = p_values[i] <= threshold ? 1 : 0;
  return out;
}

enum class DeviationSign { lower, none, higher };

struct PixelTestResult {
  PixelLocation pixel;
  double mixture_mean;    // mu_hat at the pixel
  double predicted_mean;  // theta_hat . b
  double sigma;
  double z;
  double p_value;
  bool rejected = false;
  DeviationSign sign = DeviationSign::none;
};

struct UntestablePixel {
  PixelLocation pixel;
  double mixture_mean;
  double predicted_mean;
};

struct MixtestResult {
  std::vector<PixelTestResult> pixels;  // canonical pixel order, tested only
  std::vector<UntestablePixel> untestable;
  double bh_threshold = 0.0;
  std::size_t tested_count = 0;
  std::size_t rejected_count = 0;
  double rejected_fraction = 0.0;  // rejected / tested
};

// Per-pixel z tests of mu_j = theta_j . b with BH control across pixels.
// Untestable pixels (sigma_j = 0) are reported in their own list so the
// rejection fraction has an unambiguous denominator.
inline MixtestResult run_mixtest(const TestInputs& inputs, double alpha) {
  const std::size_t s = inputs.endmembers.size();
  if (s == 0) throw ValidationError("mixtest: no endmembers");
  if (!inputs.mixture.weights())
    throw ValidationError("mixtest: mixture '" + inputs.mixture.sample_id() +
                          "' has no known weights");
  const std::vector<double>& b = *inputs.mixture.weights();
  if (b.size() != s) throw ValidationError("mixtest: weight vector length mismatch");
  if (inputs.sigma_e2_endmembers.size() != s)
    throw ValidationError("mixtest: endmember variance count mismatch");
  const std::size_t n = inputs.mixture.replicate_count();
  for (const ReplicateSet& e : inputs.endmembers) {
    if (!e.same_layout(inputs.mixture))
      throw ValidationError("mixtest: endmember '" + e.sample_id() +
                            "' layout differs from mixture");
    if (e.replicate_count() != n)
      throw ValidationError("mixtest: replicate counts differ between samples");
  }

  const VectorizedEem mu = pixel_mean(inputs.mixture);
  std::vector<VectorizedEem> thetas;
  thetas.reserve(s);
  for (const ReplicateSet& e : inputs.endmembers) thetas.push_back(pixel_mean(e));

  MixtestResult out;
  std::vector<double> theta_j(s);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    for (std::size_t k = 0; k < s; ++k) theta_j[k] = thetas[k].values[j];
    const double sigma = sigma_j_hat(mu.values[j], theta_j, b, n, inputs.sigma_a2,
                                     inputs.sigma_e2_mixture, inputs.sigma_e2_endmembers);
    const auto zp = z_and_p(mu.values[j], theta_j, b, sigma);
    double predicted = 0.0;
    for (std::size_t k = 0; k < s; ++k) predicted += theta_j[k] * b[k];
    if (!zp) {
      out.untestable.push_back({mu.pixels[j], mu.values[j], predicted});
      continue;
    }
    PixelTestResult r;
    r.pixel = mu.pixels[j];
    r.mixture_mean = mu.values[j];
    r.predicted_mean = predicted;
    r.sigma = sigma;
    r.z = zp->z;
    r.p_value = zp->p;
    out.pixels.push_back(r);
  }

  out.tested_count = out.pixels.size();
  if (!out.pixels.empty()) {
    std::vector<double> ps;
    ps.reserve(out.pixels.size());
    for (const auto& r : out.pixels) ps.push_back(r.p_value);
    const BhResult bh = benjamini_hochberg(ps, alpha);
    out.bh_threshold = bh.threshold;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
      PixelTestResult& r = out.pixels[i];
      r.rejected = bh.rejected[i] != 0;
      if (r.rejected) {
        ++out.rejected_count;
        r.sign = r.z > 0.0 ? DeviationSign::higher : DeviationSign::lower;
      }
    }
    out.rejected_fraction =
        static_cast<double>(out.rejected_count) / static_cast<double>(out.tested_count);
  }
  return out;
}

}  // namespace eemix
