#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/samples.hpp"
#include "eemix/stats.hpp"

namespace eemix {

struct VariationOptions {
  // Pixels whose across-replicate mean is at or below this floor (QSU) are
  // excluded from ratio-based estimators and counted, never imputed.
  double epsilon = 1e-6;
};

// Per-replicate multiplicative scale factors and their spread. factors[i] is
// the across-pixel average ratio of replicate i to the sample mean; sigma_a
// is the sample standard deviation (denominator n-1) of the factors.
struct ScaleEstimates {
  std::vector<double> factors;
  double sigma_a = 0.0;
  std::size_t excluded_pixels = 0;
};

// Pixel-level multiplicative residuals and the measurement-noise scale.
// residuals is n x p with NaN at excluded pixels. sigma_e is the pooled
// residual spread rescaled by sqrt(N / (N - p_included)), which undoes the
// shrinkage from estimating each pixel mean; residual_sd is the plain sample
// standard deviation (denominator N-1) of the same residuals.
struct NoiseEstimates {
  Grid2D<double> residuals;
  double sigma_e = 0.0;
  double residual_sd = 0.0;
  std::size_t excluded_pixels = 0;
};

struct SampleVariationReport {
  std::string sample_id;
  std::vector<std::optional<double>> correlations;
  ScaleEstimates scale;
  NoiseEstimates noise;
  std::optional<double> snr;
};

// Pearson correlation of each replicate against the sample pixel mean.
// Constant inputs yield an undefined marker, not a failure.
inline std::vector<std::optional<double>> replicate_correlations(const ReplicateSet& set) {
  if (set.replicate_count() < 2)
    throw ValidationError("replicate correlations: need at least 2 replicates");
  const VectorizedEem mean = pixel_mean(set);
  if (mean.size() < 2) throw ValidationError("replicate correlations: need at least 2 pixels");
  std::vector<std::optional<double>> out;
  out.reserve(set.replicate_count());
  for (const EemGrid& rep : set.replicates()) {
    const VectorizedEem v = vectorize(rep);
    out.push_back(detail::pearson(v.values, mean.values));
  }
  return out;
}

inline ScaleEstimates estimate_scale_factors(const ReplicateSet& set,
                                             const VariationOptions& options = {}) {
  const std::size_t n = set.replicate_count();
  if (n < 2) throw ValidationError("scale factors: need at least 2 replicates");
  const VectorizedEem mean = pixel_mean(set);

  std::vector<std::size_t> included;
  included.reserve(mean.size());
  for (std::size_t k = 0; k < mean.size(); ++k)
    if (mean.values[k] > options.epsilon) included.push_back(k);
  if (included.empty()) throw ComputeError("scale factors: no usable pixels");

  ScaleEstimates out;
  out.excluded_pixels = mean.size() - included.size();
  out.factors.reserve(n);
  for (const EemGrid& rep : set.replicates()) {
    const VectorizedEem v = vectorize(rep);
    double acc = 0.0;
    for (std::size_t k : included) acc += v.values[k] / mean.values[k];
    out.factors.push_back(acc / static_cast<double>(included.size()));
  }
  out.sigma_a = detail::sample_sd(out.factors).value();
  return out;
}

// Root mean square of the per-sample sigma_a values: the natural pooling of
// variances across samples with equal replicate counts.
inline double pool_sigma_a(std::span<const ScaleEstimates> estimates) {
  if (estimates.empty()) throw ValidationError("pool sigma_a: empty input");
  double acc = 0.0;
  for (const auto& e : estimates) acc += e.sigma_a * e.sigma_a;
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

inline NoiseEstimates estimate_sigma_e(const ReplicateSet& set, const ScaleEstimates& scale,
                                       const VariationOptions& options = {}) {
  const std::size_t n = set.replicate_count();
  if (n < 2) throw ValidationError("sigma_e: need at least 2 replicates");
  if (scale.factors.size() != n) throw ValidationError("sigma_e: scale factor count mismatch");
  for (double a : scale.factors)
    if (!(a > 0.0)) throw ValidationError("sigma_e: scale factors must be positive");

  const VectorizedEem mean = pixel_mean(set);
  const std::size_t p = mean.size();

  NoiseEstimates out;
  out.residuals = Grid2D<double>(n, p, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::size_t> included;
  included.reserve(p);
  for (std::size_t k = 0; k < p; ++k)
    if (mean.values[k] > options.epsilon) included.push_back(k);
  out.excluded_pixels = p - included.size();
  if (included.empty()) throw ComputeError("sigma_e: no usable pixels");

  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const VectorizedEem v = vectorize(set.replicates()[i]);
    for (std::size_t k : included) {
      const double r = v.values[k] / (scale.factors[i] * mean.values[k]);
      out.residuals(i, k) = r;
      sum += r;
    }
  }
  const std::size_t count = n * included.size();
  const double grand_mean = sum / static_cast<double>(count);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k : included) {
      const double d = out.residuals(i, k) - grand_mean;
      ss += d * d;
    }
  out.residual_sd = std::sqrt(ss / static_cast<double>(count - 1));
  out.sigma_e = std::sqrt(ss / static_cast<double>(count - included.size()));
  return out;
}

// Signal-to-noise ratio of the multiplicative model,
// mu^2 / Var(y) = 1 / ((sigma_a^2 + 1)(sigma_e^2 + 1) - 1).
inline double snr(double sigma_a2, double sigma_e2) {
  if (sigma_a2 < 0.0 || sigma_e2 < 0.0) throw ValidationError("snr: negative variance");
  if (sigma_a2 == 0.0 && sigma_e2 == 0.0) throw ComputeError("snr: zero noise model");
  return 1.0 / ((sigma_a2 + 1.0) * (sigma_e2 + 1.0) - 1.0);
}

struct MeanSdPoint {
  double mean;
  double sd;
};

// Per-pixel replicate mean and sd, grouped into equal-count quantile bins by
// mean; each row is the bin average of both. Bin b covers sorted positions
// [b*p/bins, (b+1)*p/bins), ties in the sort broken by pixel index.
inline std::vector<MeanSdPoint> mean_sd_curve(const ReplicateSet& set, std::size_t bins = 50) {
  const std::size_t n = set.replicate_count();
  if (n < 2) throw ValidationError("mean-sd curve: need at least 2 replicates");
  std::vector<VectorizedEem> reps;
  reps.reserve(n);
  for (const EemGrid& g : set.replicates()) reps.push_back(vectorize(g));
  const std::size_t p = reps[0].size();
  if (bins < 1 || bins > p) throw ValidationError("mean-sd curve: bins must be in [1, pixel count]");

  std::vector<double> means(p), sds(p), buf(n);
  for (std::size_t k = 0; k < p; ++k) {
    for (std::size_t i = 0; i < n; ++i) buf[i] = reps[i].values[k];
    means[k] = detail::mean(buf);
    sds[k] = detail::sample_sd(buf).value();
  }

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (means[a] != means[b]) return means[a] < means[b];
    return a < b;
  });

  std::vector<MeanSdPoint> curve;
  curve.reserve(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * p / bins;
    const std::size_t hi = (b + 1) * p / bins;
    double am = 0.0, as = 0.0;
    for (std::size_t t = lo; t < hi; ++t) {
      am += means[order[t]];
      as += sds[order[t]];
    }
    const double cnt = static_cast<double>(hi - lo);
    curve.push_back({am / cnt, as / cnt});
  }
  return curve;
}

struct VariationAnalysis {
  std::vector<SampleVariationReport> samples;
  double pooled_sigma_a = 0.0;
};

// Full variation pass over a study: per-sample correlations, scale factors
// and noise, one pooled sigma_a, and per-sample SNR computed from the pooled
// scale variance plus the sample's own measurement variance.
inline VariationAnalysis analyze_variation(const std::vector<ReplicateSet>& samples,
                                           const VariationOptions& options = {}) {
  if (samples.empty()) throw ValidationError("variation analysis: no samples");
  VariationAnalysis out;
  std::vector<ScaleEstimates> scales;
  scales.reserve(samples.size());
  for (const ReplicateSet& set : samples) {
    SampleVariationReport rep;
    rep.sample_id = set.sample_id();
    rep.correlations = replicate_correlations(set);
    rep.scale = estimate_scale_factors(set, options);
    rep.noise = estimate_sigma_e(set, rep.scale, options);
    scales.push_back(rep.scale);
    out.samples.push_back(std::move(rep));
  }
  out.pooled_sigma_a = pool_sigma_a(scales);
  const double sa2 = out.pooled_sigma_a * out.pooled_sigma_a;
  for (auto& rep : out.samples) {
    const double se2 = rep.noise.sigma_e * rep.noise.sigma_e;
    if (sa2 == 0.0 && se2 == 0.0)
      rep.snr = std::nullopt;
    else
      rep.snr = snr(sa2, se2);
  }
  return out;
}

}  // namespace eemix
