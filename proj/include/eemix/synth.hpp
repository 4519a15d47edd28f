#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/samples.hpp"
#include "eemix/vectorized.hpp"

namespace eemix {

// Distribution of the positive, mean-1 noise terms. Only the first two
// moments are fixed by the model; the family is a generator choice.
//   lognormal: exp(N(-w^2/2, w^2)) with w^2 = ln(1 + sigma^2), mean exactly 1,
//              sd exactly sigma.
//   truncated_normal: N(1, sigma^2) redrawn until positive; parameterized by
//              the pre-truncation moments (negligible truncation mass at the
//              sigma values in scope).
enum class NoiseLaw { lognormal, truncated_normal };

struct NoiseSpec {
  double sigma_a = 0.0;
  double sigma_e = 0.0;
  NoiseLaw law = NoiseLaw::lognormal;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// One decorrelated seed per (stream index) so parallel generation per
// replicate is schedule-independent.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t s = master ^ (0xD1B54A32D192ED03ull * (index + 1));
  return splitmix64(s);
}

// Deterministic normal stream: mt19937_64 (algorithm fixed by the standard),
// uniforms u = ((x >> 11) + 1) * 2^-53 in (0, 1], Marsaglia polar transform.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline double positive_mean_one_draw(NormalStream& stream, double sigma, NoiseLaw law) {
  if (sigma == 0.0) return 1.0;
  if (law == NoiseLaw::lognormal) {
    const double w2 = std::log1p(sigma * sigma);
    return std::exp(-0.5 * w2 + std::sqrt(w2) * stream.normal());
  }
  double x;
  do {
    x = 1.0 + sigma * stream.normal();
  } while (!(x > 0.0));
  return x;
}

inline void validate_spec(const NoiseSpec& spec) {
  if (!(spec.sigma_a >= 0.0) || !std::isfinite(spec.sigma_a) || !(spec.sigma_e >= 0.0) ||
      !std::isfinite(spec.sigma_e))
    throw ValidationError("noise spec: sigma values must be finite and >= 0");
}

}  // namespace detail

// Draw n replicate scans y[i][j] = a[i] * mu[j] * e[i][j] from a true surface.
// One scale factor per replicate, one noise term per pixel; replicate i uses
// substream i of spec.seed, so output is reproducible and independent of any
// parallel schedule.
inline ReplicateSet generate_replicates(const EemGrid& mu, std::size_t n, const NoiseSpec& spec,
                                        std::string sample_id = "synthetic") {
  detail::validate_spec(spec);
  if (n < 1) throw ValidationError("generate replicates: n must be >= 1");
  detail::for_each_valid_pixel(mu.mask(), [&](std::size_t i, std::size_t j) {
    if (!(mu.at(i, j) >= 0.0))
      throw ValidationError("generate replicates: true surface must be >= 0");
  });

  std::vector<EemGrid> replicates;
  replicates.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    detail::NormalStream stream(detail::substream_seed(spec.seed, r));
    const double scale = detail::positive_mean_one_draw(stream, spec.sigma_a, spec.law);
    Grid2D<double> values(mu.emission().count(), mu.excitation().count(),
                          std::numeric_limits<double>::quiet_NaN());
    detail::for_each_valid_pixel(mu.mask(), [&](std::size_t i, std::size_t j) {
      const double e = detail::positive_mean_one_draw(stream, spec.sigma_e, spec.law);
      values(i, j) = scale * mu.at(i, j) * e;
    });
    replicates.emplace_back(mu.excitation(), mu.emission(), std::move(values), mu.mask());
  }
  return ReplicateSet(std::move(sample_id), std::move(replicates));
}

struct Scene {
  std::vector<ReplicateSet> endmembers;
  std::vector<ReplicateSet> mixtures;
};

// Build a full study scene. Each mixture's true surface is exactly the
// weighted sum of the endmember surfaces; an optional per-mixture offset
// field (canonical pixel order, length p) injects violations for power
// studies. specs holds one NoiseSpec per sample, endmembers first, then
// mixtures in design order.
inline Scene generate_mixture_scene(const MixtureDesign& design,
                                    const std::vector<EemGrid>& endmember_mus, std::size_t n,
                                    std::span<const NoiseSpec> specs,
                                    const std::vector<std::vector<double>>* mixture_offsets =
                                        nullptr) {
  const std::size_t s = design.endmember_count();
  if (endmember_mus.size() != s)
    throw ValidationError("mixture scene: endmember surface count does not match design");
  if (specs.size() != s + design.mixtures().size())
    throw ValidationError("mixture scene: need one noise spec per sample");
  for (std::size_t k = 1; k < s; ++k)
    if (!endmember_mus[k].same_layout(endmember_mus[0]))
      throw ValidationError("mixture scene: endmember surfaces differ in layout");
  if (mixture_offsets && mixture_offsets->size() != design.mixtures().size())
    throw ValidationError("mixture scene: offset field count does not match mixtures");

  const EemGrid& layout = endmember_mus[0];
  const std::size_t p = layout.valid_count();

  Scene scene;
  for (std::size_t k = 0; k < s; ++k)
    scene.endmembers.push_back(
        generate_replicates(endmember_mus[k], n, specs[k], design.endmember_ids()[k]));

  for (std::size_t m = 0; m < design.mixtures().size(); ++m) {
    const MixtureWeights& mix = design.mixtures()[m];
    const std::vector<double>* offsets = nullptr;
    if (mixture_offsets && !(*mixture_offsets)[m].empty()) {
      offsets = &(*mixture_offsets)[m];
      if (offsets->size() != p)
        throw ValidationError("mixture scene: offset field length does not match pixel count");
    }

    Grid2D<double> mu(layout.emission().count(), layout.excitation().count(),
                      std::numeric_limits<double>::quiet_NaN());
    std::size_t pixel = 0;
    detail::for_each_valid_pixel(layout.mask(), [&](std::size_t i, std::size_t j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < s; ++k) acc += mix.weights[k] * endmember_mus[k].at(i, j);
      if (offsets) acc += (*offsets)[pixel];
      mu(i, j) = acc;
      ++pixel;
    });
    EemGrid mu_grid(layout.excitation(), layout.emission(), std::move(mu), layout.mask());
    ReplicateSet set = generate_replicates(mu_grid, n, specs[s + m], mix.mixture_id);
    scene.mixtures.push_back(ReplicateSet(mix.mixture_id, set.replicates(), mix.weights));
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Built-in demo study: smooth surfaces plus the ten-sample design used by the
// simulate subcommand and the calibration tests.
// ---------------------------------------------------------------------------

struct SurfacePeak {
  double excitation_nm;
  double emission_nm;
  double excitation_width_nm;
  double emission_width_nm;
  double amplitude;
};

inline EemGrid gaussian_surface(const WavelengthAxis& excitation, const WavelengthAxis& emission,
                                const MaskGrid& mask, std::span<const SurfacePeak> peaks,
                                double baseline = 0.0) {
  Grid2D<double> values(emission.count(), excitation.count(),
                        std::numeric_limits<double>::quiet_NaN());
  detail::for_each_valid_pixel(mask, [&](std::size_t i, std::size_t j) {
    double v = baseline;
    for (const SurfacePeak& pk : peaks) {
      const double dx = (excitation[j] - pk.excitation_nm) / pk.excitation_width_nm;
      const double dy = (emission[i] - pk.emission_nm) / pk.emission_width_nm;
      v += pk.amplitude * std::exp(-0.5 * (dx * dx + dy * dy));
    }
    values(i, j) = v;
  });
  return EemGrid(excitation, emission, std::move(values), mask);
}

inline WavelengthAxis demo_excitation_axis() { return WavelengthAxis(240.0, 5.0, 43); }
inline WavelengthAxis demo_emission_axis() { return WavelengthAxis(300.0, 2.0, 151); }

// Three source profiles with a realistic spread of signal levels: one near
// the detection floor and two strong ones.
inline std::vector<EemGrid> demo_endmember_surfaces(const WavelengthAxis& excitation,
                                                    const WavelengthAxis& emission,
                                                    const MaskGrid& mask) {
  const SurfacePeak low[] = {{320.0, 420.0, 40.0, 60.0, 0.7}, {260.0, 460.0, 30.0, 50.0, 0.35}};
  const SurfacePeak humic[] = {{250.0, 450.0, 30.0, 55.0, 42.0}, {320.0, 415.0, 35.0, 50.0, 27.0}};
  const SurfacePeak waste[] = {{275.0, 340.0, 25.0, 35.0, 85.0}, {250.0, 430.0, 30.0, 55.0, 30.0}};
  std::vector<EemGrid> out;
  out.push_back(gaussian_surface(excitation, emission, mask, low, 0.05));
  out.push_back(gaussian_surface(excitation, emission, mask, humic, 0.5));
  out.push_back(gaussian_surface(excitation, emission, mask, waste, 0.8));
  return out;
}

// Ten-sample demo design: three pure sources and seven mixtures covering
// pairwise and three-way splits.
inline MixtureDesign demo_design() {
  std::vector<std::string> ids = {"s1", "s2", "s3"};
  std::vector<MixtureWeights> mixtures = {
      {"m1", {0.00, 0.50, 0.50}}, {"m2", {0.50, 0.50, 0.00}}, {"m3", {0.50, 0.00, 0.50}},
      {"m4", {0.25, 0.25, 0.50}}, {"m5", {0.25, 0.50, 0.25}}, {"m6", {0.50, 0.25, 0.25}},
      {"m7", {0.33, 0.33, 0.33}}};
  return MixtureDesign(std::move(ids), std::move(mixtures));
}

}  // namespace eemix
