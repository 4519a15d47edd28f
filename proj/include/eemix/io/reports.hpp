#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/io/format.hpp"
#include "eemix/mixtest.hpp"
#include "eemix/unmix.hpp"
#include "eemix/variation.hpp"

namespace eemix::io {

namespace detail_rep {

inline std::ofstream open_output(const std::filesystem::path& path,
                                 std::span<const std::string> comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write '" + path.string() + "'");
  for (const std::string& c : comments) out << "# " << c << "\n";
  return out;
}

inline std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace detail_rep

// Replicate-level table: per sample, the correlation of each replicate with
// the sample mean, the per-replicate scale factors, and their spread.
inline void write_replicate_variation(const std::filesystem::path& path,
                                      const VariationAnalysis& analysis,
                                      std::span<const std::string> comments) {
  std::size_t max_n = 0;
  for (const auto& rep : analysis.samples)
    max_n = std::max(max_n, rep.correlations.size());

  auto out = detail_rep::open_output(path, comments);
  out << "sample";
  for (std::size_t i = 1; i <= max_n; ++i) out << "\trho_" << i;
  for (std::size_t i = 1; i <= max_n; ++i) out << "\tscale_" << i;
  out << "\tsigma_a\texcluded_pixels\n";
  for (const auto& rep : analysis.samples) {
    out << rep.sample_id;
    for (std::size_t i = 0; i < max_n; ++i) {
      out << '\t';
      if (i < rep.correlations.size()) out << detail_rep::opt_str(rep.correlations[i]);
    }
    for (std::size_t i = 0; i < max_n; ++i) {
      out << '\t';
      if (i < rep.scale.factors.size()) out << format_double(rep.scale.factors[i]);
    }
    out << '\t' << format_double(rep.scale.sigma_a) << '\t' << rep.scale.excluded_pixels << '\n';
  }
}

// Noise table: measurement-noise scale (both as sd and variance), SNR, and
// bookkeeping counts per sample.
inline void write_noise_snr(const std::filesystem::path& path, const VariationAnalysis& analysis,
                            std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "sample\tsigma_e\tsigma_e_sq\tresidual_sd\tsnr\texcluded_pixels\n";
  for (const auto& rep : analysis.samples) {
    out << rep.sample_id << '\t' << format_double(rep.noise.sigma_e) << '\t'
        << format_double(rep.noise.sigma_e * rep.noise.sigma_e) << '\t'
        << format_double(rep.noise.residual_sd) << '\t' << detail_rep::opt_str(rep.snr) << '\t'
        << rep.noise.excluded_pixels << '\n';
  }
}

inline void write_mean_sd_curve(const std::filesystem::path& path,
                                std::span<const MeanSdPoint> curve,
                                std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "bin\tmean\tsd\n";
  for (std::size_t b = 0; b < curve.size(); ++b)
    out << b + 1 << '\t' << format_double(curve[b].mean) << '\t' << format_double(curve[b].sd)
        << '\n';
}

inline const char* sign_label(DeviationSign s) {
  switch (s) {
    case DeviationSign::lower:
      return "lower";
    case DeviationSign::higher:
      return "higher";
    default:
      return "none";
  }
}

// Per-pixel test results, tested and untestable rows together, flagged by a
// status column so the rejection denominator stays unambiguous.
inline void write_pixel_tests(const std::filesystem::path& path, const MixtestResult& result,
                              std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "excitation_nm,emission_nm,status,mixture_mean,predicted_mean,sigma,z,p,rejected,sign\n";
  for (const auto& r : result.pixels) {
    out << format_double(r.pixel.excitation_nm) << ',' << format_double(r.pixel.emission_nm)
        << ",tested," << format_double(r.mixture_mean) << ',' << format_double(r.predicted_mean)
        << ',' << format_double(r.sigma) << ',' << format_double(r.z) << ','
        << format_double(r.p_value) << ',' << (r.rejected ? 1 : 0) << ',' << sign_label(r.sign)
        << '\n';
  }
  for (const auto& u : result.untestable) {
    out << format_double(u.pixel.excitation_nm) << ',' << format_double(u.pixel.emission_nm)
        << ",untestable," << format_double(u.mixture_mean) << ','
        << format_double(u.predicted_mean) << ",,,,,\n";
  }
}

// Deviation map in the EEM CSV shape: 1 where the mixture fluoresces higher
// than predicted, -1 lower, 0 tested without rejection; blank cells are
// masked-out or untestable pixels.
inline void write_deviation_grid(const std::filesystem::path& path, const EemGrid& layout,
                                 const MixtestResult& result,
                                 std::span<const std::string> comments) {
  const WavelengthAxis& ex = layout.excitation();
  const WavelengthAxis& em = layout.emission();
  Grid2D<int> codes(em.count(), ex.count(), 2);  // 2 marks "no value"

  auto locate = [&](const PixelLocation& p) {
    const std::size_t j =
        static_cast<std::size_t>(std::llround((p.excitation_nm - ex.start_nm()) / ex.step_nm()));
    const std::size_t i =
        static_cast<std::size_t>(std::llround((p.emission_nm - em.start_nm()) / em.step_nm()));
    return std::pair<std::size_t, std::size_t>(i, j);
  };
  for (const auto& r : result.pixels) {
    const auto [i, j] = locate(r.pixel);
    codes(i, j) = !r.rejected ? 0 : (r.sign == DeviationSign::higher ? 1 : -1);
  }

  auto out = detail_rep::open_output(path, comments);
  out << "em\\ex";
  for (std::size_t j = 0; j < ex.count(); ++j) out << ',' << format_double(ex[j]);
  out << '\n';
  for (std::size_t i = 0; i < em.count(); ++i) {
    out << format_double(em[i]);
    for (std::size_t j = 0; j < ex.count(); ++j) {
      out << ',';
      if (codes(i, j) != 2) out << codes(i, j);
    }
    out << '\n';
  }
}

// Evidence-versus-signal table: log10 p against the mixture mean per pixel.
inline void write_pvalue_scatter(const std::filesystem::path& path, const MixtestResult& result,
                                 std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "excitation_nm\temission_nm\tmean_fluorescence\tlog10_p\n";
  for (const auto& r : result.pixels)
    out << format_double(r.pixel.excitation_nm) << '\t' << format_double(r.pixel.emission_nm)
        << '\t' << format_double(r.mixture_mean) << '\t' << format_double(std::log10(r.p_value))
        << '\n';
}

struct MixtestSummaryRow {
  std::string mixture_id;
  std::size_t tested = 0;
  std::size_t untestable = 0;
  std::size_t rejected = 0;
  double fraction = 0.0;
  double threshold = 0.0;
};

inline void write_mixtest_summary(const std::filesystem::path& path,
                                  std::span<const MixtestSummaryRow> rows,
                                  std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "mixture\ttested\tuntestable\trejected\tfraction\tbh_threshold\n";
  for (const auto& r : rows)
    out << r.mixture_id << '\t' << r.tested << '\t' << r.untestable << '\t' << r.rejected << '\t'
        << format_double(r.fraction) << '\t' << format_double(r.threshold) << '\n';
}

// Abundance summary in long form: one row per mixture and endmember.
inline void write_abundance_summary(const std::filesystem::path& path,
                                    std::span<const UnmixRun> runs,
                                    std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "mixture\tendmember\ttrue_weight\tmean\tsd\tabs_bias\tcombos_used\tfailed_combos\n";
  for (const auto& run : runs)
    for (const auto& row : run.summary)
      out << run.mixture_id << '\t' << row.endmember_id << '\t'
          << detail_rep::opt_str(row.true_weight) << '\t' << format_double(row.mean) << '\t'
          << detail_rep::opt_str(row.sd) << '\t' << detail_rep::opt_str(row.bias) << '\t'
          << row.combos_used << '\t' << run.failed_combos << '\n';
}

// Every resampled estimate, one row per replicate combination.
inline void write_combos(const std::filesystem::path& path, const UnmixRun& run,
                         std::span<const std::string> comments) {
  auto out = detail_rep::open_output(path, comments);
  out << "combo\tmixture_replicate";
  for (const auto& id : run.endmember_ids) out << "\trep_" << id;
  for (const auto& id : run.endmember_ids) out << "\tb_" << id;
  out << "\tresidual_norm\titerations\tconverged\n";
  for (std::size_t c = 0; c < run.combos.size(); ++c) {
    const ComboEstimate& combo = run.combos[c];
    out << c + 1 << '\t' << combo.replicate_choice[0] + 1;
    for (std::size_t k = 1; k < combo.replicate_choice.size(); ++k)
      out << '\t' << combo.replicate_choice[k] + 1;
    for (double b : combo.abundances) out << '\t' << format_double(b);
    out << '\t' << format_double(combo.residual_norm) << '\t' << combo.iterations << '\t'
        << (combo.converged ? 1 : 0) << '\n';
  }
}

}  // namespace eemix::io
