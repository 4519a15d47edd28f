// eemix command line tool.
//
// Subcommands:
//   simulate   write a synthetic study (EEM CSVs + manifest) from the demo design
//   variation  replicate correlations, scale factors, noise and SNR tables
//   mixtest    per-pixel linear-mixing z tests with BH control
//   unmix      NNLS abundance estimates over all replicate combinations
//   report     run everything and write a machine-readable run summary
//
// Exit codes: 0 success, 2 validation/usage error, 1 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eemix/io/eem_csv.hpp"
#include "eemix/io/manifest.hpp"
#include "eemix/io/reports.hpp"
#include "eemix/mixtest.hpp"
#include "eemix/samples.hpp"
#include "eemix/synth.hpp"
#include "eemix/unmix.hpp"
#include "eemix/variation.hpp"
#include "eemix/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string mask_rule_label(const eemix::MaskRule& rule) {
  if (rule.offset_nm == 0.0) return "strictly_longer";
  return "offset_band:" + eemix::io::format_double(rule.offset_nm);
}

std::vector<std::string> header_comments(const std::string& command,
                                         const eemix::io::Dataset& ds, double alpha) {
  return {std::string("eemix ") + eemix::kVersion + " " + command,
          "dataset=" + ds.dataset_id + " mask=" + mask_rule_label(ds.options.mask_rule) +
              " epsilon=" + eemix::io::format_double(ds.options.epsilon) +
              " alpha=" + eemix::io::format_double(alpha) +
              " bins=" + std::to_string(ds.options.bins) +
              " seed=" + std::to_string(ds.options.seed)};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw eemix::ComputeError("cannot create output directory '" + dir.string() + "'");
}

std::vector<const eemix::ReplicateSet*> all_samples(const eemix::io::Dataset& ds) {
  std::vector<const eemix::ReplicateSet*> out;
  for (const auto& s : ds.endmembers) out.push_back(&s);
  for (const auto& s : ds.mixtures) out.push_back(&s);
  return out;
}

// ---------------------------------------------------------------------------
// variation
// ---------------------------------------------------------------------------

eemix::VariationAnalysis run_variation(const eemix::io::Dataset& ds, const fs::path& out_dir,
                                       const std::string& command) {
  std::vector<eemix::ReplicateSet> samples;
  for (const auto* s : all_samples(ds)) samples.push_back(*s);
  if (samples.empty()) throw eemix::ValidationError("variation: dataset has no samples");

  const eemix::VariationOptions options{ds.options.epsilon};
  const eemix::VariationAnalysis analysis = eemix::analyze_variation(samples, options);

  auto comments = header_comments(command, ds, ds.options.alpha);
  comments.push_back("pooled_sigma_a=" + eemix::io::format_double(analysis.pooled_sigma_a));

  eemix::io::write_replicate_variation(out_dir / "replicate_variation.tsv", analysis, comments);
  eemix::io::write_noise_snr(out_dir / "noise_snr.tsv", analysis, comments);
  for (const auto& sample : samples) {
    const auto curve = eemix::mean_sd_curve(sample, ds.options.bins);
    eemix::io::write_mean_sd_curve(out_dir / ("meansd_" + sample.sample_id() + ".tsv"), curve,
                                   comments);
  }
  std::cout << "variation: " << samples.size()
            << " samples, pooled sigma_a = " << eemix::io::format_double(analysis.pooled_sigma_a)
            << "\n";
  return analysis;
}

// ---------------------------------------------------------------------------
// mixtest
// ---------------------------------------------------------------------------

std::vector<eemix::io::MixtestSummaryRow> run_mixtest_command(const eemix::io::Dataset& ds,
                                                              const fs::path& out_dir,
                                                              double alpha,
                                                              const std::string& command) {
  if (ds.endmembers.empty()) throw eemix::ValidationError("mixtest: dataset has no endmembers");
  if (ds.mixtures.empty()) throw eemix::ValidationError("mixtest: dataset has no mixtures");

  std::vector<eemix::ReplicateSet> samples;
  for (const auto* s : all_samples(ds)) samples.push_back(*s);
  const eemix::VariationOptions voptions{ds.options.epsilon};
  const eemix::VariationAnalysis analysis = eemix::analyze_variation(samples, voptions);

  std::map<std::string, double> sigma_e2;
  for (const auto& rep : analysis.samples)
    sigma_e2[rep.sample_id] = rep.noise.sigma_e * rep.noise.sigma_e;
  const double sigma_a2 = analysis.pooled_sigma_a * analysis.pooled_sigma_a;

  std::vector<double> sigma_e2_endmembers;
  for (const auto& e : ds.endmembers) sigma_e2_endmembers.push_back(sigma_e2.at(e.sample_id()));

  const auto comments = header_comments(command, ds, alpha);
  std::vector<eemix::io::MixtestSummaryRow> rows;
  for (const auto& mixture : ds.mixtures) {
    eemix::TestInputs inputs{mixture, ds.endmembers, sigma_a2, sigma_e2.at(mixture.sample_id()),
                             sigma_e2_endmembers};
    const eemix::MixtestResult result = eemix::run_mixtest(inputs, alpha);

    const std::string& id = mixture.sample_id();
    eemix::io::write_pixel_tests(out_dir / ("pixel_tests_" + id + ".csv"), result, comments);
    eemix::io::write_deviation_grid(out_dir / ("deviation_grid_" + id + ".csv"),
                                    mixture.layout(), result, comments);
    eemix::io::write_pvalue_scatter(out_dir / ("pvalue_scatter_" + id + ".tsv"), result,
                                    comments);

    eemix::io::MixtestSummaryRow row;
    row.mixture_id = id;
    row.tested = result.tested_count;
    row.untestable = result.untestable.size();
    row.rejected = result.rejected_count;
    row.fraction = result.rejected_fraction;
    row.threshold = result.bh_threshold;
    rows.push_back(row);
    std::cout << "mixtest " << id << ": rejected " << result.rejected_count << "/"
              << result.tested_count << " (fraction "
              << eemix::io::format_double(result.rejected_fraction) << ", "
              << result.untestable.size() << " untestable)\n";
  }
  eemix::io::write_mixtest_summary(out_dir / "mixtest_summary.tsv", rows, comments);
  return rows;
}

// ---------------------------------------------------------------------------
// unmix
// ---------------------------------------------------------------------------

std::vector<eemix::UnmixRun> run_unmix_command(const eemix::io::Dataset& ds,
                                               const fs::path& out_dir, std::size_t max_combos,
                                               const std::string& command) {
  if (ds.endmembers.empty()) throw eemix::ValidationError("unmix: dataset has no endmembers");
  if (ds.mixtures.empty()) throw eemix::ValidationError("unmix: dataset has no mixtures");

  eemix::UnmixOptions options;
  options.max_combos = max_combos;
  options.seed = ds.options.seed;

  const auto comments = header_comments(command, ds, ds.options.alpha);
  std::vector<eemix::UnmixRun> runs;
  for (const auto& mixture : ds.mixtures) {
    eemix::UnmixRun run = eemix::unmix_all_combos(mixture, ds.endmembers, options);
    eemix::io::write_combos(out_dir / ("combos_" + run.mixture_id + ".tsv"), run, comments);
    std::cout << "unmix " << run.mixture_id << ": " << run.combos.size() << " combos";
    if (run.failed_combos > 0) std::cout << " (" << run.failed_combos << " failed)";
    std::cout << "\n";
    runs.push_back(std::move(run));
  }
  eemix::io::write_abundance_summary(out_dir / "abundance_summary.tsv", runs, comments);
  return runs;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void run_simulate(const fs::path& out_dir, std::uint64_t seed, double sigma_a, double sigma_e,
                  std::size_t n) {
  ensure_dir(out_dir);
  const eemix::WavelengthAxis excitation = eemix::demo_excitation_axis();
  const eemix::WavelengthAxis emission = eemix::demo_emission_axis();
  const eemix::MaskGrid mask = eemix::build_mask(excitation, emission);
  const std::vector<eemix::EemGrid> surfaces =
      eemix::demo_endmember_surfaces(excitation, emission, mask);
  const eemix::MixtureDesign design = eemix::demo_design();

  const std::size_t sample_count = design.endmember_count() + design.mixtures().size();
  std::vector<eemix::NoiseSpec> specs;
  for (std::size_t k = 0; k < sample_count; ++k) {
    eemix::NoiseSpec spec;
    spec.sigma_a = sigma_a;
    spec.sigma_e = sigma_e;
    spec.seed = eemix::detail::substream_seed(seed, k);
    specs.push_back(spec);
  }

  const eemix::Scene scene = eemix::generate_mixture_scene(design, surfaces, n, specs);

  ordered_json files = ordered_json::array();
  auto write_set = [&](const eemix::ReplicateSet& set) {
    for (std::size_t r = 0; r < set.replicate_count(); ++r) {
      const std::string name = set.sample_id() + "_r" + std::to_string(r + 1) + ".csv";
      const std::vector<std::string> comments = {
          std::string("eemix ") + eemix::kVersion + " simulate seed=" + std::to_string(seed) +
          " sample=" + set.sample_id() + " replicate=" + std::to_string(r + 1)};
      eemix::io::write_eem_csv(out_dir / name, set.replicates()[r], comments);
      files.push_back({{"path", name}, {"sample_id", set.sample_id()}, {"replicate", r + 1}});
    }
  };
  for (const auto& set : scene.endmembers) write_set(set);
  for (const auto& set : scene.mixtures) write_set(set);

  ordered_json samples = ordered_json::array();
  for (const auto& id : design.endmember_ids())
    samples.push_back({{"id", id}, {"role", "endmember"}});
  for (const auto& mix : design.mixtures())
    samples.push_back({{"id", mix.mixture_id}, {"role", "mixture"}, {"weights", mix.weights}});

  ordered_json manifest = {
      {"dataset", "synthetic-demo"},
      {"options",
       {{"mask_rule", "strictly_longer"},
        {"epsilon", 1e-6},
        {"alpha", 0.05},
        {"bins", 50},
        {"seed", seed}}},
      {"samples", samples},
      {"files", files}};

  std::ofstream out(out_dir / "manifest.json", std::ios::binary);
  if (!out) throw eemix::ComputeError("cannot write manifest");
  out << manifest.dump(2) << "\n";
  std::cout << "simulate: wrote " << files.size() << " EEM files and manifest.json to "
            << out_dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void run_report(const eemix::io::Dataset& ds, const fs::path& out_dir, double alpha) {
  const eemix::VariationAnalysis analysis = run_variation(ds, out_dir, "report");
  const auto mixtest_rows = run_mixtest_command(ds, out_dir, alpha, "report");
  const auto unmix_runs = run_unmix_command(ds, out_dir, 0, "report");

  ordered_json summary;
  summary["tool"] = "eemix";
  summary["version"] = eemix::kVersion;
  summary["command"] = "report";
  summary["dataset"] = ds.dataset_id;
  summary["options"] = {{"mask_rule", mask_rule_label(ds.options.mask_rule)},
                        {"epsilon", ds.options.epsilon},
                        {"alpha", alpha},
                        {"bins", ds.options.bins},
                        {"seed", ds.options.seed}};
  summary["pooled_sigma_a"] = analysis.pooled_sigma_a;

  ordered_json variation = ordered_json::array();
  for (const auto& rep : analysis.samples) {
    ordered_json row;
    row["sample"] = rep.sample_id;
    row["sigma_a"] = rep.scale.sigma_a;
    row["sigma_e"] = rep.noise.sigma_e;
    if (rep.snr) row["snr"] = *rep.snr;
    variation.push_back(row);
  }
  summary["variation"] = variation;

  ordered_json mixtest = ordered_json::array();
  for (const auto& row : mixtest_rows)
    mixtest.push_back({{"mixture", row.mixture_id},
                       {"tested", row.tested},
                       {"untestable", row.untestable},
                       {"rejected", row.rejected},
                       {"fraction", row.fraction},
                       {"bh_threshold", row.threshold}});
  summary["mixtest"] = mixtest;

  ordered_json unmix = ordered_json::array();
  for (const auto& run : unmix_runs) {
    ordered_json row;
    row["mixture"] = run.mixture_id;
    row["combos"] = run.combos.size();
    row["failed_combos"] = run.failed_combos;
    ordered_json estimates = ordered_json::array();
    for (const auto& e : run.summary) {
      ordered_json est;
      est["endmember"] = e.endmember_id;
      if (e.true_weight) est["true_weight"] = *e.true_weight;
      est["mean"] = e.mean;
      if (e.sd) est["sd"] = *e.sd;
      estimates.push_back(est);
    }
    row["estimates"] = estimates;
    unmix.push_back(row);
  }
  summary["unmix"] = unmix;

  std::ofstream out(out_dir / "run_summary.json", std::ios::binary);
  if (!out) throw eemix::ComputeError("cannot write run summary");
  out << summary.dump(2) << "\n";
  std::cout << "report: wrote run_summary.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluorescence EEM variation, linear-mixing tests, and NNLS unmixing"};
  app.require_subcommand(1);

  std::string manifest_path;
  std::string out_path;
  double alpha = -1.0;  // negative means "use the manifest option"
  std::size_t max_combos = 0;

  std::uint64_t sim_seed = 42;
  double sim_sigma_a = 0.04;
  double sim_sigma_e = 0.01;
  std::size_t sim_n = 3;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "Path to the study manifest (JSON)")
        ->required();
    cmd->add_option("--out", out_path, "Output directory")->required();
  };

  CLI::App* variation_cmd = app.add_subcommand("variation", "Experimental variation tables");
  add_common(variation_cmd);

  CLI::App* mixtest_cmd =
      app.add_subcommand("mixtest", "Per-pixel linear-mixing tests with FDR control");
  add_common(mixtest_cmd);
  mixtest_cmd->add_option("--alpha", alpha, "False discovery rate (default: manifest option)");

  CLI::App* unmix_cmd = app.add_subcommand("unmix", "Resampled NNLS abundance estimates");
  add_common(unmix_cmd);
  unmix_cmd->add_option("--max-combos", max_combos,
                        "Cap on replicate combinations (0 = all; capped runs subsample "
                        "uniformly with the manifest seed)");

  CLI::App* report_cmd = app.add_subcommand("report", "All analyses plus run_summary.json");
  add_common(report_cmd);
  report_cmd->add_option("--alpha", alpha, "False discovery rate (default: manifest option)");

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Write a synthetic demo study (EEM CSVs + manifest)");
  simulate_cmd->add_option("--out", out_path, "Output directory")->required();
  simulate_cmd->add_option("--seed", sim_seed, "Master seed");
  simulate_cmd->add_option("--sigma-a", sim_sigma_a, "Replicate scale variation (sd)");
  simulate_cmd->add_option("--sigma-e", sim_sigma_e, "Pixel measurement variation (sd)");
  simulate_cmd->add_option("--n", sim_n, "Replicates per sample");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate_cmd->parsed()) {
      run_simulate(out_path, sim_seed, sim_sigma_a, sim_sigma_e, sim_n);
      return 0;
    }
    const eemix::io::Dataset ds = eemix::io::load_dataset(fs::path(manifest_path));
    const double alpha_used = alpha >= 0.0 ? alpha : ds.options.alpha;
    if (!(alpha_used > 0.0 && alpha_used < 1.0))
      throw eemix::ValidationError("alpha must lie in (0, 1)");
    ensure_dir(out_path);

    if (variation_cmd->parsed()) {
      run_variation(ds, out_path, "variation");
    } else if (mixtest_cmd->parsed()) {
      run_mixtest_command(ds, out_path, alpha_used, "mixtest");
    } else if (unmix_cmd->parsed()) {
      run_unmix_command(ds, out_path, max_combos, "unmix");
    } else if (report_cmd->parsed()) {
      run_report(ds, out_path, alpha_used);
    }
    return 0;
  } catch (const eemix::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
