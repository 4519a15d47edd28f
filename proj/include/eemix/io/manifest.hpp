#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eemix/error.hpp"
#include "eemix/io/eem_csv.hpp"
#include "eemix/samples.hpp"
#include "eemix/variation.hpp"

namespace eemix::io {

// Declarative description of a study: dataset id, analysis options, the
// sample roster (endmembers first defines the weight order), and one file
// record per replicate scan. JSON on disk.
struct ManifestOptions {
  MaskRule mask_rule;
  double epsilon = 1e-6;
  double alpha = 0.05;
  std::size_t bins = 50;
  std::uint64_t seed = 0;
};

struct ManifestSample {
  std::string id;
  bool is_mixture = false;
  std::vector<double> weights;  // mixtures only, one per endmember
};

struct ManifestFile {
  std::filesystem::path path;  // relative to the manifest directory
  std::string sample_id;
  std::size_t replicate = 0;  // 1-based
};

struct Manifest {
  std::string dataset;
  ManifestOptions options;
  std::vector<ManifestSample> samples;
  std::vector<ManifestFile> files;
  std::filesystem::path base_dir;
};

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest '" + path.string() + "': " + e.what());
  }

  Manifest m;
  m.base_dir = path.parent_path();
  try {
    m.dataset = j.at("dataset").get<std::string>();
    if (j.contains("options")) {
      const auto& o = j.at("options");
      if (o.contains("mask_rule")) {
        const std::string rule = o.at("mask_rule").get<std::string>();
        if (rule == "strictly_longer") {
          m.options.mask_rule = MaskRule::strictly_longer();
        } else if (rule == "offset_band") {
          m.options.mask_rule = MaskRule::offset_band(o.at("offset_nm").get<double>());
        } else {
          throw ValidationError("manifest: unknown mask_rule '" + rule + "'");
        }
      }
      if (o.contains("epsilon")) m.options.epsilon = o.at("epsilon").get<double>();
      if (o.contains("alpha")) m.options.alpha = o.at("alpha").get<double>();
      if (o.contains("bins")) m.options.bins = o.at("bins").get<std::size_t>();
      if (o.contains("seed")) m.options.seed = o.at("seed").get<std::uint64_t>();
    }
    for (const auto& js : j.at("samples")) {
      ManifestSample s;
      s.id = js.at("id").get<std::string>();
      const std::string role = js.at("role").get<std::string>();
      if (role == "mixture") {
        s.is_mixture = true;
        s.weights = js.at("weights").get<std::vector<double>>();
      } else if (role == "endmember") {
        if (js.contains("weights"))
          throw ValidationError("manifest: endmember '" + s.id + "' must not carry weights");
      } else {
        throw ValidationError("manifest: unknown role '" + role + "' for sample '" + s.id + "'");
      }
      m.samples.push_back(std::move(s));
    }
    for (const auto& jf : j.at("files")) {
      ManifestFile f;
      f.path = jf.at("path").get<std::string>();
      f.sample_id = jf.at("sample_id").get<std::string>();
      f.replicate = jf.at("replicate").get<std::size_t>();
      m.files.push_back(std::move(f));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

// A fully loaded study: per-sample replicate sets with the manifest's mask
// rule intersected into every grid's own blank-cell mask.
struct Dataset {
  std::string dataset_id;
  ManifestOptions options;
  std::vector<ReplicateSet> endmembers;
  std::vector<ReplicateSet> mixtures;  // weights attached
  std::optional<MixtureDesign> design;
};

inline Dataset load_dataset(const Manifest& manifest) {
  std::size_t endmember_count = 0;
  for (const auto& s : manifest.samples)
    if (!s.is_mixture) ++endmember_count;
  for (const auto& s : manifest.samples) {
    if (s.is_mixture && s.weights.size() != endmember_count)
      throw ValidationError("manifest: mixture '" + s.id + "' has " +
                            std::to_string(s.weights.size()) + " weights, expected " +
                            std::to_string(endmember_count));
  }

  // Group file records by sample, then demand replicate indices 1..n.
  std::map<std::string, std::vector<const ManifestFile*>> by_sample;
  for (const auto& f : manifest.files) {
    const bool known =
        std::any_of(manifest.samples.begin(), manifest.samples.end(),
                    [&](const ManifestSample& s) { return s.id == f.sample_id; });
    if (!known)
      throw ValidationError("manifest: file '" + f.path.string() +
                            "' references unknown sample '" + f.sample_id + "'");
    by_sample[f.sample_id].push_back(&f);
  }

  Dataset ds;
  ds.dataset_id = manifest.dataset;
  ds.options = manifest.options;

  std::vector<std::string> endmember_ids;
  std::vector<MixtureWeights> design_mixtures;

  for (const auto& sample : manifest.samples) {
    auto it = by_sample.find(sample.id);
    if (it == by_sample.end() || it->second.empty())
      throw ValidationError("manifest: sample '" + sample.id + "' has no files");
    auto records = it->second;
    std::sort(records.begin(), records.end(),
              [](const ManifestFile* a, const ManifestFile* b) {
                return a->replicate < b->replicate;
              });
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i]->replicate != i + 1)
        throw ValidationError("manifest: sample '" + sample.id +
                              "' replicate indices must be 1..n without gaps");

    std::vector<EemGrid> grids;
    grids.reserve(records.size());
    for (const ManifestFile* rec : records) {
      const std::filesystem::path full = manifest.base_dir / rec->path;
      EemGrid grid = parse_eem_csv(full);
      // Effective mask: the file's blank-cell mask intersected with the rule.
      MaskGrid rule_mask = build_mask(grid.excitation(), grid.emission(), manifest.options.mask_rule);
      Grid2D<double> values = grid.intensities();
      MaskGrid mask = grid.mask();
      for (std::size_t i = 0; i < mask.rows(); ++i)
        for (std::size_t j = 0; j < mask.cols(); ++j)
          mask(i, j) = mask(i, j) && rule_mask(i, j) ? 1 : 0;
      grids.emplace_back(grid.excitation(), grid.emission(), std::move(values), std::move(mask));
    }

    if (sample.is_mixture) {
      ds.mixtures.emplace_back(sample.id, std::move(grids), sample.weights);
      design_mixtures.push_back({sample.id, sample.weights});
    } else {
      ds.endmembers.emplace_back(sample.id, std::move(grids));
      endmember_ids.push_back(sample.id);
    }
  }

  if (!endmember_ids.empty())
    ds.design = MixtureDesign(std::move(endmember_ids), std::move(design_mixtures));
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  return load_dataset(load_manifest(manifest_path));
}

}  // namespace eemix::io
