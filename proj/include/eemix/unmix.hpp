#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/nnls.hpp"
#include "eemix/samples.hpp"
#include "eemix/stats.hpp"

namespace eemix {

struct UnmixOptions {
  NnlsOptions nnls;
  // 0 runs every combination. A positive cap draws that many combinations
  // uniformly without replacement, seeded for reproducibility.
  std::size_t max_combos = 0;
  std::uint64_t seed = 0;
};

struct ComboEstimate {
  // Replicate indices used: mixture first, then one per endmember.
  std::vector<std::size_t> replicate_choice;
  std::vector<double> abundances;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct EndmemberSummary {
  std::string endmember_id;
  std::optional<double> true_weight;
  double mean = 0.0;
  std::optional<double> sd;    // nullopt when fewer than 2 usable combos
  std::optional<double> bias;  // |mean - true_weight| when the truth is known
  std::size_t combos_used = 0;
};

struct UnmixRun {
  std::string mixture_id;
  std::vector<std::string> endmember_ids;
  std::vector<ComboEstimate> combos;
  std::size_t failed_combos = 0;
  std::vector<EndmemberSummary> summary;
};

// Table rows per endmember over the usable (converged) combos; sd uses
// denominator count-1.
inline std::vector<EndmemberSummary> summarize_run(
    const UnmixRun& run, const std::optional<std::vector<double>>& truth) {
  if (run.combos.empty()) throw ValidationError("unmix summary: no combos");
  const std::size_t s = run.endmember_ids.size();
  if (truth && truth->size() != s)
    throw ValidationError("unmix summary: truth length mismatch");

  std::vector<EndmemberSummary> out;
  out.reserve(s);
  std::vector<double> values;
  for (std::size_t k = 0; k < s; ++k) {
    values.clear();
    for (const ComboEstimate& c : run.combos)
      if (c.converged) values.push_back(c.abundances[k]);
    if (values.empty()) throw ComputeError("unmix summary: no converged combos");
    EndmemberSummary row;
    row.endmember_id = run.endmember_ids[k];
    row.mean = detail::mean(values);
    row.sd = detail::sample_sd(values);
    row.combos_used = values.size();
    if (truth) {
      row.true_weight = (*truth)[k];
      row.bias = std::fabs(row.mean - (*truth)[k]);
    }
    out.push_back(std::move(row));
  }
  return out;
}

// Abundance estimation over replicate combinations: for every choice of one
// mixture replicate and one replicate per endmember, regress the mixture
// vector on the endmember vectors with NNLS. Enumeration is lexicographic in
// the replicate indices, mixture slowest; non-converged solves are kept in
// the combo list but excluded from the summary.
inline UnmixRun unmix_all_combos(const ReplicateSet& mixture,
                                 const std::vector<ReplicateSet>& endmembers,
                                 const UnmixOptions& options = {}) {
  const std::size_t s = endmembers.size();
  if (s == 0) throw ValidationError("unmix: no endmembers");
  for (const ReplicateSet& e : endmembers)
    if (!e.same_layout(mixture))
      throw ValidationError("unmix: endmember '" + e.sample_id() +
                            "' layout differs from mixture");

  std::vector<std::vector<std::vector<double>>> endmember_vectors(s);
  for (std::size_t k = 0; k < s; ++k)
    for (const EemGrid& g : endmembers[k].replicates())
      endmember_vectors[k].push_back(vectorize(g).values);
  std::vector<std::vector<double>> mixture_vectors;
  for (const EemGrid& g : mixture.replicates()) mixture_vectors.push_back(vectorize(g).values);

  std::size_t total = mixture.replicate_count();
  for (const ReplicateSet& e : endmembers) total *= e.replicate_count();

  // Selected combo ids, ascending. A cap below the total picks a uniform
  // subset without replacement via partial Fisher-Yates.
  std::vector<std::size_t> selected;
  if (options.max_combos > 0 && options.max_combos < total) {
    std::vector<std::size_t> ids(total);
    for (std::size_t i = 0; i < total; ++i) ids[i] = i;
    std::mt19937_64 engine(options.seed);
    for (std::size_t i = 0; i < options.max_combos; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(engine() % (total - i));
      std::swap(ids[i], ids[j]);
    }
    selected.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(options.max_combos));
    std::sort(selected.begin(), selected.end());
  } else {
    selected.resize(total);
    for (std::size_t i = 0; i < total; ++i) selected[i] = i;
  }

  UnmixRun run;
  run.mixture_id = mixture.sample_id();
  for (const ReplicateSet& e : endmembers) run.endmember_ids.push_back(e.sample_id());

  std::vector<std::vector<double>> columns(s);
  for (std::size_t id : selected) {
    // Decode the combo id: mixture index is the most significant digit,
    // endmember s the least.
    std::size_t rem = id;
    std::vector<std::size_t> choice(1 + s);
    for (std::size_t k = s; k-- > 0;) {
      const std::size_t nk = endmembers[k].replicate_count();
      choice[1 + k] = rem % nk;
      rem /= nk;
    }
    choice[0] = rem;

    for (std::size_t k = 0; k < s; ++k) columns[k] = endmember_vectors[k][choice[1 + k]];
    const NnlsSolution sol =
        nnls_solve(columns, mixture_vectors[choice[0]], options.nnls);

    ComboEstimate combo;
    combo.replicate_choice = std::move(choice);
    combo.abundances = sol.coefficients;
    combo.residual_norm = sol.residual_norm;
    combo.iterations = sol.iterations;
    combo.converged = sol.converged;
    if (!sol.converged) ++run.failed_combos;
    run.combos.push_back(std::move(combo));
  }

  run.summary = summarize_run(run, mixture.weights());
  return run;
}

}  // namespace eemix
