#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/grid.hpp"
#include "eemix/vectorized.hpp"

namespace eemix {

// Replicate scans of one water sample. All replicates share axes and mask
// exactly. For mixed samples the known endmember weights may be attached;
// weights are fractions in [0, 1] and are not forced to sum to 1.
class ReplicateSet {
 public:
  ReplicateSet(std::string sample_id, std::vector<EemGrid> replicates,
               std::optional<std::vector<double>> weights = std::nullopt)
      : sample_id_(std::move(sample_id)),
        replicates_(std::move(replicates)),
        weights_(std::move(weights)) {
    if (replicates_.empty())
      throw ValidationError("replicate set '" + sample_id_ + "': no replicates");
    for (std::size_t i = 1; i < replicates_.size(); ++i)
      if (!replicates_[i].same_layout(replicates_[0]))
        throw ValidationError("replicate set '" + sample_id_ +
                              "': replicates differ in axes or mask");
    if (weights_) {
      for (double w : *weights_)
        if (!(w >= 0.0 && w <= 1.0))
          throw ValidationError("replicate set '" + sample_id_ +
                                "': weights must lie in [0, 1]");
    }
  }

  const std::string& sample_id() const { return sample_id_; }
  const std::vector<EemGrid>& replicates() const { return replicates_; }
  std::size_t replicate_count() const { return replicates_.size(); }
  const std::optional<std::vector<double>>& weights() const { return weights_; }

  const EemGrid& layout() const { return replicates_[0]; }

  bool same_layout(const ReplicateSet& other) const {
    return layout().same_layout(other.layout());
  }

 private:
  std::string sample_id_;
  std::vector<EemGrid> replicates_;
  std::optional<std::vector<double>> weights_;
};

// Pixel-wise arithmetic mean across replicates. This is the per-sample
// average EEM that serves as the plug-in estimate of the true surface.
inline VectorizedEem pixel_mean(const ReplicateSet& set) {
  VectorizedEem mean = vectorize(set.replicates()[0]);
  for (std::size_t r = 1; r < set.replicate_count(); ++r) {
    const VectorizedEem v = vectorize(set.replicates()[r]);
    for (std::size_t k = 0; k < mean.size(); ++k) mean.values[k] += v.values[k];
  }
  const double inv_n = 1.0 / static_cast<double>(set.replicate_count());
  for (double& v : mean.values) v *= inv_n;
  return mean;
}

// Known composition of a study: s endmember ids plus, per mixed sample, the
// weight of each endmember in manifest order.
struct MixtureWeights {
  std::string mixture_id;
  std::vector<double> weights;
};

class MixtureDesign {
 public:
  MixtureDesign(std::vector<std::string> endmember_ids, std::vector<MixtureWeights> mixtures)
      : endmember_ids_(std::move(endmember_ids)), mixtures_(std::move(mixtures)) {
    if (endmember_ids_.empty()) throw ValidationError("mixture design: no endmembers");
    for (const auto& m : mixtures_) {
      if (m.weights.size() != endmember_ids_.size())
        throw ValidationError("mixture design: weights for '" + m.mixture_id +
                              "' do not match endmember count");
      for (double w : m.weights)
        if (!(w >= 0.0)) throw ValidationError("mixture design: negative weight");
    }
  }

  const std::vector<std::string>& endmember_ids() const { return endmember_ids_; }
  const std::vector<MixtureWeights>& mixtures() const { return mixtures_; }
  std::size_t endmember_count() const { return endmember_ids_.size(); }

 private:
  std::vector<std::string> endmember_ids_;
  std::vector<MixtureWeights> mixtures_;
};

}  // namespace eemix
