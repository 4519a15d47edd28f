#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eemix/grid.hpp"
#include "eemix/samples.hpp"

namespace test_util {

// Grid with every pixel valid, values row-major (emission rows).
inline eemix::EemGrid dense_grid(const eemix::WavelengthAxis& ex,
                                 const eemix::WavelengthAxis& em, std::vector<double> values) {
  eemix::MaskGrid mask(em.count(), ex.count(), 1);
  return eemix::EemGrid(ex, em, eemix::Grid2D<double>(em.count(), ex.count(), std::move(values)),
                        std::move(mask));
}

// p pixels as a single excitation column, so vector order equals value order.
inline eemix::EemGrid vector_grid(std::vector<double> values) {
  eemix::WavelengthAxis ex(400.0, 1.0, 1);
  eemix::WavelengthAxis em(500.0, 2.0, values.size());
  return dense_grid(ex, em, std::move(values));
}

inline eemix::ReplicateSet set_of(std::string id, std::vector<std::vector<double>> replicates,
                                  std::optional<std::vector<double>> weights = std::nullopt) {
  std::vector<eemix::EemGrid> grids;
  grids.reserve(replicates.size());
  for (auto& r : replicates) grids.push_back(vector_grid(std::move(r)));
  return eemix::ReplicateSet(std::move(id), std::move(grids), std::move(weights));
}

}  // namespace test_util
