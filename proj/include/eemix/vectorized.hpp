#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/grid.hpp"

namespace eemix {

struct PixelLocation {
  double excitation_nm;
  double emission_nm;

  bool operator==(const PixelLocation&) const = default;
};

// Flattened view of the valid pixels of an EEM, in canonical order
// (excitation ascending, then emission ascending).
struct VectorizedEem {
  std::vector<double> values;
  std::vector<PixelLocation> pixels;

  std::size_t size() const { return values.size(); }
};

inline VectorizedEem vectorize(const EemGrid& grid) {
  VectorizedEem out;
  out.values.reserve(grid.valid_count());
  out.pixels.reserve(grid.valid_count());
  detail::for_each_valid_pixel(grid.mask(), [&](std::size_t i, std::size_t j) {
    const double v = grid.at(i, j);
    if (!std::isfinite(v))
      throw ValidationError("vectorize: non-finite value at valid pixel");
    out.values.push_back(v);
    out.pixels.push_back({grid.excitation()[j], grid.emission()[i]});
  });
  return out;
}

// Inverse of vectorize for a given layout; masked-out cells are NaN.
inline EemGrid devectorize(const VectorizedEem& vec, const WavelengthAxis& excitation,
                           const WavelengthAxis& emission, const MaskGrid& mask) {
  Grid2D<double> values(emission.count(), excitation.count(),
                        std::numeric_limits<double>::quiet_NaN());
  std::size_t k = 0;
  detail::for_each_valid_pixel(mask, [&](std::size_t i, std::size_t j) {
    if (k >= vec.size()) throw ValidationError("devectorize: vector shorter than mask");
    if (vec.pixels[k] != PixelLocation{excitation[j], emission[i]})
      throw ValidationError("devectorize: pixel order does not match layout");
    values(i, j) = vec.values[k];
    ++k;
  });
  if (k != vec.size()) throw ValidationError("devectorize: vector longer than mask");
  return EemGrid(excitation, emission, std::move(values), mask);
}

}  // namespace eemix
