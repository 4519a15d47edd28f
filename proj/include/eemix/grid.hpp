#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eemix/error.hpp"

namespace eemix {

// Uniformly spaced wavelength grid: start_nm + k * step_nm for k in [0, count).
class WavelengthAxis {
 public:
  WavelengthAxis(double start_nm, double step_nm, std::size_t count)
      : start_(start_nm), step_(step_nm), count_(count) {
    if (!(step_ > 0.0)) throw ValidationError("wavelength axis: step must be > 0");
    if (count_ < 1) throw ValidationError("wavelength axis: count must be >= 1");
    if (!std::isfinite(start_) || !std::isfinite(step_))
      throw ValidationError("wavelength axis: non-finite start or step");
  }

  double start_nm() const { return start_; }
  double step_nm() const { return step_; }
  std::size_t count() const { return count_; }
  double operator[](std::size_t k) const { return start_ + step_ * static_cast<double>(k); }
  double back() const { return (*this)[count_ - 1]; }

  bool operator==(const WavelengthAxis&) const = default;

 private:
  double start_;
  double step_;
  std::size_t count_;
};

// Dense row-major 2-D storage.
template <typename T>
class Grid2D {
 public:
  Grid2D() : rows_(0), cols_(0) {}

  Grid2D(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  Grid2D(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw ValidationError("grid: data size does not match dimensions");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<T>& data() const { return data_; }

  bool operator==(const Grid2D&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> data_;
};

using MaskGrid = Grid2D<std::uint8_t>;

// Pixel validity rule: a pixel is valid when emission > excitation + offset_nm.
// offset_nm = 0 is the strict "emission longer than excitation" rule; a positive
// offset excludes a band along the diagonal.
struct MaskRule {
  double offset_nm = 0.0;

  static MaskRule strictly_longer() { return MaskRule{0.0}; }
  static MaskRule offset_band(double offset_nm) { return MaskRule{offset_nm}; }
};

// Mask layout is emission-count rows by excitation-count columns.
inline MaskGrid build_mask(const WavelengthAxis& excitation, const WavelengthAxis& emission,
                           MaskRule rule = {}) {
  MaskGrid mask(emission.count(), excitation.count(), 0);
  for (std::size_t i = 0; i < emission.count(); ++i)
    for (std::size_t j = 0; j < excitation.count(); ++j)
      mask(i, j) = emission[i] > excitation[j] + rule.offset_nm ? 1 : 0;
  return mask;
}

// One corrected fluorescence scan: intensity (QSU) per emission x excitation
// pixel, plus a validity mask of the same shape. Valid pixels hold finite
// values; NaN is permitted only where the mask is off. Immutable once built.
class EemGrid {
 public:
  EemGrid(WavelengthAxis excitation, WavelengthAxis emission, Grid2D<double> intensities,
          MaskGrid mask)
      : excitation_(std::move(excitation)),
        emission_(std::move(emission)),
        intensities_(std::move(intensities)),
        mask_(std::move(mask)) {
    if (intensities_.rows() != emission_.count() || intensities_.cols() != excitation_.count())
      throw ValidationError("eem grid: intensity dimensions do not match axes");
    if (mask_.rows() != intensities_.rows() || mask_.cols() != intensities_.cols())
      throw ValidationError("eem grid: mask dimensions do not match intensities");
    for (std::size_t i = 0; i < mask_.rows(); ++i)
      for (std::size_t j = 0; j < mask_.cols(); ++j)
        if (mask_(i, j) && !std::isfinite(intensities_(i, j)))
          throw ValidationError("eem grid: non-finite intensity at valid pixel (emission " +
                                std::to_string(emission_[i]) + " nm, excitation " +
                                std::to_string(excitation_[j]) + " nm)");
  }

  const WavelengthAxis& excitation() const { return excitation_; }
  const WavelengthAxis& emission() const { return emission_; }
  const Grid2D<double>& intensities() const { return intensities_; }
  const MaskGrid& mask() const { return mask_; }

  double at(std::size_t emission_index, std::size_t excitation_index) const {
    return intensities_(emission_index, excitation_index);
  }
  bool valid(std::size_t emission_index, std::size_t excitation_index) const {
    return mask_(emission_index, excitation_index) != 0;
  }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (auto v : mask_.data()) n += v ? 1 : 0;
    return n;
  }

  bool same_layout(const EemGrid& other) const {
    return excitation_ == other.excitation_ && emission_ == other.emission_ &&
           mask_ == other.mask_;
  }

 private:
  WavelengthAxis excitation_;
  WavelengthAxis emission_;
  Grid2D<double> intensities_;
  MaskGrid mask_;
};

namespace detail {

// Canonical pixel order: excitation ascending (outer), emission ascending
// (inner), valid pixels only. Every vectorized view uses this order.
template <typename F>
void for_each_valid_pixel(const MaskGrid& mask, F&& f) {
  for (std::size_t j = 0; j < mask.cols(); ++j)
    for (std::size_t i = 0; i < mask.rows(); ++i)
      if (mask(i, j)) f(i, j);
}

}  // namespace detail

}  // namespace eemix
