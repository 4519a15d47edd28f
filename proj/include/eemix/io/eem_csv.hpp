#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eemix/error.hpp"
#include "eemix/grid.hpp"
#include "eemix/io/format.hpp"

namespace eemix::io {

// EEM CSV layout:
//   - optional leading comment lines starting with '#'
//   - header row: cell (1,1) is the literal "em\ex", then excitation
//     wavelengths ascending
//   - one body row per emission wavelength, ascending; blank cells are
//     masked-out pixels, everything else must parse as a finite number
// Axes must be ascending with uniform spacing.

namespace detail_csv {

inline std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

inline WavelengthAxis axis_from_values(const std::vector<double>& w, const std::string& context,
                                       const std::string& which) {
  for (std::size_t k = 1; k < w.size(); ++k)
    if (!(w[k] > w[k - 1]))
      throw ValidationError(context + ": " + which + " axis not ascending");
  if (w.size() == 1) return WavelengthAxis(w[0], 1.0, 1);
  const double step = (w.back() - w.front()) / static_cast<double>(w.size() - 1);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double expected = w.front() + step * static_cast<double>(k);
    if (std::fabs(w[k] - expected) > 1e-9 * (std::fabs(w[k]) + 1.0))
      throw ValidationError(context + ": " + which + " axis not uniformly spaced");
  }
  return WavelengthAxis(w.front(), step, w.size());
}

}  // namespace detail_csv

inline EemGrid parse_eem_csv(std::istream& in, const std::string& context = "eem csv") {
  std::string line;
  std::size_t line_no = 0;

  auto next_line = [&](bool required) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() == '#') continue;
      return true;
    }
    if (required) throw ValidationError(context + ": unexpected end of file");
    return false;
  };

  next_line(true);
  const auto header = detail_csv::split_row(line);
  if (header.empty() || header[0] != "em\\ex")
    throw ValidationError(context + ": first cell must be \"em\\ex\" (line " +
                          std::to_string(line_no) + ")");
  if (header.size() < 2) throw ValidationError(context + ": no excitation wavelengths");

  std::vector<double> excitation;
  for (std::size_t c = 1; c < header.size(); ++c) {
    double w;
    if (!parse_double(header[c], w) || !std::isfinite(w))
      throw ValidationError(context + ": bad excitation wavelength at line " +
                            std::to_string(line_no) + ", column " + std::to_string(c + 1));
    excitation.push_back(w);
  }

  std::vector<double> emission;
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  while (next_line(false)) {
    const auto cells = detail_csv::split_row(line);
    if (cells.size() != header.size())
      throw ValidationError(context + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
    double w;
    if (!parse_double(cells[0], w) || !std::isfinite(w))
      throw ValidationError(context + ": bad emission wavelength at line " +
                            std::to_string(line_no));
    emission.push_back(w);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) {
        values.push_back(std::numeric_limits<double>::quiet_NaN());
        mask.push_back(0);
        continue;
      }
      double v;
      if (!parse_double(cells[c], v))
        throw ValidationError(context + ": non-numeric cell at line " + std::to_string(line_no) +
                              ", column " + std::to_string(c + 1));
      values.push_back(v);
      mask.push_back(1);
    }
  }
  if (emission.empty()) throw ValidationError(context + ": no emission rows");

  const WavelengthAxis ex_axis = detail_csv::axis_from_values(excitation, context, "excitation");
  const WavelengthAxis em_axis = detail_csv::axis_from_values(emission, context, "emission");
  return EemGrid(ex_axis, em_axis,
                 Grid2D<double>(em_axis.count(), ex_axis.count(), std::move(values)),
                 MaskGrid(em_axis.count(), ex_axis.count(), std::move(mask)));
}

inline EemGrid parse_eem_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return parse_eem_csv(in, path.filename().string());
}

inline void write_eem_csv(std::ostream& out, const EemGrid& grid,
                          std::span<const std::string> comments = {}) {
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << "em\\ex";
  for (std::size_t j = 0; j < grid.excitation().count(); ++j)
    out << ',' << format_double(grid.excitation()[j]);
  out << '\n';
  for (std::size_t i = 0; i < grid.emission().count(); ++i) {
    out << format_double(grid.emission()[i]);
    for (std::size_t j = 0; j < grid.excitation().count(); ++j) {
      out << ',';
      if (grid.valid(i, j)) out << format_double(grid.at(i, j));
    }
    out << '\n';
  }
}

inline void write_eem_csv(const std::filesystem::path& path, const EemGrid& grid,
                          std::span<const std::string> comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ComputeError("cannot write '" + path.string() + "'");
  write_eem_csv(out, grid, comments);
}

}  // namespace eemix::io
