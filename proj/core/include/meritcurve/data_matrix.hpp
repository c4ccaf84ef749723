#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace meritcurve {

/// Dense row-major table of doubles with column names.
struct DataMatrix {
  std::vector<std::string> names;
  std::size_t rows = 0;
  std::vector<double> values;

  std::size_t cols() const noexcept { return names.size(); }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return values[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols(), cols()}; }
  std::vector<double> column(std::size_t c) const;
  /// Keeps the listed columns in the given order.
  DataMatrix select_columns(const std::vector<std::size_t>& idx) const;
  DataMatrix select_rows(std::size_t begin, std::size_t end) const;
  void append_row(std::span<const double> r);
};

}  // namespace meritcurve
