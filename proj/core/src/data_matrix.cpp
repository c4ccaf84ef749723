#include "meritcurve/data_matrix.hpp"

#include "meritcurve/error.hpp"

namespace meritcurve {

std::vector<double> DataMatrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

DataMatrix DataMatrix::select_columns(const std::vector<std::size_t>& idx) const {
  DataMatrix m;
  for (auto c : idx) m.names.push_back(names.at(c));
  m.rows = rows;
  m.values.reserve(rows * idx.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (auto c : idx) m.values.push_back((*this)(r, c));
  return m;
}

DataMatrix DataMatrix::select_rows(std::size_t begin, std::size_t end) const {
  DataMatrix m;
  m.names = names;
  m.rows = end - begin;
  m.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * cols()),
                  values.begin() + static_cast<std::ptrdiff_t>(end * cols()));
  return m;
}

void DataMatrix::append_row(std::span<const double> r) {
  if (r.size() != cols()) throw Error(Errc::DimMismatch, "row width does not match the column count");
  values.insert(values.end(), r.begin(), r.end());
  ++rows;
}

}  // namespace meritcurve
