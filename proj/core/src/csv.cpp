#include "meritcurve/csv.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "meritcurve/error.hpp"

namespace meritcurve::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<Row> read_rows(std::istream& in, bool allow_header) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (allow_header && rows.empty() && line_no == 1 && std::isalpha(static_cast<unsigned char>(line[0])))
      continue;
    Row row;
    row.line_no = line_no;
    for (auto f : split(line)) row.fields.emplace_back(f);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<Row> read_file(const std::filesystem::path& path, bool allow_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  return read_rows(in, allow_header);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace meritcurve::csv
