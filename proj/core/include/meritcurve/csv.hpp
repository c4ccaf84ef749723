#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace meritcurve::csv {

/// Splits one line on commas. No quoting: every file this library reads or
/// writes is plain numeric/ISO-date content.
std::vector<std::string_view> split(std::string_view line);

struct Row {
  std::size_t line_no = 0;
  std::vector<std::string> fields;
};

/// Reads every non-blank line. A first line starting with a letter other than
/// a digit/sign is treated as a header only when `allow_header` is set.
std::vector<Row> read_rows(std::istream& in, bool allow_header = false);
std::vector<Row> read_file(const std::filesystem::path& path, bool allow_header = false);

/// Writes `content` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string join(const std::vector<std::string>& fields);

}  // namespace meritcurve::csv
