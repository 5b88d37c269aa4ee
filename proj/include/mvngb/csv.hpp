#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mvngb/types.hpp"

namespace mvngb::io {

// Numeric CSV with a mandatory header row.
struct Table {
  std::vector<std::string> header;
  RowMatrix values;

  // Throws DataError if the column is absent.
  Eigen::Index column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  RowMatrix select(const std::vector<std::string>& names) const;
};

// Rejects ragged rows, non-numeric cells and NaN/Inf with row/column
// diagnostics (DataError). Blank lines are skipped.
Table parse_csv(std::istream& in, const std::string& source);
Table read_csv(const std::filesystem::path& path);

void write_csv(std::ostream& out, const std::vector<std::string>& header, ConstRowRef values);

// Shortest text that parses back to the same double ("nan" for NaN).
std::string format_double(double value);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace mvngb::io
