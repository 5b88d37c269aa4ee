#include "mvngb/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvngb/error.hpp"

namespace mvngb::io {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    cells.push_back(trim(cell));
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

}  // namespace

Eigen::Index Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw DataError("column '" + name + "' not found in header");
  }
  return it - header.begin();
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

RowMatrix Table::select(const std::vector<std::string>& names) const {
  RowMatrix out(values.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = values.col(column(names[j]));
  }
  return out;
}

Table parse_csv(std::istream& in, const std::string& source) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<double> cells;
  Eigen::Index rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    auto fields = split_cells(line);
    if (!have_header) {
      for (const auto& name : fields) {
        if (name.empty()) {
          throw DataError(source + ": empty column name in header");
        }
        if (std::count(fields.begin(), fields.end(), name) > 1) {
          throw DataError(source + ": duplicate column '" + name + "' in header");
        }
      }
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": expected " << table.header.size() << " cells, found "
          << fields.size();
      throw DataError(msg.str());
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const std::string& text = fields[j];
      // from_chars rejects an explicit plus sign.
      const char* first = text.data() + (text.size() > 1 && text[0] == '+' ? 1 : 0);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
      if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        std::ostringstream msg;
        msg << source << ":" << line_no << ": column '" << table.header[j]
            << "' is not numeric: '" << text << "'";
        throw DataError(msg.str());
      }
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << source << ":" << line_no << ": column '" << table.header[j]
            << "' holds a non-finite value";
        throw DataError(msg.str());
      }
      cells.push_back(value);
    }
    ++rows;
  }
  if (!have_header) {
    throw DataError(source + ": missing header row");
  }
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  table.values = Eigen::Map<const RowMatrix>(cells.data(), rows, cols);
  return table;
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  return parse_csv(in, path.string());
}

void write_csv(std::ostream& out, const std::vector<std::string>& header, ConstRowRef values) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << format_double(values(i, j));
    }
    out << '\n';
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream stream(text);
  while (std::getline(stream, item, sep)) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace mvngb::io
