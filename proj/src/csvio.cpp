#include "strb/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace strb {

std::string fmt_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.5e", x);
  return buf;
}

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) line += ',';
    line += cells[i];
  }
  return line;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header)
    : os_(os), n_cols_(header.size()) {
  os_ << join(header) << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_)
    throw std::invalid_argument("csv row width does not match the header");
  os_ << join(cells) << '\n';
}

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open csv file '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("csv file '" + path + "' is empty");
  t.header = split(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ConfigError("csv file '" + path + "': ragged row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw ConfigError("csv table is missing required column '" + name + "'");
}

}  // namespace strb
