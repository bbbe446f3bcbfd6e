#pragma once

#include "strb/types.hpp"

#include <ostream>
#include <vector>

namespace strb {

// Scientific notation, 6 significant digits, '.' decimal separator:
// the one true number format of every CSV emitted by the tool.
std::string fmt_sci(double x);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ostream& os_;
  std::size_t n_cols_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static CsvTable read_file(const std::string& path);
  int column(const std::string& name) const;  // ConfigError naming the column if absent
};

}  // namespace strb
