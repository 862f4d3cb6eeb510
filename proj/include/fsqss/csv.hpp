#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace fsqss {

/// Round-trip exact text for a double (17 significant digits).
std::string format_number(double v);
std::string format_number(std::int64_t v);

/// In-memory CSV table; written only once complete.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  void write(std::ostream& out) const;
  std::string str() const;
};

}  // namespace fsqss
