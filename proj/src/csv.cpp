#include "fsqss/csv.hpp"

#include <fmt/format.h>

#include <sstream>
#include <stdexcept>

namespace fsqss {

std::string format_number(double v) { return fmt::format("{:.17g}", v); }
std::string format_number(std::int64_t v) { return fmt::format("{}", v); }

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    throw std::logic_error(fmt::format("CSV row has {} fields, header has {}", row.size(), header.size()));
  }
  rows.push_back(std::move(row));
}

void CsvTable::write(std::ostream& out) const {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << fields[i];
    }
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::string CsvTable::str() const {
  std::ostringstream ss;
  write(ss);
  return ss.str();
}

}  // namespace fsqss
