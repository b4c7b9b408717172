#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "rdslab/error.hpp"

namespace rdslab::csv {

// Minimal comma splitting; the file formats used here never quote fields.
std::vector<std::string> split(std::string_view line, char sep = ',');

std::string_view trim(std::string_view s);

/// Reads the next non-empty line (CR stripped). Returns false at EOF.
bool next_line(std::istream& in, std::string& line);

/// Column positions for a header; throws Error("schema") when a required
/// column is absent.
class Header {
 public:
  explicit Header(std::vector<std::string> names);

  std::size_t index(std::string_view name) const;
  bool has(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

long long parse_int(std::string_view field, std::string_view what);
double parse_double(std::string_view field, std::string_view what);
bool parse_bool01(std::string_view field, std::string_view what);

}  // namespace rdslab::csv
