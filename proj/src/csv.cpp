#include "rdslab/csv.hpp"

#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

namespace rdslab::csv {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(trim(line.substr(start)));
      break;
    }
    fields.emplace_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool next_line(std::istream& in, std::string& line) {
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

Header::Header(std::vector<std::string> names) : names_(std::move(names)) {}

std::size_t Header::index(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw Error("schema", fmt::format("missing column '{}'", name));
}

bool Header::has(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

long long parse_int(std::string_view field, std::string_view what) {
  long long value = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error("parse", fmt::format("{}: expected an integer, got '{}'", what, field));
  }
  return value;
}

double parse_double(std::string_view field, std::string_view what) {
  // libstdc++ 11 lacks floating-point from_chars.
  std::string copy(field);
  char* end = nullptr;
  const double value = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size()) {
    throw Error("parse", fmt::format("{}: expected a number, got '{}'", what, field));
  }
  return value;
}

bool parse_bool01(std::string_view field, std::string_view what) {
  if (field == "0") return false;
  if (field == "1") return true;
  throw Error("parse", fmt::format("{}: expected 0 or 1, got '{}'", what, field));
}

}  // namespace rdslab::csv
