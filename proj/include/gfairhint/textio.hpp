#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gfairhint/error.hpp"

namespace gfairhint {

// Line-oriented readers for the tab/space separated dataset formats.
// '#' starts a comment anywhere in a line; blank lines are skipped.

inline std::vector<std::string> read_data_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::size_t a = line.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r\n");
    lines.push_back(line.substr(a, b - a + 1));
  }
  return lines;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& ctx) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw IngestError(ctx + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty())
    throw IngestError(ctx + ": expected a number, got '" + s + "'");
  return v;
}

// %.17g round-trips doubles exactly through text.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

}  // namespace gfairhint
