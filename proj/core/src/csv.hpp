#pragma once

// Minimal CSV reading/writing for hand-authored fixtures. Internal.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ruq/errors.hpp"

namespace ruq::detail {

inline std::vector<std::string> read_text_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open file: " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<double> parse_csv_numbers(const std::string& line,
                                             const std::filesystem::path& path,
                                             std::size_t line_no) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    std::size_t a = pos, b = comma;
    while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
    while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t')) --b;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(line.data() + a, line.data() + b, value);
    if (ec != std::errc{} || ptr != line.data() + b || a == b) {
      throw ValidationError("bad numeric field at " + path.string() + ":" +
                            std::to_string(line_no) + " (\"" + line.substr(pos, comma - pos) +
                            "\")");
    }
    out.push_back(value);
    pos = comma + 1;
    if (comma == line.size()) break;
  }
  return out;
}

inline std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace ruq::detail
