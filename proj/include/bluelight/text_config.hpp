#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bluelight/errors.hpp"

namespace bluelight::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Locale-independent strict parsers.
inline bool parse_double(std::string_view s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

inline bool parse_long(std::string_view s, long& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc{} && result.ptr == end;
}

// One `[header words...]` block of a config file: key = value lines plus
// bare data rows, kept in file order with line numbers for error messages.
struct ConfigSection {
  std::vector<std::string> header;  // header words, e.g. {"camera", "front"}
  int header_line = 0;
  std::map<std::string, std::pair<std::string, int>> values;  // key -> (value, line)
  std::vector<std::pair<std::string, int>> rows;              // raw row -> line

  bool has(const std::string& key) const { return values.count(key) != 0; }

  double number(const std::string& path, const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) {
      throw SchemaError(path + ": section [" + (header.empty() ? "" : header[0]) +
                        "] missing required key '" + key + "'");
    }
    double v = 0.0;
    if (!parse_double(it->second.first, v)) {
      throw ParseError(path, it->second.second, "key '" + key + "' is not a number");
    }
    return v;
  }

  double number_or(const std::string& path, const std::string& key, double fallback) const {
    return has(key) ? number(path, key) : fallback;
  }
};

inline std::vector<ConfigSection> read_sections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ConfigSection> sections;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ParseError(path.string(), line_no, "unterminated section header");
      }
      ConfigSection section;
      for (auto& word : split_ws(line.substr(1, line.size() - 2))) {
        section.header.push_back(std::move(word));
      }
      if (section.header.empty()) {
        throw ParseError(path.string(), line_no, "empty section header");
      }
      section.header_line = line_no;
      sections.push_back(std::move(section));
      continue;
    }
    if (sections.empty()) {
      throw ParseError(path.string(), line_no, "content before first section header");
    }
    const std::size_t eq = line.find('=');
    if (eq != std::string_view::npos) {
      const std::string key{trim(line.substr(0, eq))};
      const std::string value{trim(line.substr(eq + 1))};
      if (key.empty()) throw ParseError(path.string(), line_no, "empty key");
      if (!sections.back().values.emplace(key, std::make_pair(value, line_no)).second) {
        throw ParseError(path.string(), line_no, "duplicate key '" + key + "'");
      }
    } else {
      sections.back().rows.emplace_back(std::string{line}, line_no);
    }
  }
  return sections;
}

}  // namespace bluelight::detail
