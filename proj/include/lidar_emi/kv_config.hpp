#ifndef LIDAR_EMI_KV_CONFIG_HPP
#define LIDAR_EMI_KV_CONFIG_HPP

// Line-oriented key/value grammar shared by every configuration file:
//
//   file    := { line '\n' }
//   line    := [ key ws* '=' ws* value ] [ '#' comment ]
//   key     := [A-Za-z0-9_.]+
//   value   := any text up to '#' or end of line, trimmed
//
// Numeric lists are separated by commas and/or whitespace. Keys may repeat
// only where a parser says so (scene primitives, resonances).

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lidar_emi/error.hpp"

namespace lidar_emi {

struct KvEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

class KvDocument {
 public:
  static KvDocument parse(std::istream& in, std::string source = "<input>") {
    KvDocument doc;
    doc.source_ = std::move(source);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      if (line_no == 1 && raw.starts_with("\xEF\xBB\xBF")) raw.erase(0, 3);
      if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string_view text = trim(raw);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) doc.fail(line_no, "expected 'key = value'");
      const std::string_view key = trim(text.substr(0, eq));
      const std::string_view value = trim(text.substr(eq + 1));
      if (key.empty()) doc.fail(line_no, "empty key");
      for (const char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '.';
        if (!ok) doc.fail(line_no, "invalid character in key '" + std::string(key) + "'");
      }
      if (value.empty()) doc.fail(line_no, "missing value for '" + std::string(key) + "'");
      doc.entries_.push_back({std::string(key), std::string(value), line_no});
    }
    return doc;
  }

  static KvDocument parse_string(const std::string& text, std::string source = "<string>") {
    std::istringstream in(text);
    return parse(in, std::move(source));
  }

  static KvDocument load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open configuration file '" + path + "'");
    return parse(in, path);
  }

  const std::vector<KvEntry>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }

  [[noreturn]] void fail(std::size_t line, const std::string& message) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + message);
  }
  [[noreturn]] void unknown(const KvEntry& e) const { fail(e.line, "unknown key '" + e.key + "'"); }

  double number(const KvEntry& e) const {
    const auto values = numbers(e);
    if (values.size() != 1) fail(e.line, "expected a single number for '" + e.key + "'");
    return values.front();
  }

  std::vector<double> numbers(const KvEntry& e) const {
    std::vector<double> out;
    std::string_view rest = e.value;
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(", \t\r");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto stop = rest.find_first_of(", \t\r");
      const std::string_view token = rest.substr(0, stop);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc{} || ptr != token.data() + token.size())
        fail(e.line, "malformed number '" + std::string(token) + "' for '" + e.key + "'");
      out.push_back(v);
      rest.remove_prefix(token.size());
    }
    if (out.empty()) fail(e.line, "no numbers for '" + e.key + "'");
    return out;
  }

  std::size_t count(const KvEntry& e) const {
    const double v = number(e);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      fail(e.line, "expected a non-negative integer for '" + e.key + "'");
    return static_cast<std::size_t>(v);
  }

 private:
  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::string source_;
  std::vector<KvEntry> entries_;
};

}  // namespace lidar_emi

#endif  // LIDAR_EMI_KV_CONFIG_HPP
