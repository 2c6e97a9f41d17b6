#pragma once

// Plain-text key-value documents: one `key = value` per line. Lines whose
// first non-blank character is `#` are comments, blank lines are ignored.
// Key order is preserved.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hsu {

class KvDocument {
 public:
  using Entry = std::pair<std::string, std::string>;

  // Throws ParseError with the 1-based line number on a malformed line or a
  // duplicate key.
  static KvDocument parse(const std::string& text);
  static KvDocument read_file(const std::string& path);

  std::string to_string() const;
  void write_file(const std::string& path) const;

  bool contains(const std::string& key) const;
  // Replaces an existing value in place, otherwise appends.
  void set(const std::string& key, std::string value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::int64_t value);
  void set(const std::string& key, std::uint64_t value);
  void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
  void set(const std::string& key, bool value);

  std::optional<std::string> find(const std::string& key) const;
  // Typed getters throw ParseError on a missing key or an unparsable value.
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;

  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Shortest decimal text that parses back to the same double; "inf"/"-inf"/"nan"
// for non-finite values.
std::string format_double(double v);
// Accepts everything format_double emits. Throws ParseError.
double parse_double(const std::string& text);

std::vector<std::string> split_list(const std::string& text, char sep = ',');

}  // namespace hsu
