#include "hsu/kv.hpp"

#include "hsu/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace hsu {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ParseError("key '" + key + "': not an integer: '" + text + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "inf" || text == "+inf" || text == "Inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf" || text == "-Inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text[0] == '+') ++begin;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (text.empty() || ec != std::errc{} || ptr != end) throw ParseError("not a number: '" + raw + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

KvDocument KvDocument::parse(const std::string& text) {
  KvDocument doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
    if (doc.contains(key)) throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    doc.entries_.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return doc;
}

KvDocument KvDocument::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KvDocument::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void KvDocument::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_string();
  if (!out) throw IoError("write failed for '" + path + "'");
}

bool KvDocument::contains(const std::string& key) const { return find(key).has_value(); }

void KvDocument::set(const std::string& key, std::string value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

void KvDocument::set(const std::string& key, double value) { set(key, format_double(value)); }
void KvDocument::set(const std::string& key, std::int64_t value) { set(key, std::to_string(value)); }
void KvDocument::set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
void KvDocument::set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }

std::optional<std::string> KvDocument::find(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string KvDocument::get_string(const std::string& key) const {
  auto v = find(key);
  if (!v) throw ParseError("missing key '" + key + "'");
  return *v;
}

double KvDocument::get_double(const std::string& key) const {
  try {
    return parse_double(get_string(key));
  } catch (const ParseError& e) {
    throw ParseError("key '" + key + "': " + e.what());
  }
}

std::int64_t KvDocument::get_int(const std::string& key) const {
  return parse_integer<std::int64_t>(key, get_string(key));
}

std::uint64_t KvDocument::get_uint(const std::string& key) const {
  return parse_integer<std::uint64_t>(key, get_string(key));
}

bool KvDocument::get_bool(const std::string& key) const {
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("key '" + key + "': not a boolean: '" + v + "'");
}

double KvDocument::get_double(const std::string& key, double fallback) const {
  return contains(key) ? get_double(key) : fallback;
}
std::int64_t KvDocument::get_int(const std::string& key, std::int64_t fallback) const {
  return contains(key) ? get_int(key) : fallback;
}
std::uint64_t KvDocument::get_uint(const std::string& key, std::uint64_t fallback) const {
  return contains(key) ? get_uint(key) : fallback;
}
bool KvDocument::get_bool(const std::string& key, bool fallback) const {
  return contains(key) ? get_bool(key) : fallback;
}
std::string KvDocument::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

}  // namespace hsu
