#ifndef GHDIFF_KVDOC_HPP
#define GHDIFF_KVDOC_HPP

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ghdiff/errors.hpp"

namespace ghdiff {

// Plain `key: value` document with '#' comments. This is the one text format
// used for topology files and experiment configs; values are scalars,
// `[a, b, c]` lists, or nested `[[1,2],[3,4]]` pair lists.
class KvDoc {
 public:
  static KvDoc parse(const std::string& text) {
    KvDoc doc;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string stripped = trim(line);
      if (stripped.empty()) continue;
      const auto colon = stripped.find(':');
      if (colon == std::string::npos) {
        throw ConfigParseError("line " + std::to_string(line_no) +
                               ": expected 'key: value', got '" + stripped + "'");
      }
      const std::string key = trim(stripped.substr(0, colon));
      const std::string value = trim(stripped.substr(colon + 1));
      if (key.empty()) {
        throw ConfigParseError("line " + std::to_string(line_no) + ": empty key");
      }
      if (doc.values_.count(key) != 0) {
        throw ConfigParseError("field '" + key + "': duplicated");
      }
      doc.values_[key] = value;
      doc.order_.push_back(key);
    }
    return doc;
  }

  static KvDoc load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
      throw ConfigParseError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  const std::vector<std::string>& keys() const { return order_; }

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      throw ConfigParseError("field '" + key + "': missing");
    }
    return it->second;
  }

  std::string get_string(const std::string& key) const { return raw(key); }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
  }

  double get_double(const std::string& key) const {
    return parse_double(raw(key), key);
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  long long get_int(const std::string& key) const {
    return parse_int(raw(key), key);
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& v = raw(key);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ConfigParseError("field '" + key + "': expected boolean, got '" + v + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : split_list(raw(key), key)) {
      out.push_back(parse_double(item, key));
    }
    return out;
  }

  // Items of a top-level list, nesting in () and [] respected.
  std::vector<std::string> get_item_list(const std::string& key) const {
    return split_list(raw(key), key);
  }

  std::vector<std::pair<long long, long long>> get_pair_list(
      const std::string& key) const {
    std::vector<std::pair<long long, long long>> out;
    for (const std::string& item : split_list(raw(key), key)) {
      if (item.size() < 2 || item.front() != '[' || item.back() != ']') {
        throw ConfigParseError("field '" + key + "': expected pair '[a,b]', got '" +
                               item + "'");
      }
      const auto parts = split_top_level(item.substr(1, item.size() - 2));
      if (parts.size() != 2) {
        throw ConfigParseError("field '" + key + "': pair '" + item +
                               "' does not have two entries");
      }
      out.emplace_back(parse_int(trim(parts[0]), key), parse_int(trim(parts[1]), key));
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  static double parse_double(const std::string& text, const std::string& field) {
    const std::string t = trim(text);
    double value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      throw ConfigParseError("field '" + field + "': expected real number, got '" +
                             t + "'");
    }
    return value;
  }

  static long long parse_int(const std::string& text, const std::string& field) {
    const std::string t = trim(text);
    long long value = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      throw ConfigParseError("field '" + field + "': expected integer, got '" + t +
                             "'");
    }
    return value;
  }

 private:
  static std::vector<std::string> split_top_level(const std::string& inner) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (const char c : inner) {
      if (c == '[' || c == '(') ++depth;
      if (c == ']' || c == ')') --depth;
      if (c == ',' && depth == 0) {
        parts.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(cur);
    return parts;
  }

  static std::vector<std::string> split_list(const std::string& value,
                                             const std::string& field) {
    const std::string v = trim(value);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
      throw ConfigParseError("field '" + field + "': expected list '[...]', got '" +
                             v + "'");
    }
    const std::string inner = trim(v.substr(1, v.size() - 2));
    std::vector<std::string> out;
    if (inner.empty()) return out;
    for (const std::string& part : split_top_level(inner)) {
      out.push_back(trim(part));
    }
    return out;
  }

  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace ghdiff

#endif  // GHDIFF_KVDOC_HPP
