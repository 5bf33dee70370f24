#include "cargoflow/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cargoflow/common.hpp"

namespace cargoflow {
namespace toml {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw IoError(os.str());
}

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Removes a trailing comment, honoring quoted strings.
std::string strip_comment(const std::string& s) {
  bool in_quote = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_quote = !in_quote;
    if (s[i] == '#' && !in_quote) return s.substr(0, i);
  }
  return s;
}

bool parse_number(const std::string& s, double& out) {
  const char* begin = s.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end != begin && *end == '\0';
}

Value parse_value(const std::string& raw, const std::string& origin, int line) {
  Value v;
  std::string s = strip(raw);
  if (s.empty()) fail(origin, line, "empty value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      fail(origin, line, "unterminated string");
    v.kind = Value::Kind::String;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = Value::Kind::Bool;
    v.boolean = (s == "true");
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') fail(origin, line, "unterminated array");
    v.kind = Value::Kind::NumberArray;
    std::string body = s.substr(1, s.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = strip(item);
      if (item.empty()) continue;
      double x;
      if (!parse_number(item, x))
        fail(origin, line, "bad array element '" + item + "'");
      v.array.push_back(x);
    }
    return v;
  }
  double x;
  if (!parse_number(s, x)) fail(origin, line, "bad value '" + s + "'");
  v.kind = Value::Kind::Number;
  v.num = x;
  return v;
}

}  // namespace

Document parse(const std::string& text, const std::string& origin) {
  Document doc;
  Table* current = nullptr;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip(strip_comment(raw));
    if (line.empty()) continue;
    if (line.rfind("[[", 0) == 0) {
      if (line.size() < 5 || line.substr(line.size() - 2) != "]]")
        fail(origin, lineno, "malformed table-array header");
      std::string name = strip(line.substr(2, line.size() - 4));
      if (name.empty()) fail(origin, lineno, "empty table-array name");
      doc.table_arrays[name].emplace_back();
      current = &doc.table_arrays[name].back();
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, lineno, "malformed table header");
      std::string name = strip(line.substr(1, line.size() - 2));
      if (name.empty()) fail(origin, lineno, "empty table name");
      current = &doc.tables[name];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "expected key = value");
    std::string key = strip(line.substr(0, eq));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (!current) fail(origin, lineno, "key outside of any table");
    if (current->count(key)) fail(origin, lineno, "duplicate key '" + key + "'");
    (*current)[key] = parse_value(line.substr(eq + 1), origin, lineno);
  }
  return doc;
}

Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

double get_number(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end() || it->second.kind != Value::Kind::Number)
    throw IoError("missing or non-numeric key '" + key + "'");
  return it->second.num;
}

double get_number_or(const Table& t, const std::string& key, double fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (it->second.kind != Value::Kind::Number)
    throw IoError("non-numeric key '" + key + "'");
  return it->second.num;
}

std::string get_string(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end() || it->second.kind != Value::Kind::String)
    throw IoError("missing or non-string key '" + key + "'");
  return it->second.str;
}

std::optional<std::string> get_string_opt(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end()) return std::nullopt;
  if (it->second.kind != Value::Kind::String)
    throw IoError("non-string key '" + key + "'");
  return it->second.str;
}

bool get_bool_or(const Table& t, const std::string& key, bool fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (it->second.kind != Value::Kind::Bool)
    throw IoError("non-boolean key '" + key + "'");
  return it->second.boolean;
}

std::vector<double> get_array(const Table& t, const std::string& key) {
  auto it = t.find(key);
  if (it == t.end() || it->second.kind != Value::Kind::NumberArray)
    throw IoError("missing or non-array key '" + key + "'");
  return it->second.array;
}

}  // namespace toml
}  // namespace cargoflow
