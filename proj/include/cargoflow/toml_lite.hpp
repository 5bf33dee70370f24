#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cargoflow {

/// Minimal TOML subset used by the model and protocol files: `[table]`,
/// `[[array-of-tables]]`, and `key = value` with string, number, boolean and
/// flat numeric-array values. Comments start with '#'.
namespace toml {

struct Value {
  enum class Kind { Number, String, Bool, NumberArray };
  Kind kind = Kind::Number;
  double num = 0;
  std::string str;
  bool boolean = false;
  std::vector<double> array;
};

using Table = std::map<std::string, Value>;

struct Document {
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;
};

Document parse(const std::string& text, const std::string& origin = "<string>");
Document parse_file(const std::string& path);

/// Lookup helpers; all throw IoError with the key name when missing or of the
/// wrong type.
double get_number(const Table& t, const std::string& key);
double get_number_or(const Table& t, const std::string& key, double fallback);
std::string get_string(const Table& t, const std::string& key);
std::optional<std::string> get_string_opt(const Table& t, const std::string& key);
bool get_bool_or(const Table& t, const std::string& key, bool fallback);
std::vector<double> get_array(const Table& t, const std::string& key);

}  // namespace toml

}  // namespace cargoflow
