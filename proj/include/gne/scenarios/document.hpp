#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gne::config {

/// One value of a config document: number, boolean, string or (nested) array.
struct Value {
  using Array = std::vector<Value>;
  std::variant<double, bool, std::string, Array> data = 0.0;
  int line = 0;

  bool is_number() const noexcept { return std::holds_alternative<double>(data); }
  bool is_bool() const noexcept { return std::holds_alternative<bool>(data); }
  bool is_string() const noexcept { return std::holds_alternative<std::string>(data); }
  bool is_array() const noexcept { return std::holds_alternative<Array>(data); }

  static Value number(double v) { return Value{v, 0}; }
  static Value boolean(bool v) { return Value{v, 0}; }
  static Value string(std::string v) { return Value{std::move(v), 0}; }
  static Value array(Array v) { return Value{std::move(v), 0}; }
};

/// Flat view of a TOML-subset file: `[section.sub]` headers, `key = value`
/// lines, `#` comments, arrays that may span lines. Keys are stored fully
/// qualified ("integrator.step") in file order.
class Document {
 public:
  static Document parse(std::string_view text, std::string source = "<config>");
  static Document load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  const Value& at(const std::string& key) const;
  /// Inserts or replaces; new keys go to the end.
  void set(const std::string& key, Value value);
  /// Parses `text` as a single value (used for command-line overrides).
  static Value parse_value(std::string_view text, std::string source = "<override>");

  const std::vector<std::pair<std::string, Value>>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }

  /// "<source>:<line>: <message>" for a key, or just the source when the key is absent.
  std::string where(const std::string& key) const;

  // Typed accessors; each throws ConfigError naming the key and line.
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  long integer(const std::string& key) const;
  long integer_or(const std::string& key, long fallback) const;
  bool boolean_or(const std::string& key, bool fallback) const;
  std::string string(const std::string& key) const;
  std::string string_or(const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<std::vector<double>> number_rows(const std::string& key) const;

  /// Text in the same grammar; parse(serialize()) reproduces every value exactly.
  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, Value>> entries_;
  std::string source_;
};

/// Shortest text that reads back as the same double.
std::string format_number(double v);

}  // namespace gne::config
