#include "gne/scenarios/document.hpp"

#include "gne/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace gne::config {

namespace {

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class Parser {
 public:
  Parser(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  int line() const { return line_; }

  void skip_blanks() {
    while (!done() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!done() && peek() != '\n') ++pos_;
    }
  }

  /// Blanks, comments and newlines (inside arrays and between statements).
  void skip_space() {
    for (;;) {
      skip_blanks();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
        ++line_;
        continue;
      }
      return;
    }
  }

  void expect_line_end() {
    skip_blanks();
    skip_comment();
    if (done()) return;
    if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "' after value");
  }

  std::string key() {
    const std::size_t start = pos_;
    while (!done() && (is_key_char(peek()) || peek() == '.')) ++pos_;
    std::string k(text_.substr(start, pos_ - start));
    if (k.empty()) fail("expected a key");
    if (k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos) fail("malformed key '" + k + "'");
    return k;
  }

  Value value() {
    skip_blanks();
    Value v;
    v.line = line_;
    const char c = peek();
    if (c == '[') {
      v.data = array();
    } else if (c == '"') {
      v.data = quoted();
    } else {
      const std::size_t start = pos_;
      while (!done() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                         peek() == '.' || peek() == '_')) {
        ++pos_;
      }
      const std::string token(text_.substr(start, pos_ - start));
      if (token.empty()) fail("expected a value");
      if (token == "true" || token == "false") {
        v.data = token == "true";
      } else {
        v.data = number(token);
      }
    }
    return v;
  }

 private:
  double number(std::string token) {
    std::erase(token, '_');
    const std::string body = (token[0] == '+' || token[0] == '-') ? token.substr(1) : token;
    const double sign = token[0] == '-' ? -1.0 : 1.0;
    if (body == "inf") return sign * INFINITY;
    if (body == "nan") return NAN;
    char* end = nullptr;
    const double out = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(out)) fail("invalid number '" + token + "'");
    return out;
  }

  std::string quoted() {
    ++pos_;  // opening quote
    std::string out;
    for (;;) {
      if (done() || peek() == '\n') fail("unterminated string");
      char c = text_[pos_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (done()) fail("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
  }

  Value::Array array() {
    const int open_line = line_;
    ++pos_;  // '['
    Value::Array out;
    for (;;) {
      skip_space();
      if (done()) {
        line_ = open_line;
        fail("unterminated array");
      }
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(value());
      skip_space();
      if (done()) {
        line_ = open_line;
        fail("unterminated array");
      }
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;

  friend class gne::config::Document;
};

const char* kind_name(const Value& v) {
  if (v.is_number()) return "number";
  if (v.is_bool()) return "boolean";
  if (v.is_string()) return "string";
  return "array";
}

void write_value(std::ostream& os, const Value& v) {
  if (v.is_number()) {
    os << format_number(std::get<double>(v.data));
  } else if (v.is_bool()) {
    os << (std::get<bool>(v.data) ? "true" : "false");
  } else if (v.is_string()) {
    os << '"';
    for (char c : std::get<std::string>(v.data)) {
      switch (c) {
        case '"': os << "\\\""; break;
        case '\\': os << "\\\\"; break;
        case '\n': os << "\\n"; break;
        case '\t': os << "\\t"; break;
        default: os << c;
      }
    }
    os << '"';
  } else {
    const auto& arr = std::get<Value::Array>(v.data);
    os << '[';
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (k) os << ", ";
      write_value(os, arr[k]);
    }
    os << ']';
  }
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string out(buf);
  // keep numbers recognisable as floats when written back
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

Document Document::parse(std::string_view text, std::string source) {
  Document doc;
  doc.source_ = source;
  Parser p(text, std::move(source));
  std::string section;
  std::map<std::string, bool> seen_sections;
  for (;;) {
    p.skip_space();
    if (p.done()) break;
    if (p.peek() == '[') {
      p.pos_++;
      p.skip_blanks();
      section = p.key();
      p.skip_blanks();
      if (p.peek() != ']') p.fail("expected ']' after section name");
      p.pos_++;
      if (seen_sections[section]) p.fail("section [" + section + "] appears twice");
      seen_sections[section] = true;
      p.expect_line_end();
      continue;
    }
    const int key_line = p.line();
    const std::string local = p.key();
    p.skip_blanks();
    if (p.peek() != '=') p.fail("expected '=' after key '" + local + "'");
    p.pos_++;
    Value v = p.value();
    v.line = key_line;
    p.expect_line_end();
    const std::string full = section.empty() ? local : section + "." + local;
    if (doc.has(full)) p.fail("duplicate key '" + full + "'");
    doc.entries_.emplace_back(full, std::move(v));
  }
  return doc;
}

Document Document::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

Value Document::parse_value(std::string_view text, std::string source) {
  Parser p(text, std::move(source));
  p.skip_space();
  Value v = p.value();
  p.skip_space();
  if (!p.done()) p.fail("trailing characters after value");
  return v;
}

bool Document::has(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return true;
  }
  return false;
}

const Value& Document::at(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  throw ConfigError(source_ + ": missing required key '" + key + "'");
}

void Document::set(const std::string& key, Value value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      value.line = v.line;
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(key, std::move(value));
}

std::string Document::where(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return source_ + ":" + std::to_string(v.line);
  }
  return source_;
}

double Document::number(const std::string& key) const {
  const Value& v = at(key);
  if (!v.is_number()) {
    throw ConfigError(where(key) + ": '" + key + "' must be a number, found " + kind_name(v));
  }
  return std::get<double>(v.data);
}

double Document::number_or(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long Document::integer(const std::string& key) const {
  const double v = number(key);
  if (std::floor(v) != v || std::abs(v) > 1e15) {
    throw ConfigError(where(key) + ": '" + key + "' must be an integer");
  }
  return static_cast<long>(v);
}

long Document::integer_or(const std::string& key, long fallback) const {
  return has(key) ? integer(key) : fallback;
}

bool Document::boolean_or(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Value& v = at(key);
  if (!v.is_bool()) throw ConfigError(where(key) + ": '" + key + "' must be true or false");
  return std::get<bool>(v.data);
}

std::string Document::string(const std::string& key) const {
  const Value& v = at(key);
  if (!v.is_string()) {
    throw ConfigError(where(key) + ": '" + key + "' must be a string, found " + kind_name(v));
  }
  return std::get<std::string>(v.data);
}

std::string Document::string_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? string(key) : fallback;
}

std::vector<double> Document::numbers(const std::string& key) const {
  const Value& v = at(key);
  if (!v.is_array()) throw ConfigError(where(key) + ": '" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : std::get<Value::Array>(v.data)) {
    if (!item.is_number()) throw ConfigError(where(key) + ": '" + key + "' must contain only numbers");
    out.push_back(std::get<double>(item.data));
  }
  return out;
}

std::vector<std::vector<double>> Document::number_rows(const std::string& key) const {
  const Value& v = at(key);
  if (!v.is_array()) throw ConfigError(where(key) + ": '" + key + "' must be an array of arrays");
  std::vector<std::vector<double>> out;
  for (const auto& row : std::get<Value::Array>(v.data)) {
    if (!row.is_array()) throw ConfigError(where(key) + ": '" + key + "' must be an array of arrays");
    std::vector<double> r;
    for (const auto& item : std::get<Value::Array>(row.data)) {
      if (!item.is_number()) throw ConfigError(where(key) + ": '" + key + "' must contain only numbers");
      r.push_back(std::get<double>(item.data));
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string Document::serialize() const {
  std::ostringstream os;
  std::vector<std::string> sections;
  for (const auto& [k, v] : entries_) {
    const auto dot = k.rfind('.');
    if (dot == std::string::npos) {
      os << k << " = ";
      write_value(os, v);
      os << '\n';
    } else if (std::find(sections.begin(), sections.end(), k.substr(0, dot)) == sections.end()) {
      sections.push_back(k.substr(0, dot));
    }
  }
  for (const auto& sec : sections) {
    os << "\n[" << sec << "]\n";
    for (const auto& [k, v] : entries_) {
      const auto dot = k.rfind('.');
      if (dot != std::string::npos && k.substr(0, dot) == sec) {
        os << k.substr(dot + 1) << " = ";
        write_value(os, v);
        os << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace gne::config
