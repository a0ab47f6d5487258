#include "msmi/toml.hpp"

#include <nlohmann/json.hpp>

#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "msmi/errors.hpp"

namespace msmi::toml {
namespace {

bool is_bare_key_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '-';
}

struct LineParser {
  std::string_view s;
  std::size_t pos = 0;
  std::size_t line_no;

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_no); }

  bool done() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }

  void skip_ws() {
    while (!done() && (peek() == ' ' || peek() == '\t')) ++pos;
  }

  /// Only whitespace or a comment may remain.
  void expect_end(const char* context) {
    skip_ws();
    if (!done() && peek() != '#') {
      fail(std::string("unexpected trailing characters after ") + context);
    }
  }

  void append_codepoint(std::string& out, std::uint32_t cp) {
    if (cp <= 0x7f) {
      out.push_back(static_cast<char>(cp));
    } else if (cp <= 0x7ff) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp <= 0xffff) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp <= 0x10ffff) {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      fail("unicode escape out of range");
    }
  }

  std::string parse_basic_string() {
    assert(peek() == '"');
    ++pos;
    std::string out;
    while (!done() && peek() != '"') {
      char c = s[pos++];
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (done()) fail("dangling escape in string");
      const char esc = s[pos++];
      switch (esc) {
        case 'b': out.push_back('\b'); break;
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'f': out.push_back('\f'); break;
        case 'r': out.push_back('\r'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'u':
        case 'U': {
          const std::size_t digits = esc == 'u' ? 4 : 8;
          if (pos + digits > s.size()) fail("truncated unicode escape");
          std::uint32_t cp = 0;
          for (std::size_t i = 0; i < digits; ++i) {
            const char h = s[pos++];
            cp <<= 4;
            if (h >= '0' && h <= '9') cp |= static_cast<std::uint32_t>(h - '0');
            else if (h >= 'a' && h <= 'f') cp |= static_cast<std::uint32_t>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') cp |= static_cast<std::uint32_t>(h - 'A' + 10);
            else fail("invalid unicode escape digit");
          }
          append_codepoint(out, cp);
          break;
        }
        default:
          fail(std::string("unsupported escape \\") + esc);
      }
    }
    if (done()) fail("unterminated string");
    ++pos;  // closing quote
    return out;
  }

  std::string parse_literal_string() {
    assert(peek() == '\'');
    ++pos;
    const std::size_t start = pos;
    while (!done() && peek() != '\'') ++pos;
    if (done()) fail("unterminated literal string");
    std::string out(s.substr(start, pos - start));
    ++pos;
    return out;
  }

  /// Dotted key: bare or quoted segments separated by dots; returns the
  /// flattened path.
  std::string parse_key() {
    std::string path;
    for (;;) {
      skip_ws();
      if (done()) fail("expected a key");
      std::string segment;
      if (peek() == '"') {
        segment = parse_basic_string();
      } else if (peek() == '\'') {
        segment = parse_literal_string();
      } else {
        const std::size_t start = pos;
        while (!done() && is_bare_key_char(peek())) ++pos;
        if (pos == start) fail("expected a key");
        segment = std::string(s.substr(start, pos - start));
      }
      if (!path.empty()) path += '.';
      path += segment;
      skip_ws();
      if (!done() && peek() == '.') {
        ++pos;
        continue;
      }
      return path;
    }
  }

  bool at_word(std::string_view word) const {
    if (s.substr(pos, word.size()) != word) return false;
    const std::size_t after = pos + word.size();
    return after >= s.size() || !is_bare_key_char(s[after]);
  }

  Scalar parse_number() {
    const std::size_t start = pos;
    while (!done()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == ',' || c == ']' || c == '#') break;
      ++pos;
    }
    std::string token(s.substr(start, pos - start));
    if (token.empty()) fail("expected a value");

    std::string cleaned;
    for (char c : token) {
      if (c != '_') cleaned.push_back(c);
    }

    const bool looks_float = cleaned.find_first_of(".eE") != std::string::npos ||
                             cleaned.find("inf") != std::string::npos ||
                             cleaned.find("nan") != std::string::npos;
    if (!looks_float) {
      std::int64_t value = 0;
      const auto [ptr, ec] =
          std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
      if (ec == std::errc() && ptr == cleaned.data() + cleaned.size()) {
        return value;
      }
      fail("invalid integer \"" + token + "\"");
    }
    char* end = nullptr;
    const double value = std::strtod(cleaned.c_str(), &end);
    if (end == nullptr || *end != '\0' || cleaned.empty()) {
      fail("invalid float \"" + token + "\"");
    }
    return value;
  }

  Scalar parse_scalar() {
    skip_ws();
    if (done()) fail("expected a value");
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    if (at_word("true")) {
      pos += 4;
      return true;
    }
    if (at_word("false")) {
      pos += 5;
      return false;
    }
    return parse_number();
  }

  Value parse_value() {
    skip_ws();
    if (done()) fail("expected a value");
    if (peek() != '[') {
      Scalar scalar = parse_scalar();
      return std::visit([](auto&& v) -> Value { return std::move(v); }, std::move(scalar));
    }
    ++pos;  // '['
    std::vector<Scalar> array;
    for (;;) {
      skip_ws();
      if (done()) fail("unterminated array");
      if (peek() == ']') {
        ++pos;
        return array;
      }
      array.push_back(parse_scalar());
      skip_ws();
      if (done()) fail("unterminated array");
      if (peek() == ',') {
        ++pos;
        continue;
      }
      if (peek() == ']') {
        ++pos;
        return array;
      }
      fail("expected ',' or ']' in array");
    }
  }
};

bool needs_quoting(const std::string& segment) {
  if (segment.empty()) return true;
  for (char c : segment) {
    if (!is_bare_key_char(c)) return true;
  }
  return false;
}

void write_string(std::ostream& out, const std::string& value) {
  out << '"';
  for (char c : value) {
    switch (c) {
      case '"': out << "\\\""; break;
      case '\\': out << "\\\\"; break;
      case '\b': out << "\\b"; break;
      case '\t': out << "\\t"; break;
      case '\n': out << "\\n"; break;
      case '\f': out << "\\f"; break;
      case '\r': out << "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buffer[8];
          std::snprintf(buffer, sizeof(buffer), "\\u%04x", c);
          out << buffer;
        } else {
          out << c;
        }
    }
  }
  out << '"';
}

void write_double(std::ostream& out, double value) {
  if (std::isnan(value)) {
    out << "nan";
  } else if (std::isinf(value)) {
    out << (value > 0 ? "inf" : "-inf");
  } else {
    // Shortest round-trip form; integral values keep a ".0" so they reparse
    // as floats.
    out << nlohmann::json(value).dump();
  }
}

void write_scalar(std::ostream& out, const Scalar& scalar) {
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          write_string(out, v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          out << v;
        } else if constexpr (std::is_same_v<T, double>) {
          write_double(out, v);
        } else {
          out << (v ? "true" : "false");
        }
      },
      scalar);
}

void write_key(std::ostream& out, const std::string& key) {
  std::size_t start = 0;
  bool first = true;
  while (start <= key.size()) {
    const std::size_t dot = key.find('.', start);
    const std::string segment =
        key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!first) out << '.';
    if (needs_quoting(segment)) {
      write_string(out, segment);
    } else {
      out << segment;
    }
    first = false;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
}

const char* type_name(const Value& value) {
  switch (value.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "boolean";
    default: return "array";
  }
}

}  // namespace

Table parse(std::string_view text) {
  Table table;
  std::string prefix;
  std::size_t line_no = 0;
  std::size_t begin = 0;

  while (begin <= text.size()) {
    const std::size_t end = text.find('\n', begin);
    std::string_view line =
        text.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;

    LineParser p{line, 0, line_no};
    p.skip_ws();
    if (!p.done() && p.peek() != '#') {
      if (p.peek() == '[') {
        ++p.pos;
        prefix = p.parse_key();
        p.skip_ws();
        if (p.done() || p.peek() != ']') p.fail("expected ']' after table name");
        ++p.pos;
        p.expect_end("table header");
      } else {
        const std::string key = p.parse_key();
        p.skip_ws();
        if (p.done() || p.peek() != '=') p.fail("expected '=' after key \"" + key + "\"");
        ++p.pos;
        Value value = p.parse_value();
        p.expect_end("value");

        const std::string full_key = prefix.empty() ? key : prefix + "." + key;
        if (table.contains(full_key)) {
          p.fail("duplicate key \"" + full_key + "\"");
        }
        table.emplace(full_key, std::move(value));
      }
    }

    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return table;
}

Table parse_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string serialize(const Table& table) {
  std::ostringstream out;
  for (const auto& [key, value] : table) {
    write_key(out, key);
    out << " = ";
    if (std::holds_alternative<std::vector<Scalar>>(value)) {
      const auto& array = std::get<std::vector<Scalar>>(value);
      out << '[';
      for (std::size_t i = 0; i < array.size(); ++i) {
        if (i > 0) out << ", ";
        write_scalar(out, array[i]);
      }
      out << ']';
    } else {
      std::visit(
          [&out](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (!std::is_same_v<T, std::vector<Scalar>>) {
              write_scalar(out, Scalar(v));
            }
          },
          value);
    }
    out << '\n';
  }
  return out.str();
}

namespace {

const Value* find(const Table& table, const std::string& key) {
  const auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

[[noreturn]] void wrong_type(const std::string& key, const Value& value, const char* expected) {
  throw ConfigError("config key \"" + key + "\" has type " + type_name(value) + ", expected " +
                    expected);
}

}  // namespace

std::optional<std::string> get_string(const Table& table, const std::string& key) {
  const Value* value = find(table, key);
  if (value == nullptr) return std::nullopt;
  if (!std::holds_alternative<std::string>(*value)) wrong_type(key, *value, "string");
  return std::get<std::string>(*value);
}

std::optional<std::int64_t> get_int(const Table& table, const std::string& key) {
  const Value* value = find(table, key);
  if (value == nullptr) return std::nullopt;
  if (!std::holds_alternative<std::int64_t>(*value)) wrong_type(key, *value, "integer");
  return std::get<std::int64_t>(*value);
}

std::optional<double> get_double(const Table& table, const std::string& key) {
  const Value* value = find(table, key);
  if (value == nullptr) return std::nullopt;
  if (std::holds_alternative<std::int64_t>(*value)) {
    return static_cast<double>(std::get<std::int64_t>(*value));
  }
  if (!std::holds_alternative<double>(*value)) wrong_type(key, *value, "float");
  return std::get<double>(*value);
}

std::optional<bool> get_bool(const Table& table, const std::string& key) {
  const Value* value = find(table, key);
  if (value == nullptr) return std::nullopt;
  if (!std::holds_alternative<bool>(*value)) wrong_type(key, *value, "boolean");
  return std::get<bool>(*value);
}

std::optional<std::vector<std::string>> get_string_array(const Table& table,
                                                         const std::string& key) {
  const Value* value = find(table, key);
  if (value == nullptr) return std::nullopt;
  if (!std::holds_alternative<std::vector<Scalar>>(*value)) {
    wrong_type(key, *value, "array of strings");
  }
  std::vector<std::string> out;
  for (const Scalar& scalar : std::get<std::vector<Scalar>>(*value)) {
    if (!std::holds_alternative<std::string>(scalar)) {
      throw ConfigError("config key \"" + key + "\" must be an array of strings");
    }
    out.push_back(std::get<std::string>(scalar));
  }
  return out;
}

}  // namespace msmi::toml
