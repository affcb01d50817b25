#include "moreau/toml_lite.hpp"

#include "moreau/error.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace moreau::toml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  std::ostringstream os;
  os << "toml line " << line << ": " << what;
  throw Error(ErrorCode::kInvalidConfig, os.str());
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// strips a trailing comment that is not inside a string
std::string_view strip_comment(std::string_view s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (quote == '"' && s[i] == '\\') {
      ++i;
    } else if (quote != 0) {
      if (s[i] == quote) quote = 0;
    } else if (s[i] == '"' || s[i] == '\'') {
      quote = s[i];
    } else if (s[i] == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

  Value parse_all() {
    Value v = parse_value();
    skip_ws();
    if (pos_ != s_.size()) fail(line_, "trailing characters after value");
    return v;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                s_[pos_] == '\r')) {
      ++pos_;
    }
  }

  Value parse_value() {
    skip_ws();
    if (pos_ >= s_.size()) fail(line_, "missing value");
    const char c = s_[pos_];
    if (c == '"') return Value{parse_string()};
    if (c == '\'') return Value{parse_literal_string()};
    if (c == '[') return Value{parse_array()};
    return parse_scalar();
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail(line_, "dangling escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(line_, std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail(line_, "unterminated string");
    ++pos_;
    return out;
  }

  std::string parse_literal_string() {
    const std::size_t end = s_.find('\'', pos_ + 1);
    if (end == std::string_view::npos) fail(line_, "unterminated string");
    std::string out(s_.substr(pos_ + 1, end - pos_ - 1));
    pos_ = end + 1;
    return out;
  }

  Array parse_array() {
    ++pos_;  // '['
    Array out;
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return out;
    }
    for (;;) {
      out.push_back(parse_value());
      skip_ws();
      if (pos_ >= s_.size()) fail(line_, "unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return out;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return out;
      }
      fail(line_, "expected ',' or ']' in array");
    }
  }

  Value parse_scalar() {
    const auto end = s_.find_first_of(",] \t\r\n", pos_);
    std::string token(s_.substr(pos_, end == std::string_view::npos ? s_.size() - pos_ : end - pos_));
    pos_ += token.size();
    if (token == "true") return Value{true};
    if (token == "false") return Value{false};
    if (token == "inf" || token == "+inf") return Value{std::numeric_limits<double>::infinity()};
    if (token == "-inf") return Value{-std::numeric_limits<double>::infinity()};
    if (token == "nan" || token == "+nan" || token == "-nan") {
      return Value{std::numeric_limits<double>::quiet_NaN()};
    }
    std::string digits;
    for (char c : token) {
      if (c != '_') digits.push_back(c);
    }
    if (!digits.empty() && digits.front() == '+') digits.erase(0, 1);
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* first = digits.data();
    const char* last = digits.data() + digits.size();
    if (is_float) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr != last) fail(line_, "bad float '" + token + "'");
      return Value{v};
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(line_, "bad value '" + token + "'");
    return Value{v};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

int bracket_balance(std::string_view s) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (quote == '"' && s[i] == '\\') {
      ++i;
    } else if (quote != 0) {
      if (s[i] == quote) quote = 0;
    } else if (s[i] == '"' || s[i] == '\'') {
      quote = s[i];
    } else if (s[i] == '[') {
      ++depth;
    } else if (s[i] == ']') {
      --depth;
    }
  }
  return depth;
}

bool bare_key(std::string_view key) {
  if (key.empty()) return false;
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  out.push_back('"');
  return out;
}

void write_value(std::ostringstream& os, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          os << (x ? "true" : "false");
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          os << x;
        } else if constexpr (std::is_same_v<T, double>) {
          os << format_double(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          os << quote(x);
        } else {
          os << '[';
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) os << ", ";
            write_value(os, x[i]);
          }
          os << ']';
        }
      },
      v.data);
}

}  // namespace

double Value::as_double() const {
  if (const auto* d = std::get_if<double>(&data)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
  throw Error(ErrorCode::kInvalidConfig, "expected a number");
}

std::int64_t Value::as_int() const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return *i;
  throw Error(ErrorCode::kInvalidConfig, "expected an integer");
}

bool Value::as_bool() const {
  if (const auto* b = std::get_if<bool>(&data)) return *b;
  throw Error(ErrorCode::kInvalidConfig, "expected a boolean");
}

const std::string& Value::as_string() const {
  if (const auto* s = std::get_if<std::string>(&data)) return *s;
  throw Error(ErrorCode::kInvalidConfig, "expected a string");
}

const Array& Value::as_array() const {
  if (const auto* a = std::get_if<Array>(&data)) return *a;
  throw Error(ErrorCode::kInvalidConfig, "expected an array");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

Document parse(std::string_view text) {
  Document doc;
  doc[""];
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string logical(strip_comment(text.substr(pos, nl - pos)));
    ++line_no;
    const int start_line = line_no;
    pos = nl + 1;
    // arrays may span lines
    while (bracket_balance(logical) > 0 && pos <= text.size()) {
      auto next = text.find('\n', pos);
      if (next == std::string_view::npos) next = text.size();
      logical += "\n";
      logical += strip_comment(text.substr(pos, next - pos));
      ++line_no;
      pos = next + 1;
    }
    const std::string_view line = trim(logical);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(start_line, "malformed table header");
      current = std::string(trim(line.substr(1, line.size() - 2)));
      if (!bare_key(current)) fail(start_line, "unsupported table name '" + current + "'");
      if (doc.count(current) && !doc[current].empty()) fail(start_line, "duplicate table");
      doc[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(start_line, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (!bare_key(key)) fail(start_line, "unsupported key '" + key + "'");
    Table& table = doc[current];
    if (table.count(key)) fail(start_line, "duplicate key '" + key + "'");
    table[key] = ValueParser(line.substr(eq + 1), start_line).parse_all();
  }
  return doc;
}

std::string serialize(const Document& doc) {
  std::ostringstream os;
  bool first = true;
  auto write_table = [&](const Table& t) {
    for (const auto& [k, v] : t) {
      os << k << " = ";
      write_value(os, v);
      os << '\n';
    }
  };
  if (auto it = doc.find(""); it != doc.end() && !it->second.empty()) {
    write_table(it->second);
    first = false;
  }
  for (const auto& [name, table] : doc) {
    if (name.empty()) continue;
    if (!first) os << '\n';
    first = false;
    os << '[' << name << "]\n";
    write_table(table);
  }
  return os.str();
}

}  // namespace moreau::toml
