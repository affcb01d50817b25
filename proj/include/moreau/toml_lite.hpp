#pragma once

// Minimal TOML subset for experiment configs: [table] headers, key = value
// with basic and literal strings, integers, floats (incl. inf/nan), booleans and arrays of
// those. No inline tables, dotted keys, dates or multi-line strings.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace moreau::toml {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> data;

  bool is_number() const {
    return std::holds_alternative<std::int64_t>(data) || std::holds_alternative<double>(data);
  }
  double as_double() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const Array& as_array() const;

  bool operator==(const Value&) const = default;
};

using Table = std::map<std::string, Value>;
/// Table name -> table; "" holds keys that precede the first header.
using Document = std::map<std::string, Table>;

Document parse(std::string_view text);
std::string serialize(const Document& doc);

/// Shortest representation that parses back to the same double; always
/// contains '.', 'e', "inf" or "nan" so it reads as a float.
std::string format_double(double v);

}  // namespace moreau::toml
