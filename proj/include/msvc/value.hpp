#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "msvc/errors.hpp"
#include "msvc/util.hpp"

namespace msvc {

class Value;

/// Schema-level tags. `any` is a schema-only relaxation used for columns that
/// mix result kinds with failure records; a Value itself is never `any`.
enum class ValueKind { null_, bool_, int_, float_, text, bytes, list, map, any };

constexpr std::string_view kind_name(ValueKind k) {
  switch (k) {
    case ValueKind::null_: return "null";
    case ValueKind::bool_: return "bool";
    case ValueKind::int_: return "int";
    case ValueKind::float_: return "float";
    case ValueKind::text: return "text";
    case ValueKind::bytes: return "bytes";
    case ValueKind::list: return "list";
    case ValueKind::map: return "map";
    case ValueKind::any: return "any";
  }
  return "?";
}

/// Maximum nesting depth accepted from external input.
inline constexpr int kMaxValueDepth = 32;

/// Immutable-ish tagged union for cell values. Map keys are unique by
/// construction (std::map); serialization is therefore deterministic.
class Value {
 public:
  using List = std::vector<Value>;
  using Map = std::map<std::string, Value>;

  Value() : data_(std::monostate{}) {}

  static Value null() { return Value(); }
  static Value boolean(bool b) { return Value(Data(b)); }
  static Value integer(std::int64_t i) { return Value(Data(i)); }
  static Value real(double d) { return Value(Data(d)); }
  static Value text(std::string s) { return Value(Data(std::move(s))); }
  static Value bytes(std::vector<std::uint8_t> b) { return Value(Data(std::move(b))); }
  static Value list(List items) { return Value(Data(std::move(items))); }
  static Value map(Map entries) { return Value(Data(std::move(entries))); }

  ValueKind kind() const {
    return static_cast<ValueKind>(data_.index());
  }

  bool is_null() const { return kind() == ValueKind::null_; }

  bool as_bool() const { return get<bool>(ValueKind::bool_); }
  std::int64_t as_int() const { return get<std::int64_t>(ValueKind::int_); }
  double as_float() const { return get<double>(ValueKind::float_); }
  const std::string& as_text() const { return get<std::string>(ValueKind::text); }
  const std::vector<std::uint8_t>& as_bytes() const {
    return get<std::vector<std::uint8_t>>(ValueKind::bytes);
  }
  const List& as_list() const { return get<List>(ValueKind::list); }
  const Map& as_map() const { return get<Map>(ValueKind::map); }

  /// Numeric view: Int or Float as double.
  double as_number() const {
    if (kind() == ValueKind::int_) return static_cast<double>(as_int());
    return as_float();
  }

  bool is_number() const {
    return kind() == ValueKind::int_ || kind() == ValueKind::float_;
  }

  /// Map lookup returning nullptr when missing or when not a map.
  const Value* find(std::string_view key) const {
    if (kind() != ValueKind::map) return nullptr;
    auto it = as_map().find(std::string(key));
    return it == as_map().end() ? nullptr : &it->second;
  }

  int depth() const {
    switch (kind()) {
      case ValueKind::list: {
        int d = 0;
        for (const Value& v : as_list()) d = std::max(d, v.depth());
        return 1 + d;
      }
      case ValueKind::map: {
        int d = 0;
        for (const auto& [k, v] : as_map()) d = std::max(d, v.depth());
        return 1 + d;
      }
      default:
        return 1;
    }
  }

  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  using Data = std::variant<std::monostate, bool, std::int64_t, double, std::string,
                            std::vector<std::uint8_t>, List, Map>;

  explicit Value(Data d) : data_(std::move(d)) {}

  template <typename T>
  const T& get(ValueKind expected) const {
    if (kind() != expected)
      raise(ErrorKind::schema_mismatch, "value is " + std::string(kind_name(kind())) +
                                            ", expected " + std::string(kind_name(expected)));
    return std::get<T>(data_);
  }

  Data data_;
};

/// True when `v` may occupy a column declared as `k`. Null fits anywhere;
/// `any` accepts everything.
inline bool kind_accepts(ValueKind k, const Value& v) {
  return k == ValueKind::any || v.is_null() || v.kind() == k;
}

// ---------------------------------------------------------------------------
// JSON bridging

namespace detail {

inline Value value_from_json(const nlohmann::json& j, int depth) {
  if (depth > kMaxValueDepth) raise(ErrorKind::depth_exceeded, "JSON nesting exceeds limit");
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::null: return Value::null();
    case json::value_t::boolean: return Value::boolean(j.get<bool>());
    case json::value_t::number_integer: return Value::integer(j.get<std::int64_t>());
    case json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u <= static_cast<std::uint64_t>(INT64_MAX))
        return Value::integer(static_cast<std::int64_t>(u));
      return Value::real(static_cast<double>(u));  // not losslessly an Int
    }
    case json::value_t::number_float: return Value::real(j.get<double>());
    case json::value_t::string: return Value::text(j.get<std::string>());
    case json::value_t::array: {
      Value::List items;
      items.reserve(j.size());
      for (const auto& e : j) items.push_back(value_from_json(e, depth + 1));
      return Value::list(std::move(items));
    }
    case json::value_t::object: {
      Value::Map entries;
      for (auto it = j.begin(); it != j.end(); ++it)
        entries.emplace(it.key(), value_from_json(it.value(), depth + 1));
      return Value::map(std::move(entries));
    }
    default:
      raise(ErrorKind::malformed_json, "unsupported JSON value type");
  }
}

/// Structural nesting depth of raw JSON text, counted without parsing.
/// Guards the recursive DOM build against pathological inputs.
inline int json_text_depth(std::string_view s) {
  int depth = 0, max_depth = 0;
  bool in_string = false, escaped = false;
  for (char c : s) {
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"')
      in_string = true;
    else if (c == '{' || c == '[')
      max_depth = std::max(max_depth, ++depth);
    else if (c == '}' || c == ']')
      --depth;
  }
  return max_depth;
}

}  // namespace detail

/// Parses JSON text into the Value union. Objects become Map, arrays List;
/// numbers become Int when the token is an integer representable in 64 bits,
/// Float otherwise.
inline Value value_from_json_text(std::string_view text) {
  if (detail::json_text_depth(text) > kMaxValueDepth)
    raise(ErrorKind::depth_exceeded, "JSON nesting exceeds limit");
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) raise(ErrorKind::malformed_json, "invalid JSON");
  return detail::value_from_json(j, 1);
}

/// Value -> nlohmann DOM. Bytes serialize as base64 text (one-way).
inline nlohmann::json value_to_json(const Value& v) {
  using nlohmann::json;
  switch (v.kind()) {
    case ValueKind::null_: return nullptr;
    case ValueKind::bool_: return v.as_bool();
    case ValueKind::int_: return v.as_int();
    case ValueKind::float_: return v.as_float();
    case ValueKind::text: return v.as_text();
    case ValueKind::bytes: return base64_encode(v.as_bytes());
    case ValueKind::list: {
      json arr = json::array();
      for (const Value& e : v.as_list()) arr.push_back(value_to_json(e));
      return arr;
    }
    case ValueKind::map: {
      json obj = json::object();
      for (const auto& [k, e] : v.as_map()) obj[k] = value_to_json(e);
      return obj;
    }
    case ValueKind::any: break;
  }
  raise(ErrorKind::schema_mismatch, "unserializable value");
}

inline std::string value_to_json_text(const Value& v) { return value_to_json(v).dump(); }

}  // namespace msvc
