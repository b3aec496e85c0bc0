#pragma once

// Canonical textual object notation used for every signed payload, wire body
// and data file. It is a strict JSON subset: maps with string keys, strings,
// 64-bit integers, booleans and lists. No floats, no null.
//
// Canonical form: map keys sorted by unsigned byte order, no whitespace,
// integers in minimal base-10 form, strings escape only '"', '\\' and bytes
// below 0x20 (as lowercase \u00xx). Every other byte is emitted verbatim.

#include <concepts>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cardpay/error.hpp"

namespace cardpay::canonical {

class Value;
using List = std::vector<Value>;
using Map = std::map<std::string, Value, std::less<>>;

class Value {
 public:
  using Storage = std::variant<bool, std::int64_t, std::string, List, Map>;

  Value() : v_(Map{}) {}
  Value(bool b) : v_(b) {}
  template <std::integral T>
    requires(!std::same_as<T, bool> && !std::same_as<T, char>)
  Value(T i) : v_(checked_int(i)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(std::string_view s) : v_(std::string(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(List l) : v_(std::move(l)) {}
  Value(Map m) : v_(std::move(m)) {}
  template <std::floating_point T>
  Value(T) = delete;

  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_list() const { return std::holds_alternative<List>(v_); }
  bool is_map() const { return std::holds_alternative<Map>(v_); }

  // Typed accessors throw MalformedInput on a type mismatch so that decoding
  // code can read fields without repeating checks.
  bool as_bool() const;
  std::int64_t as_int() const;
  const std::string& as_string() const;
  const List& as_list() const;
  List& as_list();
  const Map& as_map() const;
  Map& as_map();

  // Map field access. `at` throws MalformedInput for a missing key.
  const Value& at(std::string_view key) const;
  const Value* find(std::string_view key) const;
  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const Storage& storage() const { return v_; }

  friend bool operator==(const Value&, const Value&) = default;

 private:
  template <std::integral T>
  static std::int64_t checked_int(T i) {
    if constexpr (std::unsigned_integral<T> && sizeof(T) >= sizeof(std::int64_t)) {
      if (i > static_cast<T>(INT64_MAX))
        fail(ErrorCode::UnencodableValue, "integer exceeds int64 range");
    }
    return static_cast<std::int64_t>(i);
  }

  Storage v_;
};

std::string encode(const Value& value);

// Strict decoder: rejects anything that is not the exact canonical encoding
// of some value (MalformedInput or NonCanonicalInput).
Value decode(std::string_view bytes);

// Lenient reader for hand-written files such as configs: whitespace and any
// key order are accepted. Floats and null raise UnencodableValue.
Value parse_relaxed(std::string_view text);

// Files hold the canonical bytes followed by a single newline.
void write_file(const std::filesystem::path& path, const Value& value);
Value read_file(const std::filesystem::path& path);
Value read_file_relaxed(const std::filesystem::path& path);

// Small helpers for building and reading records.
std::int64_t get_int(const Value& map, std::string_view key);
const std::string& get_string(const Value& map, std::string_view key);
std::optional<std::string> get_optional_string(const Value& map, std::string_view key);

}  // namespace cardpay::canonical
