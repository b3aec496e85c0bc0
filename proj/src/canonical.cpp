#include "cardpay/canonical.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cardpay::canonical {

namespace {

[[noreturn]] void type_error(const char* want) {
  fail(ErrorCode::MalformedInput, std::string("expected ") + want);
}

void encode_string(std::string& out, std::string_view s) {
  static constexpr char kHex[] = "0123456789abcdef";
  out.push_back('"');
  for (const char c : s) {
    const auto b = static_cast<unsigned char>(c);
    if (c == '"' || c == '\\') {
      out.push_back('\\');
      out.push_back(c);
    } else if (b < 0x20) {
      out += "\\u00";
      out.push_back(kHex[b >> 4]);
      out.push_back(kHex[b & 0xf]);
    } else {
      out.push_back(c);
    }
  }
  out.push_back('"');
}

void encode_into(std::string& out, const Value& v) {
  std::visit(
      [&out](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          out += x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          char buf[24];
          auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
          out.append(buf, end);
        } else if constexpr (std::is_same_v<T, std::string>) {
          encode_string(out, x);
        } else if constexpr (std::is_same_v<T, List>) {
          out.push_back('[');
          for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out.push_back(',');
            encode_into(out, x[i]);
          }
          out.push_back(']');
        } else {
          out.push_back('{');
          bool first = true;
          for (const auto& [k, val] : x) {
            if (!first) out.push_back(',');
            first = false;
            encode_string(out, k);
            out.push_back(':');
            encode_into(out, val);
          }
          out.push_back('}');
        }
      },
      v.storage());
}

constexpr int kMaxDepth = 256;

class Parser {
 public:
  Parser(std::string_view in, bool relaxed) : in_(in), relaxed_(relaxed) {}

  Value parse_document() {
    skip_ws();
    Value v = parse_value(0);
    skip_ws();
    if (pos_ != in_.size()) malformed("trailing bytes");
    return v;
  }

  bool saw_duplicate_key() const { return duplicate_; }

 private:
  [[noreturn]] void malformed(const std::string& what) const {
    fail(ErrorCode::MalformedInput, what + " at offset " + std::to_string(pos_));
  }
  [[noreturn]] void unencodable(const std::string& what) const {
    if (relaxed_) fail(ErrorCode::UnencodableValue, what);
    malformed(what);
  }

  bool at_end() const { return pos_ >= in_.size(); }
  char peek() const { return at_end() ? '\0' : in_[pos_]; }

  void skip_ws() {
    while (!at_end() && (in_[pos_] == ' ' || in_[pos_] == '\t' ||
                         in_[pos_] == '\n' || in_[pos_] == '\r'))
      ++pos_;
  }

  void expect_literal(std::string_view lit) {
    if (in_.substr(pos_, lit.size()) != lit) malformed("bad literal");
    pos_ += lit.size();
  }

  Value parse_value(int depth) {
    if (depth > kMaxDepth) malformed("nesting too deep");
    if (at_end()) malformed("unexpected end of input");
    switch (peek()) {
      case '{': return parse_map(depth);
      case '[': return parse_list(depth);
      case '"': return Value(parse_string());
      case 't': expect_literal("true"); return Value(true);
      case 'f': expect_literal("false"); return Value(false);
      case 'n': expect_literal("null"); unencodable("null is not encodable");
      default: return parse_number();
    }
  }

  Value parse_map(int depth) {
    ++pos_;
    Map m;
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return Value(std::move(m));
    }
    for (;;) {
      skip_ws();
      if (peek() != '"') malformed("expected string key");
      std::string key = parse_string();
      skip_ws();
      if (peek() != ':') malformed("expected ':'");
      ++pos_;
      skip_ws();
      Value v = parse_value(depth + 1);
      if (!m.emplace(std::move(key), std::move(v)).second) {
        if (relaxed_) malformed("duplicate key");
        duplicate_ = true;
      }
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == '}') {
        ++pos_;
        return Value(std::move(m));
      }
      malformed("expected ',' or '}'");
    }
  }

  Value parse_list(int depth) {
    ++pos_;
    List l;
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return Value(std::move(l));
    }
    for (;;) {
      skip_ws();
      l.push_back(parse_value(depth + 1));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return Value(std::move(l));
      }
      malformed("expected ',' or ']'");
    }
  }

  unsigned hex4() {
    if (pos_ + 4 > in_.size()) malformed("short \\u escape");
    unsigned cp = 0;
    for (int i = 0; i < 4; ++i) {
      const char c = in_[pos_++];
      cp <<= 4;
      if (c >= '0' && c <= '9') cp |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') cp |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') cp |= static_cast<unsigned>(c - 'A' + 10);
      else malformed("bad hex digit");
    }
    return cp;
  }

  static void append_utf8(std::string& out, unsigned cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (at_end()) malformed("unterminated string");
      const char c = in_[pos_++];
      if (c == '"') return out;
      if (static_cast<unsigned char>(c) < 0x20) malformed("raw control byte in string");
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) malformed("dangling escape");
      const char e = in_[pos_++];
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case '/': out.push_back('/'); break;
        case 'b': out.push_back('\b'); break;
        case 'f': out.push_back('\f'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case 't': out.push_back('\t'); break;
        case 'u': {
          unsigned cp = hex4();
          if (cp >= 0xd800 && cp < 0xdc00) {
            if (in_.substr(pos_, 2) != "\\u") malformed("lone high surrogate");
            pos_ += 2;
            const unsigned lo = hex4();
            if (lo < 0xdc00 || lo >= 0xe000) malformed("bad low surrogate");
            cp = 0x10000 + ((cp - 0xd800) << 10) + (lo - 0xdc00);
          } else if (cp >= 0xdc00 && cp < 0xe000) {
            malformed("lone low surrogate");
          }
          append_utf8(out, cp);
          break;
        }
        default: malformed("unknown escape");
      }
    }
  }

  Value parse_number() {
    const std::size_t start = pos_;
    if (peek() == '-') ++pos_;
    if (at_end() || peek() < '0' || peek() > '9') malformed("expected value");
    if (peek() == '0') {
      ++pos_;
    } else {
      while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    }
    if (peek() == '.' || peek() == 'e' || peek() == 'E') unencodable("floats are not encodable");
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(in_.data() + start, in_.data() + pos_, v);
    if (ec != std::errc() || end != in_.data() + pos_) malformed("integer out of range");
    return Value(v);
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  bool relaxed_;
  bool duplicate_ = false;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

bool Value::as_bool() const {
  if (auto p = std::get_if<bool>(&v_)) return *p;
  type_error("bool");
}
std::int64_t Value::as_int() const {
  if (auto p = std::get_if<std::int64_t>(&v_)) return *p;
  type_error("integer");
}
const std::string& Value::as_string() const {
  if (auto p = std::get_if<std::string>(&v_)) return *p;
  type_error("string");
}
const List& Value::as_list() const {
  if (auto p = std::get_if<List>(&v_)) return *p;
  type_error("list");
}
List& Value::as_list() {
  if (auto p = std::get_if<List>(&v_)) return *p;
  type_error("list");
}
const Map& Value::as_map() const {
  if (auto p = std::get_if<Map>(&v_)) return *p;
  type_error("map");
}
Map& Value::as_map() {
  if (auto p = std::get_if<Map>(&v_)) return *p;
  type_error("map");
}

const Value* Value::find(std::string_view key) const {
  const Map& m = as_map();
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

const Value& Value::at(std::string_view key) const {
  if (const Value* v = find(key)) return *v;
  fail(ErrorCode::MalformedInput, "missing field '" + std::string(key) + "'");
}

std::string encode(const Value& value) {
  std::string out;
  encode_into(out, value);
  return out;
}

Value decode(std::string_view bytes) {
  Parser p(bytes, false);
  Value v = p.parse_document();
  if (p.saw_duplicate_key() || encode(v) != bytes)
    fail(ErrorCode::NonCanonicalInput, "input is not in canonical form");
  return v;
}

Value parse_relaxed(std::string_view text) {
  Parser p(text, true);
  return p.parse_document();
}

void write_file(const std::filesystem::path& path, const Value& value) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::Io, "cannot write " + tmp);
    f << encode(value) << '\n';
    if (!f.flush()) fail(ErrorCode::Io, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Value read_file(const std::filesystem::path& path) {
  std::string s = slurp(path);
  if (!s.empty() && s.back() == '\n') s.pop_back();
  return decode(s);
}

Value read_file_relaxed(const std::filesystem::path& path) {
  return parse_relaxed(slurp(path));
}

std::int64_t get_int(const Value& map, std::string_view key) {
  return map.at(key).as_int();
}

const std::string& get_string(const Value& map, std::string_view key) {
  return map.at(key).as_string();
}

std::optional<std::string> get_optional_string(const Value& map, std::string_view key) {
  if (const Value* v = map.find(key)) return v->as_string();
  return std::nullopt;
}

}  // namespace cardpay::canonical
