#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <set>

#include "cardpay/canonical.hpp"
#include "support.hpp"

using namespace cardpay;
using canonical::List;
using canonical::Map;
using canonical::Value;
using cardpay::testing::Rng;

namespace {

// Independent decoder: nlohmann's parser, converted into our value model.
Value from_json(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      Map m;
      for (auto it = j.begin(); it != j.end(); ++it) m.emplace(it.key(), from_json(it.value()));
      return m;
    }
    case nlohmann::json::value_t::array: {
      List l;
      for (const auto& e : j) l.push_back(from_json(e));
      return l;
    }
    case nlohmann::json::value_t::string: return j.get<std::string>();
    case nlohmann::json::value_t::boolean: return j.get<bool>();
    case nlohmann::json::value_t::number_integer: return j.get<std::int64_t>();
    case nlohmann::json::value_t::number_unsigned: return static_cast<std::int64_t>(j.get<std::uint64_t>());
    default: throw std::runtime_error("oracle: unexpected json type");
  }
}

Value oracle_decode(const std::string& bytes) { return from_json(nlohmann::json::parse(bytes)); }

const char* kPieces[] = {"a", "Z", "0", " ", "\"", "\\", "/", "\n", "\t", "\x01", "\x1f", "\x7f", "é", "漢", "😀", "key"};

std::string gen_string(Rng& rng) {
  std::string s;
  const auto n = rng.below(6);
  for (std::uint64_t i = 0; i < n; ++i) s += kPieces[rng.below(std::size(kPieces))];
  return s;
}

std::int64_t gen_int(Rng& rng) {
  switch (rng.below(4)) {
    case 0: return rng.between(-10, 10);
    case 1: return rng.between(INT64_MIN, INT64_MAX);
    case 2: return rng.coin() ? INT64_MAX : INT64_MIN;
    default: return rng.between(-100000, 100000);
  }
}

Value gen_value(Rng& rng, int depth) {
  const auto kind = rng.below(depth > 0 ? 5 : 3);
  switch (kind) {
    case 0: return rng.coin();
    case 1: return gen_int(rng);
    case 2: return gen_string(rng);
    case 3: {
      List l;
      const auto n = rng.below(4);
      for (std::uint64_t i = 0; i < n; ++i) l.push_back(gen_value(rng, depth - 1));
      return l;
    }
    default: {
      Map m;
      const auto n = rng.below(4);
      for (std::uint64_t i = 0; i < n; ++i) m.insert_or_assign(gen_string(rng), gen_value(rng, depth - 1));
      return m;
    }
  }
}

}  // namespace

TEST(Canonical, EmptyMap) {
  EXPECT_EQ(canonical::encode(Map{}), "{}");
  EXPECT_EQ(canonical::decode("{}"), Value(Map{}));
}

TEST(Canonical, KeyOrderDoesNotMatter) {
  Map a;
  a.emplace("b", 1);
  a.emplace("a", 2);
  EXPECT_EQ(canonical::encode(a), R"({"a":2,"b":1})");
}

TEST(Canonical, KeysSortByUnsignedBytes) {
  Map m{{"é", 1}, {"z", 2}, {"A", 3}};
  EXPECT_EQ(canonical::encode(m), "{\"A\":3,\"z\":2,\"é\":1}");
}

TEST(Canonical, StringEscapes) {
  EXPECT_EQ(canonical::encode(Value(std::string("a\"b\\c\n\x01/é"))), "\"a\\\"b\\\\c\\u000a\\u0001/é\"");
}

TEST(Canonical, IntegerExtremes) {
  EXPECT_EQ(canonical::encode(Value(INT64_MIN)), "-9223372036854775808");
  EXPECT_EQ(canonical::decode("9223372036854775807"), Value(INT64_MAX));
  EXPECT_THROW(canonical::decode("9223372036854775808"), Error);
  EXPECT_THROW(Value(std::uint64_t{1} << 63), Error);
}

TEST(Canonical, RoundTripMatchesIndependentDecoder) {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Value v = gen_value(rng, 4);
    const std::string bytes = canonical::encode(v);
    EXPECT_EQ(oracle_decode(bytes), v) << bytes;
    EXPECT_EQ(canonical::decode(bytes), v) << bytes;
    EXPECT_EQ(canonical::encode(canonical::decode(bytes)), bytes);
  }
}

TEST(Canonical, EncodingIsInjective) {
  Rng rng(11);
  std::map<std::string, Value> seen;
  for (int i = 0; i < 5000; ++i) {
    const Value v = gen_value(rng, 3);
    auto [it, inserted] = seen.emplace(canonical::encode(v), v);
    if (!inserted) {
      EXPECT_EQ(it->second, v) << it->first;
    }
  }
}

TEST(Canonical, DistinctScalarsEncodeDistinctly) {
  // Types that print alike in looser formats must stay apart.
  std::set<std::string> out;
  for (const Value& v : {Value(1), Value("1"), Value(true), Value("true"), Value(List{}), Value(Map{}),
                         Value(List{Value(1)}), Value(""), Value(0), Value(false)})
    EXPECT_TRUE(out.insert(canonical::encode(v)).second);
}

TEST(Canonical, RejectsNonCanonicalInputs) {
  auto code = [](std::string_view s) {
    try {
      canonical::decode(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;  // sentinel: accepted
  };
  EXPECT_EQ(code(R"({"b":1,"a":2})"), ErrorCode::NonCanonicalInput);
  for (const char* bad : {" {}", "{} ", R"({"a": 1})", "01", "-0", "+1", R"("\u0041")", R"("\u001F")", R"("\n")",
                          R"({"a":1,"a":1})"})
    EXPECT_TRUE(code(bad) == ErrorCode::NonCanonicalInput || code(bad) == ErrorCode::MalformedInput) << bad;
  for (const char* bad : {"", "1.5", "1e3", "null", "{", "[1,]", R"({"a"})", "tru", "\"abc", "[1]x"})
    EXPECT_EQ(code(bad), ErrorCode::MalformedInput) << bad;
}

TEST(Canonical, RejectsExcessiveNesting) {
  const std::string deep = std::string(300, '[') + std::string(300, ']');
  EXPECT_THROW(canonical::decode(deep), Error);
}

TEST(Canonical, MutationFuzzEitherRoundTripsOrErrors) {
  Rng rng(13);
  int decoded = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string bytes = canonical::encode(gen_value(rng, 3));
    const auto edits = 1 + rng.below(3);
    for (std::uint64_t e = 0; e < edits; ++e) {
      const std::size_t pos = bytes.empty() ? 0 : rng.below(bytes.size());
      switch (rng.below(4)) {
        case 0:
          if (!bytes.empty()) bytes[pos] = static_cast<char>(bytes[pos] ^ (1 << rng.below(8)));
          break;
        case 1: bytes.insert(pos, 1, "{}[]\",:0-9a\\ "[rng.below(14)]); break;
        case 2:
          if (!bytes.empty()) bytes.erase(pos, 1);
          break;
        default: bytes.insert(pos, bytes.substr(pos, rng.below(4)));
      }
    }
    try {
      const Value v = canonical::decode(bytes);
      EXPECT_EQ(canonical::encode(v), bytes);
      ++decoded;
    } catch (const Error&) {
    }
  }
  EXPECT_GT(decoded, 0);
}

TEST(Canonical, RelaxedReaderAcceptsHandWrittenConfig) {
  const Value v = canonical::parse_relaxed(" {\n  \"b\" : [1, 2],\n  \"a\" : true }\n");
  EXPECT_EQ(canonical::encode(v), R"({"a":true,"b":[1,2]})");
  try {
    canonical::parse_relaxed(R"({"a": 1.5})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnencodableValue);
  }
  try {
    canonical::parse_relaxed(R"({"a": null})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnencodableValue);
  }
}

TEST(Canonical, FilesCarryTrailingNewline) {
  TempDir dir;
  const Value v = Map{{"x", List{Value(1), Value("y")}}};
  canonical::write_file(dir.path() / "f", v);
  EXPECT_EQ(canonical::read_file(dir.path() / "f"), v);
  std::ifstream in(dir.path() / "f");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, canonical::encode(v) + "\n");
}
