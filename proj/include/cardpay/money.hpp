#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "cardpay/error.hpp"

namespace cardpay {

inline constexpr std::string_view kCurrency = "USD";

// Amount in integer minor units (cents). Never negative once stored.
struct Money {
  std::int64_t minor = 0;

  constexpr Money() = default;
  constexpr explicit Money(std::int64_t m) : minor(m) {}

  static constexpr Money dollars(std::int64_t d) { return Money{d * 100}; }

  constexpr auto operator<=>(const Money&) const = default;

  constexpr Money operator+(Money o) const { return Money{minor + o.minor}; }
  constexpr Money operator-(Money o) const { return Money{minor - o.minor}; }
  constexpr Money& operator+=(Money o) {
    minor += o.minor;
    return *this;
  }
  constexpr Money& operator-=(Money o) {
    minor -= o.minor;
    return *this;
  }
};

// Smallest and largest card denominations: $1 and $1000.
inline constexpr Money kMinDenomination{100};
inline constexpr Money kMaxDenomination{100000};

inline std::string format_dollars(Money m) {
  const bool neg = m.minor < 0;
  const std::int64_t abs = neg ? -m.minor : m.minor;
  std::string cents = std::to_string(abs % 100);
  if (cents.size() < 2) cents.insert(0, "0");
  return (neg ? "-$" : "$") + std::to_string(abs / 100) + "." + cents;
}

}  // namespace cardpay
