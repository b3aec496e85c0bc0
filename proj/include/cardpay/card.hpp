#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "cardpay/canonical.hpp"
#include "cardpay/money.hpp"

namespace cardpay {

enum class CardState { Issued, Activated, Exhausted, Blocked };

std::string_view to_string(CardState s);
CardState card_state_from_string(std::string_view s);

// Card numbers are <provider id digits><zero-padded serial><check digit>.
inline constexpr std::size_t kSerialDigits = 11;

// Mod-10 (Luhn) check digit over a digit string.
int luhn_check_digit(std::string_view digits_without_check);
bool luhn_valid(std::string_view card_number);

bool valid_provider_id(std::string_view provider_id);
std::string make_card_number(std::string_view provider_id, std::uint64_t serial);
// True when the number is well formed for the given provider.
bool card_number_matches_provider(std::string_view card_number, std::string_view provider_id);

// One-way digest of the card number placed in transaction records.
std::string card_ref(std::string_view card_number);
// Digest under which the provider stores a card's printed secret.
std::string secret_digest(std::string_view card_number, std::string_view secret);

// The provider's view of a sold card. The secret and password never appear in
// clear; only their digests are kept.
struct Card {
  std::string card_number;
  std::string provider_id;
  std::string secret_digest;
  std::optional<std::string> password_hash;
  Money balance;
  Money denomination;
  CardState state = CardState::Issued;

  canonical::Value to_value() const;
  static Card from_value(const canonical::Value& v);

  friend bool operator==(const Card&, const Card&) = default;
};

}  // namespace cardpay
