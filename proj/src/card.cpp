#include "cardpay/card.hpp"

#include <algorithm>

#include "cardpay/crypto.hpp"

namespace cardpay {

std::string_view to_string(CardState s) {
  switch (s) {
    case CardState::Issued: return "ISSUED";
    case CardState::Activated: return "ACTIVATED";
    case CardState::Exhausted: return "EXHAUSTED";
    case CardState::Blocked: return "BLOCKED";
  }
  return "?";
}

CardState card_state_from_string(std::string_view s) {
  if (s == "ISSUED") return CardState::Issued;
  if (s == "ACTIVATED") return CardState::Activated;
  if (s == "EXHAUSTED") return CardState::Exhausted;
  if (s == "BLOCKED") return CardState::Blocked;
  fail(ErrorCode::MalformedInput, "unknown card state '" + std::string(s) + "'");
}

static bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int luhn_check_digit(std::string_view digits) {
  int sum = 0;
  bool dbl = true;  // rightmost payload digit is doubled
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return (10 - sum % 10) % 10;
}

bool luhn_valid(std::string_view card_number) {
  if (card_number.size() < 2 || !all_digits(card_number)) return false;
  return luhn_check_digit(card_number.substr(0, card_number.size() - 1)) ==
         card_number.back() - '0';
}

bool valid_provider_id(std::string_view provider_id) {
  return provider_id.size() >= 1 && provider_id.size() <= 6 && all_digits(provider_id);
}

std::string make_card_number(std::string_view provider_id, std::uint64_t serial) {
  if (!valid_provider_id(provider_id))
    fail(ErrorCode::ConfigInvalid, "provider id must be 1-6 digits");
  std::string s = std::to_string(serial);
  if (s.size() > kSerialDigits) fail(ErrorCode::ConfigInvalid, "serial overflows card number");
  std::string body = std::string(provider_id) + std::string(kSerialDigits - s.size(), '0') + s;
  return body + static_cast<char>('0' + luhn_check_digit(body));
}

bool card_number_matches_provider(std::string_view card_number, std::string_view provider_id) {
  return card_number.size() == provider_id.size() + kSerialDigits + 1 &&
         card_number.starts_with(provider_id) && luhn_valid(card_number);
}

std::string card_ref(std::string_view card_number) {
  return crypto::sha256_hex("cardpay/card-ref/v1|" + std::string(card_number));
}

std::string secret_digest(std::string_view card_number, std::string_view secret) {
  return crypto::sha256_hex("cardpay/secret/v1|" + std::string(card_number) + "|" +
                            std::string(secret));
}

canonical::Value Card::to_value() const {
  canonical::Map m{
      {"card_number", card_number},
      {"provider_id", provider_id},
      {"secret_digest", secret_digest},
      {"balance", balance.minor},
      {"denomination", denomination.minor},
      {"state", std::string(to_string(state))},
  };
  if (password_hash) m.emplace("password_hash", *password_hash);
  return m;
}

Card Card::from_value(const canonical::Value& v) {
  using namespace canonical;
  Card c;
  c.card_number = get_string(v, "card_number");
  c.provider_id = get_string(v, "provider_id");
  c.secret_digest = get_string(v, "secret_digest");
  c.password_hash = get_optional_string(v, "password_hash");
  c.balance = Money{get_int(v, "balance")};
  c.denomination = Money{get_int(v, "denomination")};
  c.state = card_state_from_string(get_string(v, "state"));
  return c;
}

}  // namespace cardpay
