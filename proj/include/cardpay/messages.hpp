#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cardpay/canonical.hpp"
#include "cardpay/money.hpp"
#include "cardpay/record.hpp"

namespace cardpay {

struct CreditRequest {
  std::string request_id;
  std::string provider_id;
  std::string card_number;
  std::string secret;
  std::string password;
  Money amount;
  std::string merchant_id;
  std::string item_id;
  std::int64_t timestamp = 0;

  canonical::Value to_value() const;
  static CreditRequest from_value(const canonical::Value& v);
};

enum class Verdict { Available, InsufficientFunds, AuthFailure, InvalidRequest };
std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct AuthorizationDecision {
  std::string request_id;
  Verdict verdict = Verdict::InvalidRequest;
  std::optional<std::string> hold_id;      // present iff Available
  std::optional<std::int64_t> hold_expiry; // present iff Available

  canonical::Value to_value() const;
  static AuthorizationDecision from_value(const canonical::Value& v);
  friend bool operator==(const AuthorizationDecision&, const AuthorizationDecision&) = default;
};

struct CaptureRequest {
  std::string hold_id;
  TransactionRecord record;  // merchant-signed

  canonical::Value to_value() const;
  static CaptureRequest from_value(const canonical::Value& v);
};

struct CaptureConfirm {
  std::string hold_id;
  TransactionRecord record;  // CAPTURED, carries both signatures

  canonical::Value to_value() const;
  static CaptureConfirm from_value(const canonical::Value& v);
};

struct ActivateRequest {
  std::string card_number;
  std::string secret;
  std::string new_password;

  canonical::Value to_value() const;
  static ActivateRequest from_value(const canonical::Value& v);
};

struct BalanceRequest {
  std::string card_number;
  std::string secret;
  std::string password;

  canonical::Value to_value() const;
  static BalanceRequest from_value(const canonical::Value& v);
};

}  // namespace cardpay
