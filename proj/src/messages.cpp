#include "cardpay/messages.hpp"

namespace cardpay {

using canonical::get_int;
using canonical::get_string;
using canonical::Map;
using canonical::Value;

Value CreditRequest::to_value() const {
  return Map{
      {"request_id", request_id}, {"provider_id", provider_id}, {"card_number", card_number},
      {"secret", secret},         {"password", password},       {"amount", amount.minor},
      {"merchant_id", merchant_id}, {"item_id", item_id},       {"ts", timestamp},
  };
}

CreditRequest CreditRequest::from_value(const Value& v) {
  CreditRequest r;
  r.request_id = get_string(v, "request_id");
  r.provider_id = get_string(v, "provider_id");
  r.card_number = get_string(v, "card_number");
  r.secret = get_string(v, "secret");
  r.password = get_string(v, "password");
  r.amount = Money{get_int(v, "amount")};
  r.merchant_id = get_string(v, "merchant_id");
  r.item_id = get_string(v, "item_id");
  r.timestamp = get_int(v, "ts");
  return r;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Available: return "AVAILABLE";
    case Verdict::InsufficientFunds: return "INSUFFICIENT_FUNDS";
    case Verdict::AuthFailure: return "AUTH_FAILURE";
    case Verdict::InvalidRequest: return "INVALID_REQUEST";
  }
  return "?";
}

Verdict verdict_from_string(std::string_view s) {
  for (Verdict v : {Verdict::Available, Verdict::InsufficientFunds, Verdict::AuthFailure,
                    Verdict::InvalidRequest})
    if (to_string(v) == s) return v;
  fail(ErrorCode::MalformedInput, "unknown verdict '" + std::string(s) + "'");
}

Value AuthorizationDecision::to_value() const {
  Map m{{"request_id", request_id}, {"verdict", std::string(to_string(verdict))}};
  if (hold_id) m.emplace("hold_id", *hold_id);
  if (hold_expiry) m.emplace("hold_expiry", *hold_expiry);
  return m;
}

AuthorizationDecision AuthorizationDecision::from_value(const Value& v) {
  AuthorizationDecision d;
  d.request_id = get_string(v, "request_id");
  d.verdict = verdict_from_string(get_string(v, "verdict"));
  d.hold_id = canonical::get_optional_string(v, "hold_id");
  if (const Value* e = v.find("hold_expiry")) d.hold_expiry = e->as_int();
  if ((d.verdict == Verdict::Available) != d.hold_id.has_value() ||
      d.hold_id.has_value() != d.hold_expiry.has_value())
    fail(ErrorCode::MalformedInput, "hold fields must be present exactly when AVAILABLE");
  return d;
}

Value CaptureRequest::to_value() const {
  return Map{{"hold_id", hold_id}, {"record", record.to_value()}};
}

CaptureRequest CaptureRequest::from_value(const Value& v) {
  return {get_string(v, "hold_id"), TransactionRecord::from_value(v.at("record"))};
}

Value CaptureConfirm::to_value() const {
  return Map{{"hold_id", hold_id}, {"record", record.to_value()}};
}

CaptureConfirm CaptureConfirm::from_value(const Value& v) {
  return {get_string(v, "hold_id"), TransactionRecord::from_value(v.at("record"))};
}

Value ActivateRequest::to_value() const {
  return Map{{"card_number", card_number}, {"secret", secret}, {"new_password", new_password}};
}

ActivateRequest ActivateRequest::from_value(const Value& v) {
  return {get_string(v, "card_number"), get_string(v, "secret"), get_string(v, "new_password")};
}

Value BalanceRequest::to_value() const {
  return Map{{"card_number", card_number}, {"secret", secret}, {"password", password}};
}

BalanceRequest BalanceRequest::from_value(const Value& v) {
  return {get_string(v, "card_number"), get_string(v, "secret"), get_string(v, "password")};
}

}  // namespace cardpay
