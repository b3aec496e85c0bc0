#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cardpay/canonical.hpp"
#include "cardpay/crypto.hpp"
#include "cardpay/keys.hpp"

namespace cardpay {

namespace msg {
inline constexpr std::string_view kActivate = "ACTIVATE";
inline constexpr std::string_view kCreditRequest = "CREDIT_REQUEST";
inline constexpr std::string_view kCapture = "CAPTURE";
inline constexpr std::string_view kBalance = "BALANCE";
inline constexpr std::string_view kSettleDemand = "SETTLE_DEMAND";

inline constexpr std::string_view kActivateReply = "ACTIVATE_REPLY";
inline constexpr std::string_view kAuthDecision = "AUTH_DECISION";
inline constexpr std::string_view kCaptureConfirm = "CAPTURE_CONFIRM";
inline constexpr std::string_view kBalanceReply = "BALANCE_REPLY";
inline constexpr std::string_view kSettleReport = "SETTLE_REPORT";
inline constexpr std::string_view kError = "ERROR";
}  // namespace msg

// One line on the wire: canonical {v, type, sender_id, nonce, ts, body, sig}.
// `sig` covers the canonical encoding of every other field.
struct Envelope {
  std::string type;
  std::string sender_id;
  std::string nonce;
  std::int64_t ts = 0;
  canonical::Value body;
  crypto::Bytes sig;

  std::string signing_bytes() const;
  std::string encode() const;
  // Strict: canonical bytes with every field present.
  static Envelope decode(std::string_view line);

  // Throws UnknownParty for an unregistered sender.
  bool signature_valid(const KeyRegistry& registry) const;
};

Envelope seal(std::string_view type, canonical::Value body, const KeyRegistry& signer,
              std::string nonce, std::int64_t ts);

std::string random_nonce();

}  // namespace cardpay
