#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cardpay/canonical.hpp"
#include "cardpay/crypto.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/lifecycle.hpp"
#include "cardpay/money.hpp"

namespace cardpay {

inline constexpr std::int64_t kFormatVersion = 1;

// "At time T, I am paying Y to merchant X for item Z", bound to a card digest.
std::string make_payment_statement(std::int64_t timestamp, Money amount,
                                   const std::string& merchant_id, const std::string& item_id,
                                   const std::string& card_ref);

struct TransactionRecord {
  std::string txn_id;
  std::string request_id;
  std::int64_t timestamp = 0;
  Money amount;
  std::string merchant_id;
  std::string item_id;
  std::string card_ref;
  std::string provider_id;
  TxnState state = TxnState::Authorized;
  std::optional<crypto::Bytes> merchant_sig;
  std::optional<crypto::Bytes> provider_sig;

  // Canonical bytes covered by both signatures. Signatures and the mutable
  // lifecycle state are excluded.
  std::string signed_payload() const;
  bool same_signed_fields(const TransactionRecord& other) const;

  canonical::Value to_value() const;
  static TransactionRecord from_value(const canonical::Value& v);

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

std::string derive_txn_id(const std::string& merchant_id, const std::string& request_id);

crypto::Bytes sign_record(const TransactionRecord& record, const KeyRegistry& signer);

enum class RecordVerdict { Valid, InvalidMerchantSig, InvalidProviderSig, MissingSig };
std::string_view to_string(RecordVerdict v);

// Checks each present signature against the registry. A CAPTURED (or later)
// record missing either signature yields MissingSig. Throws UnknownParty if a
// signer is not registered.
RecordVerdict verify_record(const TransactionRecord& record, const KeyRegistry& registry);

// Unforgeable receipt digest; recomputable from a ledger entry.
std::string receipt_token(const TransactionRecord& record);

}  // namespace cardpay
