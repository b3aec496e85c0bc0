#include "cardpay/record.hpp"

namespace cardpay {

using canonical::Map;
using canonical::Value;

std::string make_payment_statement(std::int64_t timestamp, Money amount,
                                   const std::string& merchant_id, const std::string& item_id,
                                   const std::string& card_ref) {
  if (amount.minor <= 0) fail(ErrorCode::InvalidAmount, "statement amount must be positive");
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"ts", timestamp},
      {"amount", amount.minor},
      {"merchant_id", merchant_id},
      {"item_id", item_id},
      {"card_ref", card_ref},
  });
}

std::string TransactionRecord::signed_payload() const {
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"kind", "payment"},
      {"txn_id", txn_id},
      {"request_id", request_id},
      {"ts", timestamp},
      {"amount", amount.minor},
      {"currency", std::string(kCurrency)},
      {"merchant_id", merchant_id},
      {"item_id", item_id},
      {"card_ref", card_ref},
      {"provider_id", provider_id},
  });
}

bool TransactionRecord::same_signed_fields(const TransactionRecord& other) const {
  return signed_payload() == other.signed_payload();
}

Value TransactionRecord::to_value() const {
  Map m{
      {"v", kFormatVersion},
      {"txn_id", txn_id},
      {"request_id", request_id},
      {"ts", timestamp},
      {"amount", amount.minor},
      {"merchant_id", merchant_id},
      {"item_id", item_id},
      {"card_ref", card_ref},
      {"provider_id", provider_id},
      {"state", std::string(to_string(state))},
  };
  if (merchant_sig) m.emplace("merchant_sig", crypto::to_hex(*merchant_sig));
  if (provider_sig) m.emplace("provider_sig", crypto::to_hex(*provider_sig));
  return m;
}

TransactionRecord TransactionRecord::from_value(const Value& v) {
  using namespace canonical;
  if (get_int(v, "v") != kFormatVersion)
    fail(ErrorCode::MalformedInput, "unsupported record version");
  TransactionRecord r;
  r.txn_id = get_string(v, "txn_id");
  r.request_id = get_string(v, "request_id");
  r.timestamp = get_int(v, "ts");
  r.amount = Money{get_int(v, "amount")};
  if (r.amount.minor < 0) fail(ErrorCode::MalformedInput, "negative record amount");
  r.merchant_id = get_string(v, "merchant_id");
  r.item_id = get_string(v, "item_id");
  r.card_ref = get_string(v, "card_ref");
  r.provider_id = get_string(v, "provider_id");
  r.state = txn_state_from_string(get_string(v, "state"));
  if (auto s = get_optional_string(v, "merchant_sig")) r.merchant_sig = crypto::from_hex(*s);
  if (auto s = get_optional_string(v, "provider_sig")) r.provider_sig = crypto::from_hex(*s);
  return r;
}

std::string derive_txn_id(const std::string& merchant_id, const std::string& request_id) {
  return crypto::sha256_hex("cardpay/txn/v1|" + merchant_id + "|" + request_id).substr(0, 32);
}

crypto::Bytes sign_record(const TransactionRecord& record, const KeyRegistry& signer) {
  const std::string& me = signer.own_id();
  if (me != record.merchant_id && me != record.provider_id)
    fail(ErrorCode::MissingKey, "signer '" + me + "' is not a party to the record");
  return signer.sign(record.signed_payload());
}

std::string_view to_string(RecordVerdict v) {
  switch (v) {
    case RecordVerdict::Valid: return "valid";
    case RecordVerdict::InvalidMerchantSig: return "invalid_merchant_sig";
    case RecordVerdict::InvalidProviderSig: return "invalid_provider_sig";
    case RecordVerdict::MissingSig: return "missing_sig";
  }
  return "?";
}

RecordVerdict verify_record(const TransactionRecord& record, const KeyRegistry& registry) {
  const bool needs_both =
      record.state == TxnState::Captured || record.state == TxnState::Settled;
  if (needs_both && (!record.merchant_sig || !record.provider_sig)) return RecordVerdict::MissingSig;

  const std::string payload = record.signed_payload();
  if (record.merchant_sig &&
      !registry.verify_key(record.merchant_id).verify(payload, *record.merchant_sig))
    return RecordVerdict::InvalidMerchantSig;
  if (record.provider_sig &&
      !registry.verify_key(record.provider_id).verify(payload, *record.provider_sig))
    return RecordVerdict::InvalidProviderSig;
  return RecordVerdict::Valid;
}

std::string receipt_token(const TransactionRecord& record) {
  std::string material = "cardpay/receipt/v1|" + record.signed_payload();
  if (record.merchant_sig) material += "|" + crypto::to_hex(*record.merchant_sig);
  if (record.provider_sig) material += "|" + crypto::to_hex(*record.provider_sig);
  return crypto::sha256_hex(material);
}

}  // namespace cardpay
