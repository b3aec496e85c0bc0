#include <gtest/gtest.h>

#include "cardpay/card.hpp"
#include "cardpay/error.hpp"
#include "cardpay/record.hpp"
#include "support.hpp"

using namespace cardpay;
using namespace cardpay::testing;

namespace {

TransactionRecord unsigned_record() {
  TransactionRecord r;
  r.request_id = "0123456789abcdef0123456789abcdef";
  r.txn_id = derive_txn_id(kMerchant, r.request_id);
  r.timestamp = kT0;
  r.amount = Money{250};
  r.merchant_id = kMerchant;
  r.item_id = "apple";
  r.card_ref = card_ref("4242000000000001");
  r.provider_id = kProvider;
  r.state = TxnState::Authorized;
  return r;
}

TransactionRecord captured_record(const Keys& k) {
  TransactionRecord r = unsigned_record();
  r.merchant_sig = sign_record(r, k.merchant_registry());
  r.state = TxnState::Captured;
  r.provider_sig = sign_record(r, k.provider_registry());
  return r;
}

}  // namespace

TEST(Statement, DeterministicAndInjective) {
  const auto a = make_payment_statement(kT0, Money{500}, "m", "apple", "ref");
  EXPECT_EQ(a, make_payment_statement(kT0, Money{500}, "m", "apple", "ref"));
  EXPECT_NE(a, make_payment_statement(kT0, Money{500}, "m", "pear", "ref"));
}

TEST(Statement, DecodesBackToItsFields) {
  const canonical::Value v = canonical::decode(make_payment_statement(kT0, Money{500}, "m", "apple", "ref"));
  EXPECT_EQ(v.as_map().size(), 6u);
  EXPECT_EQ(canonical::get_int(v, "v"), 1);
  EXPECT_EQ(canonical::get_int(v, "ts"), kT0);
  EXPECT_EQ(canonical::get_int(v, "amount"), 500);
  EXPECT_EQ(canonical::get_string(v, "merchant_id"), "m");
  EXPECT_EQ(canonical::get_string(v, "item_id"), "apple");
  EXPECT_EQ(canonical::get_string(v, "card_ref"), "ref");
}

TEST(Statement, RejectsNonPositiveAmounts) {
  for (std::int64_t amount : {0, -1}) {
    try {
      make_payment_statement(kT0, Money{amount}, "m", "apple", "ref");
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidAmount);
    }
  }
}

TEST(Record, SignedPayloadExcludesSignaturesAndState) {
  const Keys k;
  const TransactionRecord r = captured_record(k);
  TransactionRecord other = r;
  other.state = TxnState::Settled;
  other.merchant_sig.reset();
  EXPECT_EQ(r.signed_payload(), other.signed_payload());
}

TEST(Record, WellFormedCapturedRecordIsValid) {
  const Keys k;
  const TransactionRecord r = captured_record(k);
  EXPECT_EQ(verify_record(r, k.provider_registry()), RecordVerdict::Valid);
  EXPECT_EQ(verify_record(r, k.merchant_registry()), RecordVerdict::Valid);
  TransactionRecord settled = r;
  settled.state = TxnState::Settled;
  EXPECT_EQ(verify_record(settled, k.provider_registry()), RecordVerdict::Valid);
}

TEST(Record, MissingSignatureRuleDependsOnState) {
  const Keys k;
  TransactionRecord r = unsigned_record();
  r.merchant_sig = sign_record(r, k.merchant_registry());
  EXPECT_EQ(verify_record(r, k.provider_registry()), RecordVerdict::Valid);  // valid so far
  r.state = TxnState::Captured;
  EXPECT_EQ(verify_record(r, k.provider_registry()), RecordVerdict::MissingSig);
}

TEST(Record, AmountMutationIsCaught) {
  const Keys k;
  TransactionRecord r = captured_record(k);
  r.amount = Money{251};
  EXPECT_EQ(verify_record(r, k.provider_registry()), RecordVerdict::InvalidMerchantSig);
}

TEST(Record, MerchantSignatureDoesNotVerifyAsProviders) {
  const Keys k;
  TransactionRecord r = unsigned_record();
  r.merchant_sig = sign_record(r, k.merchant_registry());
  r.state = TxnState::Captured;
  r.provider_sig = r.merchant_sig;
  EXPECT_EQ(verify_record(r, k.provider_registry()), RecordVerdict::InvalidProviderSig);
}

TEST(Record, UnregisteredSignerIsAnError) {
  const Keys k;
  TransactionRecord r = captured_record(k);
  r.merchant_id = "m-unknown";
  try {
    verify_record(r, k.provider_registry());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownParty);
  }
}

TEST(Record, SignerMustBeAParty) {
  const Keys k;
  KeyRegistry stranger("someone", test_key("someone"));
  try {
    sign_record(unsigned_record(), stranger);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingKey);
  }
}

TEST(Record, ThousandRandomBitFlipsAllInvalid) {
  const Keys k;
  const TransactionRecord r = captured_record(k);
  const auto reg = k.provider_registry();
  Rng rng(17);
  auto flip = [&](std::string& s) {
    if (s.empty()) return;
    const auto bit = rng.below(s.size() * 8);
    s[bit / 8] = static_cast<char>(s[bit / 8] ^ (1 << (bit % 8)));
  };
  for (int i = 0; i < 1000; ++i) {
    TransactionRecord m = r;
    switch (rng.below(8)) {
      case 0: flip(m.txn_id); break;
      case 1: flip(m.request_id); break;
      case 2: m.timestamp ^= std::int64_t{1} << rng.below(63); break;
      case 3: m.amount.minor ^= std::int64_t{1} << rng.below(63); break;
      case 4: flip(m.item_id); break;
      case 5: flip(m.card_ref); break;
      case 6: (*m.merchant_sig)[rng.below(64)] ^= static_cast<std::uint8_t>(1 << rng.below(8)); break;
      default: (*m.provider_sig)[rng.below(64)] ^= static_cast<std::uint8_t>(1 << rng.below(8)); break;
    }
    EXPECT_NE(verify_record(m, reg), RecordVerdict::Valid);
  }
}

TEST(Record, ValueRoundTrip) {
  const Keys k;
  const TransactionRecord r = captured_record(k);
  EXPECT_EQ(TransactionRecord::from_value(r.to_value()), r);
  const TransactionRecord u = unsigned_record();
  EXPECT_EQ(TransactionRecord::from_value(u.to_value()), u);
}

TEST(Record, ReceiptTokenBindsSignatures) {
  const Keys k;
  const TransactionRecord r = captured_record(k);
  EXPECT_EQ(receipt_token(r), receipt_token(TransactionRecord::from_value(r.to_value())));
  TransactionRecord m = r;
  (*m.provider_sig)[0] ^= 1;
  EXPECT_NE(receipt_token(r), receipt_token(m));
}
