#include <gtest/gtest.h>

#include "cardpay/envelope.hpp"
#include "cardpay/error.hpp"
#include "cardpay/messages.hpp"
#include "support.hpp"

using namespace cardpay;
using namespace cardpay::testing;
using canonical::Map;

TEST(Envelope, SealDecodeVerify) {
  const Keys k;
  const Envelope e = seal(msg::kBalance, Map{{"x", 1}}, k.merchant_registry(), "n1", kT0);
  const Envelope d = Envelope::decode(e.encode());
  EXPECT_EQ(d.type, "BALANCE");
  EXPECT_EQ(d.sender_id, kMerchant);
  EXPECT_EQ(d.encode(), e.encode());
  EXPECT_TRUE(d.signature_valid(k.provider_registry()));
}

TEST(Envelope, SignatureCoversEveryField) {
  const Keys k;
  const Envelope e = seal(msg::kBalance, Map{{"x", 1}}, k.merchant_registry(), "n1", kT0);
  const auto reg = k.provider_registry();
  Envelope m = e;
  m.nonce = "n2";
  EXPECT_FALSE(m.signature_valid(reg));
  m = e;
  m.ts += 1;
  EXPECT_FALSE(m.signature_valid(reg));
  m = e;
  m.type = std::string(msg::kActivate);
  EXPECT_FALSE(m.signature_valid(reg));
  m = e;
  m.body = Map{{"x", 2}};
  EXPECT_FALSE(m.signature_valid(reg));
}

TEST(Envelope, DecodeIsStrict) {
  const Keys k;
  const std::string line = seal(msg::kBalance, Map{}, k.merchant_registry(), "n", kT0).encode();
  EXPECT_THROW(Envelope::decode(line + " "), Error);
  canonical::Value v = canonical::decode(line);
  v.as_map().emplace("extra", 1);
  EXPECT_THROW(Envelope::decode(canonical::encode(v)), Error);
  v = canonical::decode(line);
  v.as_map().insert_or_assign("body", canonical::List{});
  EXPECT_THROW(Envelope::decode(canonical::encode(v)), Error);
}

TEST(Messages, DecisionCarriesHoldIffAvailable) {
  AuthorizationDecision d;
  d.request_id = "r";
  d.verdict = Verdict::Available;
  d.hold_id = "h";
  d.hold_expiry = 5;
  EXPECT_EQ(AuthorizationDecision::from_value(d.to_value()), d);

  canonical::Value v = d.to_value();
  v.as_map().erase("hold_id");
  EXPECT_THROW(AuthorizationDecision::from_value(v), Error);

  AuthorizationDecision n;
  n.request_id = "r";
  n.verdict = Verdict::InsufficientFunds;
  canonical::Value nv = n.to_value();
  EXPECT_FALSE(nv.contains("hold_id"));
  nv.as_map().emplace("hold_id", "h");
  EXPECT_THROW(AuthorizationDecision::from_value(nv), Error);
}

TEST(Messages, CreditRequestRoundTrip) {
  CreditRequest r;
  r.request_id = "r";
  r.provider_id = kProvider;
  r.card_number = "4242";
  r.secret = "s";
  r.password = "p";
  r.amount = Money{5};
  r.merchant_id = kMerchant;
  r.item_id = "i";
  r.timestamp = kT0;
  const CreditRequest back = CreditRequest::from_value(r.to_value());
  EXPECT_EQ(back.to_value(), r.to_value());
}
