#include <gtest/gtest.h>

#include <httplib.h>

#include "cardpay/merchant_http.hpp"
#include "support.hpp"

using namespace cardpay;
using namespace cardpay::testing;
using canonical::Map;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

std::string detail_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.detail();
  }
  return {};
}

class DownTransport : public ProviderTransport {
 public:
  std::vector<std::string> exchange(const std::string&) override {
    ++calls;
    fail(ErrorCode::ProviderUnreachable, "connection refused");
  }
  int calls = 0;
};

// Passes traffic through, optionally losing replies or corrupting the
// provider countersignature on capture confirmations.
class MeddlingTransport : public ProviderTransport {
 public:
  MeddlingTransport(ProviderService& p, const Keys& k) : inner_(p), keys_(k) {}

  std::vector<std::string> exchange(const std::string& line) override {
    ++calls;
    auto replies = inner_.exchange(line);
    if (lose_replies > 0) {
      --lose_replies;
      return {};
    }
    if (corrupt_confirm) {
      for (auto& r : replies) {
        Envelope e = Envelope::decode(r);
        if (e.type != msg::kCaptureConfirm) continue;
        auto rec = TransactionRecord::from_value(e.body.at("record"));
        (*rec.provider_sig)[5] ^= 4;
        e.body.as_map().insert_or_assign("record", rec.to_value());
        r = seal(e.type, e.body, keys_.provider_registry(), e.nonce, e.ts).encode();
      }
    }
    return replies;
  }

  int lose_replies = 0;
  bool corrupt_confirm = false;
  int calls = 0;

 private:
  LoopbackTransport inner_;
  const Keys& keys_;
};

}  // namespace

// --- catalog ---------------------------------------------------------------

TEST(Catalog, SortedLookupAndFileRoundTrip) {
  TempDir dir("cat");
  Catalog c({{"pen", "Pen", Money{100}}, {"apple", "Apple", Money{250}}});
  ASSERT_EQ(c.list().size(), 2u);
  EXPECT_EQ(c.list()[0].item_id, "apple");
  EXPECT_EQ(c.find("pen")->price, Money{100});
  EXPECT_EQ(c.find("nope"), nullptr);
  c.store(dir.path() / "catalog");
  EXPECT_EQ(Catalog::load(dir.path() / "catalog").list(), c.list());
}

TEST(Catalog, RejectsBadItems) {
  EXPECT_THROW(Catalog({{"a", "A", Money{0}}}), Error);
  EXPECT_THROW(Catalog({{"", "A", Money{1}}}), Error);
  EXPECT_THROW(Catalog({{"a", "A", Money{1}}, {"a", "B", Money{2}}}), Error);
}

// --- checkout --------------------------------------------------------------

TEST(Checkout, RecordsCapturedEntryAndReceipt) {
  MarketHarness m;
  const TestCard c = m.add_card(1000);
  const Receipt r = m.merchant->checkout("apple", c.number, c.secret, c.password, kProvider);
  EXPECT_EQ(r.amount, Money{250});
  EXPECT_EQ(r.status, "CAPTURED");
  ASSERT_EQ(m.merchant->ledger().size(), 1u);
  const TransactionRecord rec = m.merchant->ledger()[0];
  EXPECT_EQ(verify_record(rec, m.keys.merchant_registry()), RecordVerdict::Valid);
  EXPECT_EQ(receipt_token(rec), r.receipt_token);
  EXPECT_EQ(m.merchant->receipt(r.txn_id), r);
  EXPECT_EQ(m.provider->find_card(c.number)->balance, Money{750});
  // The ledger never carries card secrets.
  const std::string bytes = m.merchant->ledger_bytes();
  EXPECT_EQ(bytes.find(c.number), std::string::npos);
  EXPECT_EQ(bytes.find(c.secret), std::string::npos);
  EXPECT_EQ(bytes.find(c.password), std::string::npos);
}

TEST(Checkout, DeclinesRecordNothing) {
  MarketHarness m;
  const TestCard small = m.add_card(100);
  const TestCard fresh = m.add_card(5000, false);
  EXPECT_EQ(detail_of([&] { m.merchant->checkout("book", small.number, small.secret, small.password, kProvider); }),
            "insufficient_funds");
  EXPECT_EQ(detail_of([&] { m.merchant->checkout("book", small.number, small.secret, "bad", kProvider); }),
            "auth_failure");
  EXPECT_EQ(detail_of([&] { m.merchant->checkout("book", fresh.number, fresh.secret, fresh.password, kProvider); }),
            "auth_failure");
  EXPECT_EQ(detail_of([&] { m.merchant->checkout("pen", small.number, small.secret, small.password, "9999"); }),
            "unknown_provider");
  EXPECT_EQ(code_of([&] { m.merchant->checkout("pear", small.number, small.secret, small.password, kProvider); }),
            ErrorCode::UnknownItem);
  EXPECT_TRUE(m.merchant->ledger().empty());
  EXPECT_EQ(m.provider->find_card(small.number)->balance, Money{100});
  EXPECT_FALSE(m.log.empty());
}

TEST(Checkout, ProviderDownFailsClosed) {
  MarketHarness m;
  const TestCard c = m.add_card(1000);
  auto down = std::make_shared<DownTransport>();
  m.merchant->set_transport(down);
  for (int i = 0; i < 10; ++i)
    EXPECT_EQ(code_of([&] { m.merchant->checkout("pen", c.number, c.secret, c.password, kProvider); }),
              ErrorCode::ProviderUnreachable);
  EXPECT_EQ(down->calls, 10);  // refused connections are not retried
  EXPECT_TRUE(m.merchant->ledger().empty());
  EXPECT_EQ(m.provider->balance_inquiry(c.number, c.secret, c.password), Money{1000});
}

TEST(Checkout, LostRepliesAreRetriedSafely) {
  MarketHarness m;
  const TestCard c = m.add_card(1000);
  auto t = std::make_shared<MeddlingTransport>(*m.provider, m.keys);
  m.merchant->set_transport(t);
  t->lose_replies = 2;  // first authorize reply twice
  const Receipt r = m.merchant->checkout("pen", c.number, c.secret, c.password, kProvider);
  EXPECT_EQ(r.amount, Money{100});
  EXPECT_EQ(m.provider->find_card(c.number)->balance, Money{900});
  EXPECT_EQ(m.provider->active_holds().size(), 0u);
  EXPECT_EQ(m.provider->replicas().size(), 1u);
}

TEST(Checkout, SilentProviderRecordsNothing) {
  MarketHarness m;
  const TestCard c = m.add_card(1000);
  auto t = std::make_shared<MeddlingTransport>(*m.provider, m.keys);
  m.merchant->set_transport(t);
  t->lose_replies = 100;
  EXPECT_EQ(code_of([&] { m.merchant->checkout("pen", c.number, c.secret, c.password, kProvider); }),
            ErrorCode::ProviderUnreachable);
  EXPECT_EQ(t->calls, 3);
  EXPECT_TRUE(m.merchant->ledger().empty());
}

TEST(Checkout, BadCountersignatureRaisesAlarm) {
  MarketHarness m;
  const TestCard c = m.add_card(1000);
  auto t = std::make_shared<MeddlingTransport>(*m.provider, m.keys);
  m.merchant->set_transport(t);
  t->corrupt_confirm = true;
  EXPECT_EQ(code_of([&] { m.merchant->checkout("pen", c.number, c.secret, c.password, kProvider); }),
            ErrorCode::BadProviderSignature);
  EXPECT_TRUE(m.merchant->ledger().empty());
  bool alarmed = false;
  for (const auto& l : m.log) alarmed |= l.find("alarm") != std::string::npos;
  EXPECT_TRUE(alarmed);
}

TEST(Checkout, LedgerSurvivesRestart) {
  MarketHarness m;
  const TestCard c = m.add_card(5000);
  for (int i = 0; i < 5; ++i) m.merchant->checkout("apple", c.number, c.secret, c.password, kProvider);
  const std::string before = m.merchant->ledger_bytes();
  m.open_merchant();
  EXPECT_EQ(m.merchant->ledger_bytes(), before);
  // Request ids keep advancing after a restart.
  m.merchant->checkout("apple", c.number, c.secret, c.password, kProvider);
  EXPECT_EQ(m.merchant->ledger().size(), 6u);
  EXPECT_EQ(m.provider->find_card(c.number)->balance, Money{5000 - 6 * 250});
}

// --- settlement from the merchant side -------------------------------------

TEST(MerchantSettlement, PaysOutOnceAndMarksSettled) {
  MarketHarness m;
  const TestCard c = m.add_card(5000);
  for (int i = 0; i < 4; ++i) m.merchant->checkout("book", c.number, c.secret, c.password, kProvider);
  const Period p{kT0, kT0 + 60};
  EXPECT_EQ(code_of([&] { m.merchant->settle(p); }), ErrorCode::UnknownPeriod);  // still open
  m.clock.advance(60);
  const SettlementSummary s = m.merchant->settle(p);
  EXPECT_EQ(s.settled, 4u);
  EXPECT_EQ(s.matched_total, Money{4800});
  EXPECT_EQ(s.fee, Money{48});
  EXPECT_EQ(s.payout + s.fee, s.matched_total);
  EXPECT_EQ(m.merchant->expected_payouts(), Money{4752});
  for (const auto& r : m.merchant->ledger()) EXPECT_EQ(r.state, TxnState::Settled);
  // Settled entries are never demanded again.
  m.clock.advance(1);
  EXPECT_TRUE(m.merchant->build_demand({kT0, kT0 + 61}).records.empty());
}

TEST(MerchantSettlement, RejectsForeignOrUnsignedReports) {
  MarketHarness m;
  const TestCard c = m.add_card(5000);
  m.merchant->checkout("book", c.number, c.secret, c.password, kProvider);
  m.clock.advance(60);
  const Period p{kT0, kT0 + 60};
  const SettlementDemand d = m.merchant->build_demand(p);
  SettlementReport rep = m.provider->handle_settlement(d);
  SettlementReport forged = rep;
  forged.payout = Money{forged.payout.minor + 100};
  EXPECT_EQ(code_of([&] { m.merchant->apply_settlement(forged); }), ErrorCode::BadReportSignature);
  SettlementReport other = rep;
  other.period = {kT0, kT0 + 61};
  other.report_sig = crypto::Bytes(rep.report_sig);
  EXPECT_NE(code_of([&] { m.merchant->apply_settlement(other); }), ErrorCode::Io);
  EXPECT_EQ(m.merchant->apply_settlement(rep).settled, 1u);
  EXPECT_EQ(code_of([&] { m.merchant->apply_settlement(rep); }), ErrorCode::UnknownPeriod);
}

TEST(MerchantSettlement, OutstandingDemandSurvivesRestart) {
  MarketHarness m;
  const TestCard c = m.add_card(5000);
  m.merchant->checkout("book", c.number, c.secret, c.password, kProvider);
  m.clock.advance(60);
  const Period p{kT0, kT0 + 60};
  const SettlementDemand d = m.merchant->build_demand(p);
  m.open_merchant();
  EXPECT_EQ(canonical::encode(m.merchant->build_demand(p).to_value()), canonical::encode(d.to_value()));
  const SettlementReport rep = m.provider->handle_settlement(d);
  EXPECT_EQ(m.merchant->apply_settlement(rep).payout, Money{1188});
  m.open_merchant();
  EXPECT_EQ(m.merchant->expected_payouts(), Money{1188});
  EXPECT_EQ(m.merchant->ledger()[0].state, TxnState::Settled);
}

// --- activation and balance proxies -----------------------------------------

TEST(Proxy, ActivateAndBalance) {
  MarketHarness m;
  const TestCard c = m.add_card(2500, false);
  EXPECT_EQ(code_of([&] { m.merchant->balance(c.number, c.secret, c.password); }), ErrorCode::AuthFailure);
  m.merchant->activate_card(c.number, c.secret, c.password);
  EXPECT_EQ(m.merchant->balance(c.number, c.secret, c.password), Money{2500});
  EXPECT_NE(code_of([&] { m.merchant->activate_card(c.number, c.secret, c.password); }), ErrorCode::Io);
}

// --- HTTP ------------------------------------------------------------------

TEST(HttpHandlers, StatusMapping) {
  MarketHarness m;
  const TestCard c = m.add_card(300);
  auto fields = [&](std::string item, std::string pw) {
    return std::map<std::string, std::string>{{"item_id", item},        {"card_number", c.number},
                                              {"secret", c.secret},      {"password", pw},
                                              {"provider_id", kProvider}};
  };
  EXPECT_EQ(http_catalog(*m.merchant).status, 200);
  EXPECT_EQ(http_checkout(*m.merchant, fields("pear", c.password)).status, 404);
  EXPECT_EQ(http_checkout(*m.merchant, fields("book", c.password)).status, 402);
  EXPECT_EQ(http_checkout(*m.merchant, fields("pen", "bad")).status, 402);
  auto no_secret = fields("pen", c.password);
  no_secret.erase("secret");
  const HttpReply missing = http_checkout(*m.merchant, no_secret);
  EXPECT_EQ(missing.status, 400);
  EXPECT_NE(missing.body.find("secret"), std::string::npos);
  const HttpReply ok = http_checkout(*m.merchant, fields("pen", c.password));
  ASSERT_EQ(ok.status, 200);
  const auto v = canonical::decode(ok.body);
  EXPECT_EQ(canonical::get_int(v, "amount"), 100);
  EXPECT_EQ(http_receipt(*m.merchant, canonical::get_string(v, "txn_id")).status, 200);
  EXPECT_EQ(http_receipt(*m.merchant, "00ff").status, 404);

  m.merchant->set_transport(std::make_shared<DownTransport>());
  const HttpReply down = http_checkout(*m.merchant, fields("pen", c.password));
  EXPECT_EQ(down.status, 503);
  EXPECT_NE(down.body.find("retry"), std::string::npos);
}

TEST(HttpHandlers, DeclineBodiesDoNotLeakReason) {
  MarketHarness m;
  const TestCard c = m.add_card(100);
  const std::map<std::string, std::string> f{{"item_id", "book"},   {"card_number", c.number},
                                             {"secret", c.secret},   {"password", c.password},
                                             {"provider_id", kProvider}};
  const HttpReply insufficient = http_checkout(*m.merchant, f);
  auto g = f;
  g["password"] = "wrong";
  const HttpReply auth = http_checkout(*m.merchant, g);
  EXPECT_EQ(insufficient.status, auth.status);
  EXPECT_EQ(insufficient.body, auth.body);
}

TEST(HttpServer, EndToEndOverSockets) {
  MarketHarness m;
  const TestCard c = m.add_card(1000, false);
  MerchantHttpServer server(*m.merchant, "127.0.0.1", 0);
  server.start();
  httplib::Client cli("127.0.0.1", server.port());

  auto cat = cli.Get("/catalog");
  ASSERT_TRUE(cat);
  EXPECT_EQ(cat->status, 200);
  EXPECT_EQ(canonical::decode(cat->body).at("items").as_list().size(), 3u);

  auto act = cli.Post("/activate",
                      R"({"card_number": ")" + c.number + R"(", "secret": ")" + c.secret +
                          R"(", "new_password": ")" + c.password + R"("})",
                      "application/json");
  ASSERT_TRUE(act);
  EXPECT_EQ(act->status, 200);

  httplib::Params form{{"item_id", "apple"},     {"card_number", c.number}, {"secret", c.secret},
                       {"password", c.password}, {"provider_id", kProvider}};
  auto buy = cli.Post("/checkout", form);
  ASSERT_TRUE(buy);
  ASSERT_EQ(buy->status, 200);
  const std::string txn = canonical::get_string(canonical::decode(buy->body), "txn_id");

  auto rec = cli.Get("/receipt/" + txn);
  ASSERT_TRUE(rec);
  EXPECT_EQ(rec->status, 200);
  EXPECT_EQ(rec->body, buy->body);

  auto bal = cli.Post("/balance", httplib::Params{{"card_number", c.number}, {"secret", c.secret},
                                                  {"password", c.password}});
  ASSERT_TRUE(bal);
  EXPECT_EQ(canonical::get_int(canonical::decode(bal->body), "balance"), 750);

  auto bad = cli.Post("/checkout", "{not json", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  server.stop();
}
