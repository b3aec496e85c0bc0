#pragma once

// Shared fixtures and generators for the unit tests.

#include <memory>
#include <random>
#include <string>

#include "cardpay/clock.hpp"
#include "cardpay/issuance.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/provider.hpp"
#include "cardpay/sim.hpp"

namespace cardpay::testing {

inline constexpr std::int64_t kT0 = 1700000000;
inline const std::string kProvider = "4242";
inline const std::string kMerchant = "m-1";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(g_); }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(g_);
  }
  bool coin() { return below(2) == 1; }
  std::string ascii(std::size_t max_len) {
    std::string s(below(max_len + 1), ' ');
    for (char& c : s) c = static_cast<char>(below(128));
    return s;
  }
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
};

struct Keys {
  crypto::SigningKey provider = test_key("provider");
  crypto::SigningKey merchant = test_key("merchant");

  KeyRegistry provider_registry() const {
    KeyRegistry r(kProvider, provider);
    r.add_counterparty(kMerchant, merchant.public_key());
    return r;
  }
  KeyRegistry merchant_registry() const {
    KeyRegistry r(kMerchant, merchant);
    r.add_counterparty(kProvider, provider.public_key());
    return r;
  }
};

struct TestCard {
  std::string number;
  std::string secret;
  std::string password;
};

// A provider on a scratch directory and a manual clock.
class ProviderHarness {
 public:
  ProviderHarness() : clock(kT0) { open(); }

  void open() {
    provider.reset();
    provider = std::make_unique<ProviderService>(config(), keys.provider_registry(), clock.clock());
  }

  ProviderConfig config() const {
    ProviderConfig c;
    c.provider_id = kProvider;
    c.data_dir = dir.path() / "provider";
    c.sync = false;
    c.fee_rate_bp = fee_rate_bp;
    c.snapshot_every = snapshot_every;
    c.password_cost = crypto::PasswordCost::minimal();
    return c;
  }

  TestCard add_card(std::int64_t denomination, bool activate = true) {
    IssueOptions opt;
    opt.seed = "harness|" + std::to_string(next_batch_);
    opt.batch_id = next_batch_++;
    const CardBatch b = issue_batch(kProvider, Money{denomination}, 1, opt);
    provider->load_cards(b);
    TestCard c{b.cards[0].card_number, b.cards[0].secret, "pw-" + std::to_string(next_batch_)};
    if (activate) provider->activate_card(c.number, c.secret, c.password);
    return c;
  }

  CreditRequest request(const TestCard& card, std::int64_t amount, const std::string& request_id) const {
    CreditRequest r;
    r.request_id = request_id;
    r.provider_id = kProvider;
    r.card_number = card.number;
    r.secret = card.secret;
    r.password = card.password;
    r.amount = Money{amount};
    r.merchant_id = kMerchant;
    r.item_id = "item";
    r.timestamp = clock.now();
    return r;
  }

  // Merchant-signed AUTHORIZED record matching a request.
  TransactionRecord merchant_record(const CreditRequest& r) const {
    TransactionRecord t;
    t.txn_id = derive_txn_id(r.merchant_id, r.request_id);
    t.request_id = r.request_id;
    t.timestamp = r.timestamp;
    t.amount = r.amount;
    t.merchant_id = r.merchant_id;
    t.item_id = r.item_id;
    t.card_ref = card_ref(r.card_number);
    t.provider_id = kProvider;
    t.state = TxnState::Authorized;
    t.merchant_sig = sign_record(t, keys.merchant_registry());
    return t;
  }

  // authorize + capture; returns the countersigned record.
  TransactionRecord buy(const TestCard& card, std::int64_t amount, const std::string& request_id) {
    const CreditRequest r = request(card, amount, request_id);
    const AuthorizationDecision d = provider->authorize(r);
    if (d.verdict != Verdict::Available) fail(ErrorCode::PaymentDeclined, "test purchase declined");
    return provider->capture(*d.hold_id, merchant_record(r)).record;
  }

  Keys keys;
  TempDir dir{"cardpay-test"};
  ManualClock clock;
  std::int64_t fee_rate_bp = 100;
  std::uint64_t snapshot_every = 10000;
  std::unique_ptr<ProviderService> provider;

 private:
  std::uint32_t next_batch_ = 1;
};

// Provider plus a merchant talking to it in-process.
class MarketHarness : public ProviderHarness {
 public:
  MarketHarness() {
    transport = std::make_shared<LoopbackTransport>(*provider);
    open_merchant();
  }

  void open_merchant() {
    merchant.reset();
    MerchantConfig c;
    c.merchant_id = kMerchant;
    c.provider_id = kProvider;
    c.data_dir = dir.path() / "merchant";
    c.sync = false;
    c.log = [this](const std::string& line) { log.push_back(line); };
    merchant = std::make_unique<MerchantService>(c, keys.merchant_registry(), catalog, transport, clock.clock());
  }

  void reopen_provider() {
    transport.reset();
    open();
    transport = std::make_shared<LoopbackTransport>(*provider);
    merchant->set_transport(transport);
  }

  Catalog catalog{{{"apple", "Apple", Money{250}}, {"book", "Book", Money{1200}}, {"pen", "Pen", Money{100}}}};
  std::shared_ptr<LoopbackTransport> transport;
  std::unique_ptr<MerchantService> merchant;
  std::vector<std::string> log;
};

}  // namespace cardpay::testing
