#include "cardpay/stress.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "cardpay/error.hpp"
#include "cardpay/issuance.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/provider.hpp"
#include "cardpay/sim.hpp"
#include "cardpay/transport.hpp"

namespace cardpay {

using canonical::Map;

bool StressReport::ok() const {
  return static_cast<std::int64_t>(captures) == expected_captures &&
         final_balance == 0 && negative_balance_events == 0 &&
         !failures.contains("ledger_disagreement");
}

canonical::Value StressReport::to_value() const {
  Map f;
  for (const auto& [k, n] : failures) f.emplace(k, n);
  return Map{{"attempts", attempts},
             {"captures", captures},
             {"expected_captures", expected_captures},
             {"final_balance", final_balance},
             {"negative_balance_events", negative_balance_events},
             {"failures", std::move(f)},
             {"ok", ok()}};
}

StressReport run_stress(const StressConfig& cfg) {
  if (cfg.workers == 0 || cfg.server_threads == 0) fail(ErrorCode::ConfigInvalid, "need at least one worker and one server thread");
  if (cfg.request_amount <= 0 || cfg.card_balance % cfg.request_amount != 0)
    fail(ErrorCode::ConfigInvalid, "card balance must be a positive multiple of the request amount");

  const std::string provider_id = "4242";
  const std::string merchant_id = "stress-merchant";
  TempDir dir("cardpay-stress");

  const crypto::SigningKey pkey = test_key("stress-provider");
  const crypto::SigningKey mkey = test_key("stress-merchant");

  ProviderConfig pcfg;
  pcfg.provider_id = provider_id;
  pcfg.data_dir = dir.path() / "provider";
  pcfg.sync = false;
  pcfg.password_cost = crypto::PasswordCost::minimal();
  KeyRegistry preg(provider_id, pkey);
  preg.add_counterparty(merchant_id, mkey.public_key());
  ProviderService provider(pcfg, preg);

  IssueOptions opt;
  opt.seed = "cardpay/stress";
  const CardBatch batch = issue_batch(provider_id, Money{cfg.card_balance}, 1, opt);
  provider.load_cards(batch);
  const IssuedCard card = batch.cards.front();
  provider.activate_card(card.card_number, card.secret, "stress-password");

  ServerOptions sopt;
  sopt.bind = "127.0.0.1";
  sopt.port = 0;
  sopt.threads = cfg.server_threads;
  sopt.mode = cfg.secure ? TransportMode::Secure : TransportMode::PlaintextAllowlist;
  if (!cfg.secure) sopt.allowlist = {"127.0.0.1"};
  ProviderServer server(provider, sopt);
  server.start();

  KeyRegistry mreg(merchant_id, mkey);
  mreg.add_counterparty(provider_id, pkey.public_key());
  MerchantConfig mcfg;
  mcfg.merchant_id = merchant_id;
  mcfg.provider_id = provider_id;
  mcfg.data_dir = dir.path() / "merchant";
  mcfg.sync = false;
  mcfg.log = [](const std::string&) {};
  auto transport = std::make_shared<TcpProviderTransport>("127.0.0.1", server.port(), mreg, provider_id,
                                                          sopt.mode, 30000);
  MerchantService merchant(mcfg, mreg, Catalog({{"unit", "Unit", Money{cfg.request_amount}}}), transport);

  StressReport report;
  report.expected_captures = cfg.card_balance / cfg.request_amount;
  const std::size_t per_worker =
      cfg.requests_per_worker ? cfg.requests_per_worker : static_cast<std::size_t>(report.expected_captures);

  std::atomic<bool> done{false};
  std::atomic<std::uint64_t> negative_seen{0};
  std::thread monitor([&] {
    while (!done) {
      if (auto c = provider.find_card(card.card_number)) {
        if (c->balance.minor < 0) negative_seen.fetch_add(1);
      }
      std::this_thread::yield();
    }
  });

  std::mutex mu;
  std::atomic<bool> go{false};
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < cfg.workers; ++w) {
    workers.emplace_back([&] {
      while (!go) std::this_thread::yield();
      for (std::size_t i = 0; i < per_worker; ++i) {
        std::string outcome;
        try {
          merchant.checkout("unit", card.card_number, card.secret, "stress-password", provider_id);
        } catch (const Error& e) {
          outcome = e.code() == ErrorCode::PaymentDeclined ? e.detail() : std::string(to_string(e.code()));
        }
        std::lock_guard lk(mu);
        ++report.attempts;
        if (outcome.empty()) ++report.captures;
        else ++report.failures[outcome];
      }
    });
  }
  go = true;
  for (auto& t : workers) t.join();
  done = true;
  monitor.join();
  server.stop();

  report.final_balance = provider.find_card(card.card_number)->balance.minor;
  report.negative_balance_events = negative_seen.load() + provider.invariant_violations();
  if (provider.replicas().size() != report.captures || merchant.ledger().size() != report.captures)
    ++report.failures["ledger_disagreement"];
  return report;
}

}  // namespace cardpay
