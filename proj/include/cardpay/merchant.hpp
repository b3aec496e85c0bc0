#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cardpay/clock.hpp"
#include "cardpay/envelope.hpp"
#include "cardpay/journal.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/messages.hpp"
#include "cardpay/record.hpp"
#include "cardpay/settlement.hpp"

namespace cardpay {

struct CatalogItem {
  std::string item_id;
  std::string title;
  Money price;
  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

// Static product list loaded at startup.
class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<CatalogItem> items);

  // An empty file is an empty catalog.
  static Catalog load(const std::filesystem::path& path);
  void store(const std::filesystem::path& path) const;

  // Sorted by item_id.
  std::vector<CatalogItem> list() const;
  const CatalogItem* find(const std::string& item_id) const;

 private:
  std::map<std::string, CatalogItem> items_;
};

struct Receipt {
  std::string txn_id;
  std::string item_id;
  Money amount;
  std::int64_t timestamp = 0;
  std::string status;
  std::string receipt_token;

  canonical::Value to_value() const;
  friend bool operator==(const Receipt&, const Receipt&) = default;
};

// Carries envelopes to the provider. `exchange` returns every reply line that
// arrived for this send (none when lost, possibly stale or duplicated ones);
// the caller picks the reply matching its nonce. Throws ProviderUnreachable
// when no connection can be made.
class ProviderTransport {
 public:
  virtual ~ProviderTransport() = default;
  virtual std::vector<std::string> exchange(const std::string& line) = 0;
};

struct MerchantConfig {
  std::string merchant_id;
  std::string provider_id;
  std::filesystem::path data_dir;
  bool sync = true;
  // Sends per provider call before giving up on a reply. Retries reuse the
  // same body, so the provider's idempotency makes them safe.
  int attempts = 3;
  // Fixes request salts and envelope nonces; simulation use only.
  std::optional<std::string> deterministic_seed;
  // Receives operator-facing log lines (decline detail, alarms).
  std::function<void(const std::string&)> log;
};

struct SettlementSummary {
  Period period;
  std::size_t settled = 0;
  Money matched_total;
  Money fee;
  Money payout;
  std::vector<Discrepancy> discrepancies;
};

// The merchant ("company B"): catalog, checkout orchestration and the signed
// transaction ledger. Checkouts may run concurrently; ledger changes are
// serialized through one journal.
class MerchantService {
 public:
  MerchantService(MerchantConfig config, KeyRegistry registry, Catalog catalog,
                  std::shared_ptr<ProviderTransport> transport, Clock clock = system_clock());

  std::vector<CatalogItem> list_catalog() const { return catalog_.list(); }

  // Authorize, countersign and record one purchase. Throws UnknownItem,
  // PaymentDeclined (detail: insufficient_funds, auth_failure, ...),
  // ProviderUnreachable or BadProviderSignature. Nothing is recorded unless
  // a Receipt is returned.
  Receipt checkout(const std::string& item_id, const std::string& card_number,
                   const std::string& secret, const std::string& password,
                   const std::string& provider_id);

  SettlementDemand build_demand(const Period& period);
  SettlementSummary apply_settlement(const SettlementReport& report);
  // build_demand, send it, apply the report.
  SettlementSummary settle(const Period& period);

  // Customer conveniences proxied to the provider.
  void activate_card(const std::string& card_number, const std::string& secret,
                     const std::string& new_password);
  Money balance(const std::string& card_number, const std::string& secret,
                const std::string& password);

  std::optional<Receipt> receipt(const std::string& txn_id) const;
  std::vector<TransactionRecord> ledger() const;
  std::string ledger_bytes() const;
  void export_ledger(const std::filesystem::path& path) const;
  Money expected_payouts() const;

  void set_transport(std::shared_ptr<ProviderTransport> transport);
  const MerchantConfig& config() const { return config_; }
  const KeyRegistry& registry() const { return registry_; }

 private:
  std::string next_request_id();
  std::string next_nonce();
  std::optional<Envelope> call(std::string_view type, canonical::Value body);
  void journal_and_apply(const canonical::Value& entry);
  void apply(const canonical::Value& entry);
  Receipt make_receipt(const TransactionRecord& r) const;
  void log(const std::string& line) const;

  MerchantConfig config_;
  KeyRegistry registry_;
  Catalog catalog_;
  Clock clock_;

  mutable std::mutex transport_mu_;
  std::shared_ptr<ProviderTransport> transport_;

  mutable std::mutex mu_;
  std::unique_ptr<Journal> journal_;
  std::string salt_;
  std::uint64_t counter_ = 0;
  std::uint64_t reserved_ = 0;
  std::uint64_t nonce_counter_ = 0;
  std::vector<TransactionRecord> entries_;
  std::map<std::string, std::size_t> by_txn_;
  std::map<std::string, std::size_t> by_request_;
  std::map<Period, SettlementDemand> outstanding_;
  std::set<std::string> pending_;  // txn ids inside an outstanding demand
  Money payouts_;
};

}  // namespace cardpay
