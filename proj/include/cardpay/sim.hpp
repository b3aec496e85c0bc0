#pragma once

// Deterministic end-to-end simulation: issuance, activation, purchases over a
// faulty in-process channel, hold expiry, provider crashes and settlement on
// a simulated clock. A run is a pure function of its SimConfig.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cardpay/canonical.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/money.hpp"

namespace cardpay {

class ProviderService;

// In-process channel straight into a provider. `tap`, when set, sees every
// request line and its reply.
class LoopbackTransport : public ProviderTransport {
 public:
  explicit LoopbackTransport(ProviderService& provider) : provider_(provider) {}
  std::vector<std::string> exchange(const std::string& line) override;

  std::function<void(const std::string& request, const std::string& reply)> tap;

 private:
  ProviderService& provider_;
};

struct SimConfig {
  std::uint64_t seed = 42;
  std::size_t num_cards = 100;
  std::vector<std::int64_t> denominations = {100, 500, 1000, 2500, 5000, 10000, 25000, 50000, 100000};
  std::size_t num_customers = 50;
  std::size_t num_items = 20;
  std::size_t num_purchases = 10000;
  std::int64_t price_min = 100;
  std::int64_t price_max = 5000;
  int drop_pct = 5;
  int duplicate_pct = 5;
  int reorder_pct = 5;
  // Ordinals (1-based) of provider-side captures after which the provider
  // crashes: the capture is journaled, its reply is lost and the provider is
  // rebuilt from disk.
  std::vector<std::uint64_t> crash_points;
  std::int64_t hold_ttl = 900;
  std::int64_t fee_rate_bp = 100;
  std::size_t periods = 3;
  std::int64_t tick_seconds = 1;

  canonical::Value to_value() const;
  // Throws ConfigInvalid. Missing fields keep their defaults.
  static SimConfig from_value(const canonical::Value& v);
  void validate() const;
};

// Inputs to the conservation equation
//   issued = remaining + held + payouts + fees + undemanded.
struct FinalState {
  Money issued;
  Money remaining;
  Money held;
  Money payouts;
  Money fees;
  Money undemanded;
};

struct ConservationResult {
  bool ok = false;
  std::int64_t residual = 0;  // issued minus everything accounted for
};

ConservationResult check_conservation(const FinalState& s);

struct SimReport {
  std::uint64_t seed = 0;
  FinalState totals;
  Money spent;  // captured value per the provider's replicas
  ConservationResult conservation;
  std::size_t purchases_ok = 0;
  std::map<std::string, std::size_t> declines;       // reason -> count
  std::map<std::string, std::size_t> discrepancies;  // kind -> count
  std::map<std::string, std::size_t> network;        // sent, dropped, ...
  std::size_t ledger_entries = 0;
  std::size_t replicas = 0;
  std::size_t crashes = 0;
  std::size_t crash_state_mismatches = 0;
  // Checks against a reference ledger rebuilt from the provider's reply log.
  std::size_t double_spends = 0;       // cards captured beyond their value
  std::size_t duplicate_txn_ids = 0;   // in the merchant ledger
  std::size_t card_mismatches = 0;     // balance != value - captured
  std::size_t replica_mismatches = 0;  // replicas != logged captures
  std::uint64_t invariant_violations = 0;
  std::size_t unsettled_periods = 0;

  bool invariants_hold() const;
  // Canonical report. Wall-clock duration is deliberately not part of it so
  // that identical configs give identical bytes.
  canonical::Value to_value() const;
};

SimReport run_simulation(const SimConfig& config);

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "cardpay");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cardpay
