#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cardpay/card.hpp"
#include "cardpay/clock.hpp"
#include "cardpay/crypto.hpp"
#include "cardpay/envelope.hpp"
#include "cardpay/issuance.hpp"
#include "cardpay/journal.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/messages.hpp"
#include "cardpay/replica_store.hpp"
#include "cardpay/settlement.hpp"

namespace cardpay {

struct ProviderConfig {
  std::string provider_id;
  std::filesystem::path data_dir;
  std::int64_t hold_ttl = 900;
  std::int64_t fee_rate_bp = 100;
  std::int64_t acceptance_window = 300;
  bool sync = true;
  // Snapshot and truncate the journal after this many entries; 0 disables.
  std::uint64_t snapshot_every = 10000;
  crypto::PasswordCost password_cost = crypto::PasswordCost::interactive();
};

// Funds reserved by an AVAILABLE decision until captured or expired.
struct Hold {
  std::string hold_id;
  std::string card_number;
  Money amount;
  std::string merchant_id;
  std::string request_id;
  std::int64_t expiry = 0;

  canonical::Value to_value() const;
  static Hold from_value(const canonical::Value& v);
  friend bool operator==(const Hold&, const Hold&) = default;
};

struct LoadReport {
  std::size_t loaded = 0;
  std::vector<std::string> duplicates;
};

// The card provider ("company A"). Owns the sold-cards store, authorizes and
// captures credit requests, keeps countersigned replicas and answers
// settlement demands. Every state change is journaled before it is applied
// and before the caller sees a result.
//
// Thread safety: all public members may be called concurrently. Operations on
// one card are applied in a single total order; other cards proceed in
// parallel except for the short journal critical section.
class ProviderService {
 public:
  ProviderService(ProviderConfig config, KeyRegistry registry, Clock clock = system_clock());
  ~ProviderService();

  ProviderService(const ProviderService&) = delete;
  ProviderService& operator=(const ProviderService&) = delete;

  LoadReport load_cards(const CardBatch& batch);
  void activate_card(const std::string& card_number, const std::string& secret,
                     const std::string& new_password);
  AuthorizationDecision authorize(const CreditRequest& request);
  CaptureConfirm capture(const std::string& hold_id, const TransactionRecord& merchant_signed);
  std::size_t expire_holds(std::int64_t now);
  SettlementReport handle_settlement(const SettlementDemand& demand);
  // Balance minus active holds. Throws AuthFailure for any credential problem.
  Money balance_inquiry(const std::string& card_number, const std::string& secret,
                        const std::string& password);

  // One wire envelope in, one reply envelope out. `authenticated_peer` is the
  // party id proven by the transport, when there is one. Replies are a pure
  // function of the request bytes and the resulting state, so a repeated
  // request yields a byte-identical reply.
  std::string handle_line(std::string_view line, const std::string* authenticated_peer = nullptr);

  std::optional<SettlementReport> settled_report(const std::string& merchant_id,
                                                 const Period& period) const;
  std::optional<Card> find_card(const std::string& card_number) const;
  std::vector<Card> cards() const;
  std::vector<Hold> active_holds() const;
  Money held_amount(const std::string& card_number) const;
  std::vector<TransactionRecord> replicas() const;

  // Full durable state as a canonical value, and its digest.
  canonical::Value state_value() const;
  std::string state_digest() const;
  void snapshot();

  // Count of operations that observed balance - holds < 0. Must stay zero.
  std::uint64_t invariant_violations() const { return violations_.load(); }

  const ProviderConfig& config() const { return config_; }
  const KeyRegistry& registry() const { return registry_; }
  std::int64_t now() const { return clock_(); }

 private:
  struct CardSlot {
    std::mutex mu;
    Card card;
  };
  struct CachedDecision {
    std::string fingerprint;
    AuthorizationDecision decision;
  };

  CardSlot* slot(const std::string& card_number) const;
  bool credentials_ok(const Card& snapshot, const std::string& secret, const std::string& password) const;
  void journal_and_apply(const canonical::Value& entry);
  void apply(const canonical::Value& entry);
  void check_card_invariant(const Card& card);
  canonical::Value state_value_locked() const;
  void restore_state(const canonical::Value& state);
  canonical::Value dispatch(const Envelope& env, std::string& reply_type);

  ProviderConfig config_;
  KeyRegistry registry_;
  Clock clock_;

  mutable std::shared_mutex cards_mu_;  // structure of cards_
  std::map<std::string, std::unique_ptr<CardSlot>> cards_;

  // Guards everything below and the journal. Card fields are mutated only
  // while holding both the card's slot mutex and this one.
  mutable std::mutex state_mu_;
  std::unique_ptr<Journal> journal_;
  std::map<std::string, Hold> holds_;
  std::map<std::string, Money> held_by_card_;
  std::set<std::string> released_holds_;
  std::map<std::string, std::string> captured_holds_;  // hold_id -> txn_id
  std::map<std::string, CachedDecision> decisions_;   // merchant|request_id
  ReplicaStore replicas_;
  std::map<std::string, SettlementReport> settlements_;  // merchant|period
  std::atomic<std::uint64_t> violations_{0};
};

std::string derive_hold_id(const std::string& merchant_id, const std::string& request_id);

}  // namespace cardpay
