#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cardpay/canonical.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/money.hpp"
#include "cardpay/record.hpp"
#include "cardpay/replica_store.hpp"

namespace cardpay {

// Half-open interval [start, end) of epoch seconds.
struct Period {
  std::int64_t start = 0;
  std::int64_t end = 0;

  bool contains(std::int64_t ts) const { return start <= ts && ts < end; }
  std::string key() const { return std::to_string(start) + ".." + std::to_string(end); }
  canonical::Value to_value() const;
  static Period from_value(const canonical::Value& v);
  // Parses "<start>..<end>".
  static Period parse(std::string_view text);

  friend auto operator<=>(const Period&, const Period&) = default;
};

struct SettlementDemand {
  std::string merchant_id;
  Period period;
  std::vector<TransactionRecord> records;
  crypto::Bytes demand_sig;

  Money total() const;
  std::string signing_bytes() const;
  void sign(const KeyRegistry& merchant);
  bool signature_valid(const KeyRegistry& registry) const;

  canonical::Value to_value() const;
  static SettlementDemand from_value(const canonical::Value& v);
};

enum class DiscrepancyKind {
  BadSignature,
  MissingReplica,
  ContentMismatch,
  AlreadySettled,
  OutOfPeriod,
  DuplicateDemand,
};
std::string_view to_string(DiscrepancyKind k);
DiscrepancyKind discrepancy_kind_from_string(std::string_view s);

struct Discrepancy {
  std::string txn_id;
  DiscrepancyKind kind;
  std::string detail;

  friend bool operator==(const Discrepancy&, const Discrepancy&) = default;
};

struct ReconcileResult {
  std::vector<TransactionRecord> matched;
  std::vector<Discrepancy> discrepancies;
};

// Classifies every demanded record: matched, or exactly one discrepancy of the
// first failing kind in the order BAD_SIGNATURE, MISSING_REPLICA,
// CONTENT_MISMATCH, ALREADY_SETTLED, OUT_OF_PERIOD, DUPLICATE_DEMAND.
// `registry.own_id()` is taken as the provider. The demand signature must
// already have been checked.
ReconcileResult reconcile(const SettlementDemand& demand, const ReplicaStore& replicas,
                          const KeyRegistry& registry);

struct FeeSplit {
  Money fee;
  Money payout;
};

inline constexpr std::int64_t kBasisPointsDenominator = 10000;

// fee = ceil(total * rate_bp / 10000) in exact integer arithmetic.
// Throws RateOutOfRange unless 0 <= rate_bp <= 10000.
FeeSplit compute_fee(Money matched_total, std::int64_t fee_rate_bp);

// A captured replica the merchant has not demanded for the period. Listed for
// the provider's records; never part of the payout.
struct UndemandedEntry {
  std::string txn_id;
  Money amount;
  friend bool operator==(const UndemandedEntry&, const UndemandedEntry&) = default;
};

struct SettlementReport {
  std::string provider_id;
  std::string merchant_id;
  Period period;
  std::int64_t fee_rate_bp = 0;
  std::vector<std::string> matched;  // txn ids, sorted
  Money matched_total;
  Money fee;
  Money payout;
  std::vector<Discrepancy> discrepancies;
  std::vector<UndemandedEntry> undemanded;
  Money undemanded_total;
  crypto::Bytes report_sig;

  std::string signing_bytes() const;
  bool signature_valid(const KeyRegistry& registry) const;
  canonical::Value to_value() const;
  static SettlementReport from_value(const canonical::Value& v);
};

struct ReportContext {
  std::string merchant_id;
  Period period;
  std::vector<UndemandedEntry> undemanded;
};

SettlementReport emit_report(const ReportContext& context,
                             const std::vector<TransactionRecord>& matched,
                             std::vector<Discrepancy> discrepancies, std::int64_t fee_rate_bp,
                             const KeyRegistry& signer);

}  // namespace cardpay
