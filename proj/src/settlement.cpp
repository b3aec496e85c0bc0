#include "cardpay/settlement.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace cardpay {

using canonical::get_int;
using canonical::get_string;
using canonical::List;
using canonical::Map;
using canonical::Value;

Value Period::to_value() const { return Map{{"start", start}, {"end", end}}; }

Period Period::from_value(const Value& v) {
  Period p{get_int(v, "start"), get_int(v, "end")};
  if (p.end < p.start) fail(ErrorCode::MalformedInput, "period ends before it starts");
  return p;
}

Period Period::parse(std::string_view text) {
  const auto dots = text.find("..");
  if (dots == std::string_view::npos) fail(ErrorCode::MalformedInput, "period must be <start>..<end>");
  auto num = [](std::string_view s) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      fail(ErrorCode::MalformedInput, "bad period bound '" + std::string(s) + "'");
    return v;
  };
  Period p{num(text.substr(0, dots)), num(text.substr(dots + 2))};
  if (p.end < p.start) fail(ErrorCode::MalformedInput, "period ends before it starts");
  return p;
}

Money SettlementDemand::total() const {
  Money t;
  for (const auto& r : records) t += r.amount;
  return t;
}

std::string SettlementDemand::signing_bytes() const {
  List recs;
  for (const auto& r : records) recs.push_back(r.to_value());
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"kind", "settlement_demand"},
      {"merchant_id", merchant_id},
      {"period", period.to_value()},
      {"records", std::move(recs)},
  });
}

void SettlementDemand::sign(const KeyRegistry& merchant) {
  demand_sig = merchant.sign(signing_bytes());
}

bool SettlementDemand::signature_valid(const KeyRegistry& registry) const {
  return registry.verify_key(merchant_id).verify(signing_bytes(), demand_sig);
}

Value SettlementDemand::to_value() const {
  List recs;
  for (const auto& r : records) recs.push_back(r.to_value());
  return Map{
      {"v", kFormatVersion},
      {"kind", "settlement_demand"},
      {"merchant_id", merchant_id},
      {"period", period.to_value()},
      {"records", std::move(recs)},
      {"demand_sig", crypto::to_hex(demand_sig)},
  };
}

SettlementDemand SettlementDemand::from_value(const Value& v) {
  try {
    if (get_int(v, "v") != kFormatVersion || get_string(v, "kind") != "settlement_demand")
      fail(ErrorCode::MalformedDemand, "not a settlement demand");
    SettlementDemand d;
    d.merchant_id = get_string(v, "merchant_id");
    d.period = Period::from_value(v.at("period"));
    for (const auto& r : v.at("records").as_list()) d.records.push_back(TransactionRecord::from_value(r));
    d.demand_sig = crypto::from_hex(get_string(v, "demand_sig"));
    return d;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedDemand) throw;
    fail(ErrorCode::MalformedDemand, e.what());
  }
}

std::string_view to_string(DiscrepancyKind k) {
  switch (k) {
    case DiscrepancyKind::BadSignature: return "BAD_SIGNATURE";
    case DiscrepancyKind::MissingReplica: return "MISSING_REPLICA";
    case DiscrepancyKind::ContentMismatch: return "CONTENT_MISMATCH";
    case DiscrepancyKind::AlreadySettled: return "ALREADY_SETTLED";
    case DiscrepancyKind::OutOfPeriod: return "OUT_OF_PERIOD";
    case DiscrepancyKind::DuplicateDemand: return "DUPLICATE_DEMAND";
  }
  return "?";
}

DiscrepancyKind discrepancy_kind_from_string(std::string_view s) {
  for (auto k : {DiscrepancyKind::BadSignature, DiscrepancyKind::MissingReplica,
                 DiscrepancyKind::ContentMismatch, DiscrepancyKind::AlreadySettled,
                 DiscrepancyKind::OutOfPeriod, DiscrepancyKind::DuplicateDemand})
    if (to_string(k) == s) return k;
  fail(ErrorCode::MalformedInput, "unknown discrepancy kind '" + std::string(s) + "'");
}

namespace {

// Empty string when the signatures are acceptable, otherwise the reason.
std::string signature_problem(const TransactionRecord& r, const SettlementDemand& demand,
                              const KeyRegistry& registry) {
  if (r.merchant_id != demand.merchant_id) return "record belongs to another merchant";
  if (r.provider_id != registry.own_id()) return "record names another provider";
  if (!r.merchant_sig || !r.provider_sig) return "missing signature";
  try {
    TransactionRecord as_captured = r;
    as_captured.state = TxnState::Captured;
    const RecordVerdict v = verify_record(as_captured, registry);
    if (v != RecordVerdict::Valid) return std::string(to_string(v));
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

ReconcileResult reconcile(const SettlementDemand& demand, const ReplicaStore& replicas,
                          const KeyRegistry& registry) {
  ReconcileResult out;
  std::set<std::string> seen;
  for (const auto& r : demand.records) {
    const bool first_sighting = seen.insert(r.txn_id).second;
    auto flag = [&](DiscrepancyKind kind, std::string detail) {
      out.discrepancies.push_back({r.txn_id, kind, std::move(detail)});
    };

    if (auto why = signature_problem(r, demand, registry); !why.empty()) {
      flag(DiscrepancyKind::BadSignature, why);
      continue;
    }
    const TransactionRecord* replica = replicas.find(r.txn_id);
    if (!replica) {
      flag(DiscrepancyKind::MissingReplica, "no replica for txn");
      continue;
    }
    if (!replica->same_signed_fields(r) || replica->merchant_sig != r.merchant_sig ||
        replica->provider_sig != r.provider_sig) {
      flag(DiscrepancyKind::ContentMismatch, "demanded record differs from replica");
      continue;
    }
    if (replica->state == TxnState::Settled) {
      flag(DiscrepancyKind::AlreadySettled, "settled in an earlier period");
      continue;
    }
    if (replica->state != TxnState::Captured) {
      flag(DiscrepancyKind::ContentMismatch, "replica is not captured");
      continue;
    }
    if (!demand.period.contains(r.timestamp)) {
      flag(DiscrepancyKind::OutOfPeriod, "timestamp outside " + demand.period.key());
      continue;
    }
    if (!first_sighting) {
      flag(DiscrepancyKind::DuplicateDemand, "txn listed more than once");
      continue;
    }
    out.matched.push_back(*replica);
  }
  return out;
}

FeeSplit compute_fee(Money matched_total, std::int64_t fee_rate_bp) {
  if (fee_rate_bp < 0 || fee_rate_bp > kBasisPointsDenominator)
    fail(ErrorCode::RateOutOfRange, "fee rate must be within 0..10000 bp");
  if (matched_total.minor < 0) fail(ErrorCode::InvalidAmount, "negative settlement total");
  const __int128 product = static_cast<__int128>(matched_total.minor) * fee_rate_bp;
  const auto fee = static_cast<std::int64_t>((product + kBasisPointsDenominator - 1) /
                                             kBasisPointsDenominator);
  return {Money{fee}, Money{matched_total.minor - fee}};
}

std::string SettlementReport::signing_bytes() const {
  List ids;
  for (const auto& id : matched) ids.push_back(id);
  List disc;
  for (const auto& d : discrepancies)
    disc.push_back(Map{{"txn_id", d.txn_id}, {"kind", std::string(to_string(d.kind))}, {"detail", d.detail}});
  List und;
  for (const auto& u : undemanded) und.push_back(Map{{"txn_id", u.txn_id}, {"amount", u.amount.minor}});
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"kind", "settlement_report"},
      {"provider_id", provider_id},
      {"merchant_id", merchant_id},
      {"period", period.to_value()},
      {"fee_rate_bp", fee_rate_bp},
      {"matched", std::move(ids)},
      {"matched_total", matched_total.minor},
      {"fee", fee.minor},
      {"payout", payout.minor},
      {"discrepancies", std::move(disc)},
      {"undemanded", std::move(und)},
      {"undemanded_total", undemanded_total.minor},
  });
}

bool SettlementReport::signature_valid(const KeyRegistry& registry) const {
  return registry.verify_key(provider_id).verify(signing_bytes(), report_sig);
}

Value SettlementReport::to_value() const {
  Value v = canonical::decode(signing_bytes());
  v.as_map().emplace("report_sig", crypto::to_hex(report_sig));
  return v;
}

SettlementReport SettlementReport::from_value(const Value& v) {
  if (get_int(v, "v") != kFormatVersion || get_string(v, "kind") != "settlement_report")
    fail(ErrorCode::MalformedInput, "not a settlement report");
  SettlementReport r;
  r.provider_id = get_string(v, "provider_id");
  r.merchant_id = get_string(v, "merchant_id");
  r.period = Period::from_value(v.at("period"));
  r.fee_rate_bp = get_int(v, "fee_rate_bp");
  for (const auto& id : v.at("matched").as_list()) r.matched.push_back(id.as_string());
  r.matched_total = Money{get_int(v, "matched_total")};
  r.fee = Money{get_int(v, "fee")};
  r.payout = Money{get_int(v, "payout")};
  for (const auto& d : v.at("discrepancies").as_list())
    r.discrepancies.push_back({get_string(d, "txn_id"),
                               discrepancy_kind_from_string(get_string(d, "kind")),
                               get_string(d, "detail")});
  for (const auto& u : v.at("undemanded").as_list())
    r.undemanded.push_back({get_string(u, "txn_id"), Money{get_int(u, "amount")}});
  r.undemanded_total = Money{get_int(v, "undemanded_total")};
  r.report_sig = crypto::from_hex(get_string(v, "report_sig"));
  return r;
}

SettlementReport emit_report(const ReportContext& context,
                             const std::vector<TransactionRecord>& matched,
                             std::vector<Discrepancy> discrepancies, std::int64_t fee_rate_bp,
                             const KeyRegistry& signer) {
  SettlementReport r;
  r.provider_id = signer.own_id();
  r.merchant_id = context.merchant_id;
  r.period = context.period;
  r.fee_rate_bp = fee_rate_bp;
  for (const auto& m : matched) {
    r.matched.push_back(m.txn_id);
    r.matched_total += m.amount;
  }
  std::sort(r.matched.begin(), r.matched.end());
  const FeeSplit split = compute_fee(r.matched_total, fee_rate_bp);
  r.fee = split.fee;
  r.payout = split.payout;
  std::stable_sort(discrepancies.begin(), discrepancies.end(), [](const auto& a, const auto& b) {
    return std::tie(a.txn_id, a.kind) < std::tie(b.txn_id, b.kind);
  });
  r.discrepancies = std::move(discrepancies);
  r.undemanded = context.undemanded;
  std::sort(r.undemanded.begin(), r.undemanded.end(),
            [](const auto& a, const auto& b) { return a.txn_id < b.txn_id; });
  for (const auto& u : r.undemanded) r.undemanded_total += u.amount;
  r.report_sig = signer.sign(r.signing_bytes());
  return r;
}

}  // namespace cardpay
