#include "cardpay/merchant.hpp"

#include <algorithm>
#include <iostream>

#include "cardpay/card.hpp"

namespace cardpay {

using canonical::get_int;
using canonical::get_string;
using canonical::List;
using canonical::Map;
using canonical::Value;

namespace {

constexpr std::uint64_t kCounterBlock = 64;

}  // namespace

Catalog::Catalog(std::vector<CatalogItem> items) {
  for (auto& it : items) {
    if (it.item_id.empty()) fail(ErrorCode::MalformedInput, "catalog item without id");
    if (it.price.minor < 1) fail(ErrorCode::InvalidAmount, "price of " + it.item_id + " below 1 minor unit");
    const std::string id = it.item_id;
    if (!items_.emplace(id, std::move(it)).second)
      fail(ErrorCode::MalformedInput, "duplicate catalog item " + id);
  }
}

Catalog Catalog::load(const std::filesystem::path& path) {
  if (std::filesystem::exists(path) && std::filesystem::file_size(path) == 0) return Catalog{};
  const Value v = canonical::read_file_relaxed(path);
  std::vector<CatalogItem> items;
  for (const auto& i : v.at("items").as_list())
    items.push_back({get_string(i, "item_id"), get_string(i, "title"), Money{get_int(i, "price")}});
  return Catalog(std::move(items));
}

void Catalog::store(const std::filesystem::path& path) const {
  List items;
  for (const auto& [_, i] : items_)
    items.push_back(Map{{"item_id", i.item_id}, {"title", i.title}, {"price", i.price.minor}});
  canonical::write_file(path, Map{{"v", kFormatVersion}, {"kind", "catalog"}, {"items", std::move(items)}});
}

std::vector<CatalogItem> Catalog::list() const {
  std::vector<CatalogItem> out;
  for (const auto& [_, i] : items_) out.push_back(i);
  return out;
}

const CatalogItem* Catalog::find(const std::string& item_id) const {
  auto it = items_.find(item_id);
  return it == items_.end() ? nullptr : &it->second;
}

Value Receipt::to_value() const {
  return Map{{"txn_id", txn_id},       {"item_id", item_id}, {"amount", amount.minor},
             {"ts", timestamp},        {"status", status},   {"receipt_token", receipt_token}};
}

MerchantService::MerchantService(MerchantConfig config, KeyRegistry registry, Catalog catalog,
                                 std::shared_ptr<ProviderTransport> transport, Clock clock)
    : config_(std::move(config)),
      registry_(std::move(registry)),
      catalog_(std::move(catalog)),
      clock_(std::move(clock)),
      transport_(std::move(transport)) {
  if (config_.merchant_id != registry_.own_id())
    fail(ErrorCode::ConfigInvalid, "merchant id does not match the signing identity");
  registry_.verify_key(config_.provider_id);  // provider key must be configured

  std::lock_guard lk(mu_);
  journal_ = std::make_unique<Journal>(config_.data_dir, "merchant", config_.sync);
  Journal::Recovered rec = journal_->recover();
  if (rec.snapshot) fail(ErrorCode::MalformedInput, "merchant ledger does not use snapshots");
  for (const auto& e : rec.entries) apply(e);
  counter_ = reserved_;
  if (salt_.empty()) {
    const std::string salt =
        config_.deterministic_seed
            ? crypto::sha256_hex("cardpay/merchant-salt|" + *config_.deterministic_seed)
            : crypto::to_hex(crypto::random_bytes(16));
    journal_and_apply(Map{{"op", "salt"}, {"salt", salt}});
  }
}

void MerchantService::log(const std::string& line) const {
  if (config_.log) config_.log(line);
  else std::clog << "[merchant " << config_.merchant_id << "] " << line << '\n';
}

void MerchantService::set_transport(std::shared_ptr<ProviderTransport> transport) {
  std::lock_guard lk(transport_mu_);
  transport_ = std::move(transport);
}

void MerchantService::journal_and_apply(const Value& entry) {
  journal_->append(entry);
  apply(entry);
}

void MerchantService::apply(const Value& entry) {
  const std::string& op = get_string(entry, "op");
  if (op == "salt") {
    salt_ = get_string(entry, "salt");
  } else if (op == "counter") {
    reserved_ = static_cast<std::uint64_t>(get_int(entry, "reserved"));
  } else if (op == "append") {
    TransactionRecord r = TransactionRecord::from_value(entry.at("record"));
    const std::size_t idx = entries_.size();
    by_txn_[r.txn_id] = idx;
    by_request_[r.request_id] = idx;
    entries_.push_back(std::move(r));
  } else if (op == "demand") {
    SettlementDemand d = SettlementDemand::from_value(entry.at("demand"));
    for (const auto& r : d.records) pending_.insert(r.txn_id);
    const Period p = d.period;
    outstanding_.insert_or_assign(p, std::move(d));
  } else if (op == "settle") {
    const Period period = Period::from_value(entry.at("period"));
    if (auto it = outstanding_.find(period); it != outstanding_.end()) {
      for (const auto& r : it->second.records) pending_.erase(r.txn_id);
      outstanding_.erase(it);
    }
    for (const auto& id : entry.at("txn_ids").as_list()) {
      auto it = by_txn_.find(id.as_string());
      if (it == by_txn_.end()) fail(ErrorCode::MalformedInput, "ledger settles unknown txn");
      TransactionRecord& r = entries_[it->second];
      r.state = next_state(r.state, TxnEvent::Settle);
    }
    payouts_ += Money{get_int(entry, "payout")};
  } else {
    fail(ErrorCode::MalformedInput, "unknown ledger op '" + op + "'");
  }
}

std::string MerchantService::next_request_id() {
  std::lock_guard lk(mu_);
  // Counters are reserved in blocks; after a restart numbering resumes past
  // the last reserved block, so no request id is ever reused.
  if (counter_ >= reserved_)
    journal_and_apply(Map{{"op", "counter"}, {"reserved", static_cast<std::int64_t>(counter_ + kCounterBlock)}});
  const std::uint64_t n = counter_++;
  return crypto::sha256_hex("cardpay/request/v1|" + config_.merchant_id + "|" + std::to_string(n) +
                            "|" + salt_)
      .substr(0, 32);
}

std::string MerchantService::next_nonce() {
  if (!config_.deterministic_seed) return random_nonce();
  std::lock_guard lk(mu_);
  return crypto::sha256_hex("cardpay/nonce|" + *config_.deterministic_seed + "|" +
                            std::to_string(nonce_counter_++))
      .substr(0, 32);
}

std::optional<Envelope> MerchantService::call(std::string_view type, Value body) {
  std::shared_ptr<ProviderTransport> transport;
  {
    std::lock_guard lk(transport_mu_);
    transport = transport_;
  }
  if (!transport) fail(ErrorCode::ProviderUnreachable, "no transport configured");
  for (int attempt = 0; attempt < std::max(1, config_.attempts); ++attempt) {
    const std::string nonce = next_nonce();
    const Envelope out = seal(type, body, registry_, nonce, clock_());
    const std::vector<std::string> replies = transport->exchange(out.encode());
    for (const auto& line : replies) {
      try {
        Envelope reply = Envelope::decode(line);
        if (reply.sender_id != config_.provider_id) continue;
        if (!reply.signature_valid(registry_)) {
          log("alarm: reply with an invalid provider envelope signature dropped");
          continue;
        }
        const Value* re = reply.body.find("in_reply_to");
        if (!re || !re->is_string() || re->as_string() != nonce) continue;  // stale or foreign
        return reply;
      } catch (const Error&) {
        continue;
      }
    }
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void rethrow_wire_error(const Envelope& reply) {
  const Value* e = reply.body.find("error");
  const std::string name = e && e->is_string() ? e->as_string() : "MalformedInput";
  fail(error_code_from_string(name), "provider replied " + name);
}

}  // namespace

Receipt MerchantService::checkout(const std::string& item_id, const std::string& card_number,
                                  const std::string& secret, const std::string& password,
                                  const std::string& provider_id) {
  const CatalogItem* item = catalog_.find(item_id);
  if (!item) fail(ErrorCode::UnknownItem, "no item '" + item_id + "'");
  if (provider_id != config_.provider_id) {
    log("decline: card provider " + provider_id + " is not served here");
    fail(ErrorCode::PaymentDeclined, "payment declined", "unknown_provider");
  }

  CreditRequest req;
  req.request_id = next_request_id();
  req.provider_id = provider_id;
  req.card_number = card_number;
  req.secret = secret;
  req.password = password;
  req.amount = item->price;
  req.merchant_id = config_.merchant_id;
  req.item_id = item_id;
  req.timestamp = clock_();

  std::optional<Envelope> reply = call(msg::kCreditRequest, req.to_value());
  if (!reply) fail(ErrorCode::ProviderUnreachable, "no answer to credit request");
  if (reply->type != msg::kAuthDecision) {
    log("decline: provider error on credit request " + req.request_id);
    fail(ErrorCode::PaymentDeclined, "payment declined", "invalid_request");
  }
  const AuthorizationDecision decision = AuthorizationDecision::from_value(reply->body);
  switch (decision.verdict) {
    case Verdict::Available: break;
    case Verdict::InsufficientFunds:
      log("decline: insufficient funds for " + req.request_id);
      fail(ErrorCode::PaymentDeclined, "payment declined", "insufficient_funds");
    case Verdict::AuthFailure:
      log("decline: authentication failure for " + req.request_id);
      fail(ErrorCode::PaymentDeclined, "payment declined", "auth_failure");
    case Verdict::InvalidRequest:
      log("decline: invalid request " + req.request_id);
      fail(ErrorCode::PaymentDeclined, "payment declined", "invalid_request");
  }

  TransactionRecord record;
  record.txn_id = derive_txn_id(config_.merchant_id, req.request_id);
  record.request_id = req.request_id;
  record.timestamp = req.timestamp;
  record.amount = item->price;
  record.merchant_id = config_.merchant_id;
  record.item_id = item_id;
  record.card_ref = card_ref(card_number);
  record.provider_id = provider_id;
  record.state = TxnState::Authorized;
  record.merchant_sig = sign_record(record, registry_);

  std::optional<Envelope> confirm_env =
      call(msg::kCapture, CaptureRequest{*decision.hold_id, record}.to_value());
  // Without a confirmed capture nothing is recorded; the hold lapses on its own
  // and any capture the provider did make surfaces at settlement.
  if (!confirm_env) fail(ErrorCode::ProviderUnreachable, "no answer to capture");
  if (confirm_env->type != msg::kCaptureConfirm) {
    const Value* e = confirm_env->body.find("error");
    log("decline: capture rejected (" + (e && e->is_string() ? e->as_string() : "?") + ") for " +
        req.request_id);
    fail(ErrorCode::PaymentDeclined, "payment declined", "capture_rejected");
  }

  const CaptureConfirm confirm = CaptureConfirm::from_value(confirm_env->body);
  const TransactionRecord& got = confirm.record;
  bool ok = got.state == TxnState::Captured && got.same_signed_fields(record) &&
            got.merchant_sig == record.merchant_sig && got.provider_sig.has_value();
  if (ok) {
    try {
      ok = verify_record(got, registry_) == RecordVerdict::Valid;
    } catch (const Error&) {
      ok = false;
    }
  }
  if (!ok) {
    log("alarm: provider countersignature rejected for " + record.txn_id);
    fail(ErrorCode::BadProviderSignature, "provider countersignature does not verify");
  }

  std::lock_guard lk(mu_);
  if (auto it = by_txn_.find(got.txn_id); it != by_txn_.end()) return make_receipt(entries_[it->second]);
  journal_and_apply(Map{{"op", "append"}, {"record", got.to_value()}});
  return make_receipt(got);
}

Receipt MerchantService::make_receipt(const TransactionRecord& r) const {
  return {r.txn_id, r.item_id, r.amount, r.timestamp, std::string(to_string(r.state)), receipt_token(r)};
}

SettlementDemand MerchantService::build_demand(const Period& period) {
  if (period.end > clock_()) fail(ErrorCode::UnknownPeriod, "period has not ended yet");
  std::lock_guard lk(mu_);
  if (auto it = outstanding_.find(period); it != outstanding_.end()) return it->second;
  SettlementDemand d;
  d.merchant_id = config_.merchant_id;
  d.period = period;
  for (const auto& r : entries_)
    if (r.state == TxnState::Captured && period.contains(r.timestamp) && !pending_.contains(r.txn_id))
      d.records.push_back(r);
  d.sign(registry_);
  // Journaled so a report that arrives after a restart can still be applied.
  journal_and_apply(Map{{"op", "demand"}, {"demand", d.to_value()}});
  return d;
}

SettlementSummary MerchantService::apply_settlement(const SettlementReport& report) {
  bool sig_ok = false;
  try {
    sig_ok = report.provider_id == config_.provider_id && report.signature_valid(registry_);
  } catch (const Error&) {
  }
  if (!sig_ok) fail(ErrorCode::BadReportSignature, "settlement report signature does not verify");
  if (report.merchant_id != config_.merchant_id)
    fail(ErrorCode::UnknownPeriod, "report addressed to another merchant");

  std::lock_guard lk(mu_);
  auto it = outstanding_.find(report.period);
  if (it == outstanding_.end()) fail(ErrorCode::UnknownPeriod, "no outstanding demand for " + report.period.key());

  std::set<std::string> demanded;
  for (const auto& r : it->second.records) demanded.insert(r.txn_id);
  List settled;
  for (const auto& id : report.matched)
    if (demanded.contains(id) && by_txn_.contains(id) && entries_[by_txn_[id]].state == TxnState::Captured)
      settled.push_back(id);

  SettlementSummary summary;
  summary.period = report.period;
  summary.settled = settled.size();
  summary.matched_total = report.matched_total;
  summary.fee = report.fee;
  summary.payout = report.payout;
  summary.discrepancies = report.discrepancies;

  journal_and_apply(Map{{"op", "settle"},
                        {"period", report.period.to_value()},
                        {"txn_ids", std::move(settled)},
                        {"payout", report.payout.minor},
                        {"fee", report.fee.minor}});
  for (const auto& d : summary.discrepancies)
    log("settlement discrepancy " + std::string(to_string(d.kind)) + " for " + d.txn_id + ": " + d.detail);
  return summary;
}

SettlementSummary MerchantService::settle(const Period& period) {
  const SettlementDemand demand = build_demand(period);
  std::optional<Envelope> reply = call(msg::kSettleDemand, Map{{"demand", demand.to_value()}});
  if (!reply) fail(ErrorCode::ProviderUnreachable, "no answer to settlement demand");
  if (reply->type != msg::kSettleReport) rethrow_wire_error(*reply);
  return apply_settlement(SettlementReport::from_value(reply->body.at("report")));
}

void MerchantService::activate_card(const std::string& card_number, const std::string& secret,
                                    const std::string& new_password) {
  std::optional<Envelope> reply =
      call(msg::kActivate, ActivateRequest{card_number, secret, new_password}.to_value());
  if (!reply) fail(ErrorCode::ProviderUnreachable, "no answer to activation");
  if (reply->type != msg::kActivateReply) rethrow_wire_error(*reply);
}

Money MerchantService::balance(const std::string& card_number, const std::string& secret,
                               const std::string& password) {
  std::optional<Envelope> reply = call(msg::kBalance, BalanceRequest{card_number, secret, password}.to_value());
  if (!reply) fail(ErrorCode::ProviderUnreachable, "no answer to balance inquiry");
  if (reply->type != msg::kBalanceReply) rethrow_wire_error(*reply);
  return Money{get_int(reply->body, "balance")};
}

std::optional<Receipt> MerchantService::receipt(const std::string& txn_id) const {
  std::lock_guard lk(mu_);
  auto it = by_txn_.find(txn_id);
  if (it == by_txn_.end()) return std::nullopt;
  return make_receipt(entries_[it->second]);
}

std::vector<TransactionRecord> MerchantService::ledger() const {
  std::lock_guard lk(mu_);
  return entries_;
}

std::string MerchantService::ledger_bytes() const {
  List list;
  for (const auto& r : ledger()) list.push_back(r.to_value());
  return canonical::encode(Map{{"v", kFormatVersion},
                               {"kind", "ledger"},
                               {"merchant_id", config_.merchant_id},
                               {"records", std::move(list)}});
}

void MerchantService::export_ledger(const std::filesystem::path& path) const {
  canonical::write_file(path, canonical::decode(ledger_bytes()));
}

Money MerchantService::expected_payouts() const {
  std::lock_guard lk(mu_);
  return payouts_;
}

}  // namespace cardpay
