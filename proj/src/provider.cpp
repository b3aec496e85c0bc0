#include "cardpay/provider.hpp"

#include <algorithm>

namespace cardpay {

using canonical::get_int;
using canonical::get_string;
using canonical::List;
using canonical::Map;
using canonical::Value;

Value Hold::to_value() const {
  return Map{
      {"hold_id", hold_id},     {"card_number", card_number}, {"amount", amount.minor},
      {"merchant_id", merchant_id}, {"request_id", request_id}, {"expiry", expiry},
  };
}

Hold Hold::from_value(const Value& v) {
  return {get_string(v, "hold_id"),     get_string(v, "card_number"), Money{get_int(v, "amount")},
          get_string(v, "merchant_id"), get_string(v, "request_id"),  get_int(v, "expiry")};
}

std::string derive_hold_id(const std::string& merchant_id, const std::string& request_id) {
  return crypto::sha256_hex("cardpay/hold/v1|" + merchant_id + "|" + request_id).substr(0, 32);
}

namespace {

std::string request_key(const std::string& merchant_id, const std::string& request_id) {
  return merchant_id + "|" + request_id;
}

std::string request_fingerprint(const CreditRequest& r) {
  return crypto::sha256_hex("cardpay/request/v1|" + r.card_number + "|" +
                            std::to_string(r.amount.minor) + "|" + r.item_id + "|" + r.provider_id);
}

std::string settlement_key(const std::string& merchant_id, const Period& p) {
  return merchant_id + "|" + p.key();
}

AuthorizationDecision plain_decision(const std::string& request_id, Verdict verdict) {
  AuthorizationDecision d;
  d.request_id = request_id;
  d.verdict = verdict;
  return d;
}

}  // namespace

ProviderService::ProviderService(ProviderConfig config, KeyRegistry registry, Clock clock)
    : config_(std::move(config)), registry_(std::move(registry)), clock_(std::move(clock)) {
  if (config_.provider_id != registry_.own_id())
    fail(ErrorCode::ConfigInvalid, "provider id does not match the signing identity");
  if (config_.fee_rate_bp < 0 || config_.fee_rate_bp > kBasisPointsDenominator)
    fail(ErrorCode::RateOutOfRange, "fee rate must be within 0..10000 bp");
  journal_ = std::make_unique<Journal>(config_.data_dir, "provider", config_.sync);

  std::unique_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  Journal::Recovered rec = journal_->recover();
  if (rec.snapshot) restore_state(*rec.snapshot);
  for (const auto& e : rec.entries) apply(e);
}

ProviderService::~ProviderService() = default;

ProviderService::CardSlot* ProviderService::slot(const std::string& card_number) const {
  auto it = cards_.find(card_number);
  return it == cards_.end() ? nullptr : it->second.get();
}

void ProviderService::journal_and_apply(const Value& entry) {
  journal_->append(entry);
  apply(entry);
  if (config_.snapshot_every > 0 && journal_->entries_since_snapshot() >= config_.snapshot_every)
    journal_->write_snapshot(state_value_locked());
}

void ProviderService::check_card_invariant(const Card& card) {
  auto it = held_by_card_.find(card.card_number);
  const Money held = it == held_by_card_.end() ? Money{} : it->second;
  if (card.balance.minor < 0 || card.balance - held < Money{} || card.balance > card.denomination)
    violations_.fetch_add(1);
}

void ProviderService::apply(const Value& entry) {
  const std::string& op = get_string(entry, "op");
  if (op == "load") {
    Card c = Card::from_value(entry.at("card"));
    auto s = std::make_unique<CardSlot>();
    s->card = std::move(c);
    const std::string num = s->card.card_number;
    cards_.emplace(num, std::move(s));
  } else if (op == "activate") {
    CardSlot* s = slot(get_string(entry, "card_number"));
    if (!s) fail(ErrorCode::MalformedInput, "journal references unknown card");
    s->card.password_hash = get_string(entry, "password_hash");
    s->card.state = CardState::Activated;
  } else if (op == "hold") {
    Hold h = Hold::from_value(entry.at("hold"));
    held_by_card_[h.card_number] += h.amount;
    decisions_[get_string(entry, "key")] = {get_string(entry, "fingerprint"),
                                            AuthorizationDecision::from_value(entry.at("decision"))};
    const std::string id = h.hold_id;
    holds_.emplace(id, std::move(h));
    if (CardSlot* s = slot(holds_.at(id).card_number)) check_card_invariant(s->card);
  } else if (op == "decision") {
    decisions_[get_string(entry, "key")] = {get_string(entry, "fingerprint"),
                                            AuthorizationDecision::from_value(entry.at("decision"))};
  } else if (op == "release") {
    const std::string& id = get_string(entry, "hold_id");
    auto it = holds_.find(id);
    if (it == holds_.end()) fail(ErrorCode::MalformedInput, "journal releases unknown hold");
    held_by_card_[it->second.card_number] -= it->second.amount;
    holds_.erase(it);
    released_holds_.insert(id);
  } else if (op == "capture") {
    const std::string& id = get_string(entry, "hold_id");
    auto it = holds_.find(id);
    if (it == holds_.end()) fail(ErrorCode::MalformedInput, "journal captures unknown hold");
    CardSlot* s = slot(it->second.card_number);
    if (!s) fail(ErrorCode::MalformedInput, "journal references unknown card");
    TransactionRecord rec = TransactionRecord::from_value(entry.at("record"));
    s->card.balance -= it->second.amount;
    if (s->card.balance.minor == 0) s->card.state = CardState::Exhausted;
    held_by_card_[it->second.card_number] -= it->second.amount;
    holds_.erase(it);
    captured_holds_[id] = rec.txn_id;
    replicas_.restore(std::move(rec));
    check_card_invariant(s->card);
  } else if (op == "settle") {
    SettlementReport report = SettlementReport::from_value(entry.at("report"));
    for (const auto& id : report.matched) replicas_.mark_settled(id);
    settlements_[get_string(entry, "key")] = std::move(report);
  } else {
    fail(ErrorCode::MalformedInput, "unknown journal op '" + op + "'");
  }
}

LoadReport ProviderService::load_cards(const CardBatch& batch) {
  if (batch.provider_id != config_.provider_id)
    fail(ErrorCode::MalformedBatchFile, "batch was issued by provider " + batch.provider_id);
  if (auto problems = verify_batch(batch); !problems.empty())
    fail(ErrorCode::MalformedBatchFile, problems.front());

  LoadReport report;
  std::unique_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  for (const auto& issued : batch.cards) {
    if (cards_.contains(issued.card_number)) {
      report.duplicates.push_back(issued.card_number);
      continue;
    }
    Card c;
    c.card_number = issued.card_number;
    c.provider_id = batch.provider_id;
    c.secret_digest = secret_digest(issued.card_number, issued.secret);
    c.balance = batch.denomination;
    c.denomination = batch.denomination;
    c.state = CardState::Issued;
    journal_and_apply(Map{{"op", "load"}, {"card", c.to_value()}});
    ++report.loaded;
  }
  return report;
}

void ProviderService::activate_card(const std::string& card_number, const std::string& secret,
                                    const std::string& new_password) {
  std::shared_lock cards_lock(cards_mu_);
  CardSlot* s = slot(card_number);
  if (!s) fail(ErrorCode::UnknownCard, "no such card");
  Card snapshot;
  {
    std::lock_guard lk(s->mu);
    snapshot = s->card;
  }
  if (!crypto::constant_time_equal(snapshot.secret_digest, secret_digest(card_number, secret)))
    fail(ErrorCode::SecretMismatch, "secret does not match");
  if (snapshot.state != CardState::Issued) fail(ErrorCode::AlreadyActivated, "card already activated");
  if (new_password.size() < 4) fail(ErrorCode::WeakPassword, "password needs at least 4 characters");

  const std::string hash = crypto::hash_password(new_password, config_.password_cost);
  std::lock_guard lk(s->mu);
  std::lock_guard state_lock(state_mu_);
  if (s->card.state != CardState::Issued) fail(ErrorCode::AlreadyActivated, "card already activated");
  journal_and_apply(Map{{"op", "activate"}, {"card_number", card_number}, {"password_hash", hash}});
}

bool ProviderService::credentials_ok(const Card& c, const std::string& secret,
                                     const std::string& password) const {
  if (!crypto::constant_time_equal(c.secret_digest, secret_digest(c.card_number, secret))) return false;
  if (!c.password_hash) return false;
  return crypto::verify_password(*c.password_hash, password);
}

AuthorizationDecision ProviderService::authorize(const CreditRequest& request) {
  const std::string key = request_key(request.merchant_id, request.request_id);
  const std::string fingerprint = request_fingerprint(request);
  {
    std::lock_guard state_lock(state_mu_);
    if (auto it = decisions_.find(key); it != decisions_.end()) {
      if (it->second.fingerprint == fingerprint) return it->second.decision;
      return plain_decision(request.request_id, Verdict::InvalidRequest);
    }
  }

  const std::int64_t now = clock_();
  if (request.request_id.empty() || request.amount.minor <= 0 ||
      request.provider_id != config_.provider_id || !registry_.knows(request.merchant_id) ||
      request.merchant_id == config_.provider_id || request.item_id.empty() ||
      std::llabs(now - request.timestamp) > config_.acceptance_window)
    return plain_decision(request.request_id, Verdict::InvalidRequest);

  std::shared_lock cards_lock(cards_mu_);
  CardSlot* s = slot(request.card_number);
  Verdict verdict = Verdict::AuthFailure;
  if (s) {
    Card snapshot;
    {
      std::lock_guard lk(s->mu);
      snapshot = s->card;
    }
    const bool usable = snapshot.state == CardState::Activated || snapshot.state == CardState::Exhausted;
    if (usable && credentials_ok(snapshot, request.secret, request.password))
      verdict = Verdict::Available;
  }

  std::unique_lock<std::mutex> card_lock;
  if (s && verdict == Verdict::Available) card_lock = std::unique_lock(s->mu);
  std::lock_guard state_lock(state_mu_);
  if (auto it = decisions_.find(key); it != decisions_.end()) {
    if (it->second.fingerprint == fingerprint) return it->second.decision;
    return plain_decision(request.request_id, Verdict::InvalidRequest);
  }
  // Declines are journaled too, so a replayed request gets the same answer
  // after a restart instead of being re-evaluated against a newer balance.
  auto decline = [&](Verdict v) {
    AuthorizationDecision d = plain_decision(request.request_id, v);
    journal_and_apply(Map{{"op", "decision"}, {"key", key}, {"fingerprint", fingerprint}, {"decision", d.to_value()}});
    return d;
  };
  if (verdict != Verdict::Available) return decline(verdict);

  const Money held = held_by_card_.contains(request.card_number) ? held_by_card_[request.card_number] : Money{};
  if (s->card.balance - held < request.amount) return decline(Verdict::InsufficientFunds);

  Hold h;
  h.hold_id = derive_hold_id(request.merchant_id, request.request_id);
  h.card_number = request.card_number;
  h.amount = request.amount;
  h.merchant_id = request.merchant_id;
  h.request_id = request.request_id;
  h.expiry = now + config_.hold_ttl;

  AuthorizationDecision d = plain_decision(request.request_id, Verdict::Available);
  d.hold_id = h.hold_id;
  d.hold_expiry = h.expiry;
  journal_and_apply(Map{{"op", "hold"},
                        {"hold", h.to_value()},
                        {"key", key},
                        {"fingerprint", fingerprint},
                        {"decision", d.to_value()}});
  return d;
}

CaptureConfirm ProviderService::capture(const std::string& hold_id,
                                        const TransactionRecord& merchant_signed) {
  // Signature checks are the expensive part; do them before taking locks.
  if (!merchant_signed.merchant_sig ||
      !registry_.knows(merchant_signed.merchant_id) ||
      !registry_.verify_key(merchant_signed.merchant_id)
           .verify(merchant_signed.signed_payload(), *merchant_signed.merchant_sig))
    fail(ErrorCode::BadMerchantSignature, "merchant signature does not verify");

  std::shared_lock cards_lock(cards_mu_);
  std::string card_number;
  {
    std::lock_guard state_lock(state_mu_);
    if (auto it = captured_holds_.find(hold_id); it != captured_holds_.end()) {
      const TransactionRecord* replica = replicas_.find(it->second);
      if (replica && replica->same_signed_fields(merchant_signed) &&
          replica->merchant_sig == merchant_signed.merchant_sig) {
        TransactionRecord r = *replica;
        r.state = TxnState::Captured;
        return {hold_id, r};
      }
      fail(ErrorCode::RecordMismatch, "hold was captured with a different record");
    }
    auto it = holds_.find(hold_id);
    if (it == holds_.end()) {
      if (released_holds_.contains(hold_id)) fail(ErrorCode::HoldExpired, "hold already released");
      fail(ErrorCode::UnknownHold, "no such hold");
    }
    card_number = it->second.card_number;
  }

  CardSlot* s = slot(card_number);
  std::lock_guard card_lock(s->mu);
  std::lock_guard state_lock(state_mu_);
  auto it = holds_.find(hold_id);
  if (it == holds_.end()) {
    // Lost a race with another capture or an expiry of the same hold.
    if (auto c = captured_holds_.find(hold_id); c != captured_holds_.end()) {
      const TransactionRecord* replica = replicas_.find(c->second);
      if (replica && replica->same_signed_fields(merchant_signed) &&
          replica->merchant_sig == merchant_signed.merchant_sig) {
        TransactionRecord r = *replica;
        r.state = TxnState::Captured;
        return {hold_id, r};
      }
      fail(ErrorCode::RecordMismatch, "hold was captured with a different record");
    }
    fail(ErrorCode::HoldExpired, "hold already released");
  }
  const Hold& h = it->second;
  if (merchant_signed.amount != h.amount || merchant_signed.merchant_id != h.merchant_id ||
      merchant_signed.request_id != h.request_id || merchant_signed.provider_id != config_.provider_id ||
      merchant_signed.card_ref != card_ref(h.card_number) || merchant_signed.txn_id.empty())
    fail(ErrorCode::RecordMismatch, "record does not match the hold");
  if (replicas_.find(merchant_signed.txn_id))
    fail(ErrorCode::RecordMismatch, "txn id already used");

  if (clock_() > h.expiry) {
    journal_and_apply(Map{{"op", "release"}, {"hold_id", hold_id}});
    fail(ErrorCode::HoldExpired, "hold expired before capture");
  }

  TransactionRecord rec = merchant_signed;
  rec.state = next_state(TxnState::Authorized, TxnEvent::Capture);
  rec.provider_sig = sign_record(rec, registry_);
  if (verify_record(rec, registry_) != RecordVerdict::Valid)
    fail(ErrorCode::BadMerchantSignature, "countersigned record does not verify");
  journal_and_apply(Map{{"op", "capture"}, {"hold_id", hold_id}, {"record", rec.to_value()}});
  return {hold_id, rec};
}

std::size_t ProviderService::expire_holds(std::int64_t now) {
  std::shared_lock cards_lock(cards_mu_);
  std::vector<std::pair<std::string, std::string>> due;  // hold, card
  {
    std::lock_guard state_lock(state_mu_);
    for (const auto& [id, h] : holds_)
      if (h.expiry < now) due.emplace_back(id, h.card_number);
  }
  std::size_t released = 0;
  for (const auto& [id, card_number] : due) {
    CardSlot* s = slot(card_number);
    std::unique_lock<std::mutex> card_lock;
    if (s) card_lock = std::unique_lock(s->mu);
    std::lock_guard state_lock(state_mu_);
    auto it = holds_.find(id);
    if (it == holds_.end() || it->second.expiry >= now) continue;
    journal_and_apply(Map{{"op", "release"}, {"hold_id", id}});
    ++released;
  }
  return released;
}

SettlementReport ProviderService::handle_settlement(const SettlementDemand& demand) {
  if (demand.merchant_id == config_.provider_id || !registry_.knows(demand.merchant_id))
    fail(ErrorCode::UnknownMerchant, "demand from unregistered party '" + demand.merchant_id + "'");
  if (!demand.signature_valid(registry_)) fail(ErrorCode::MalformedDemand, "demand signature does not verify");

  std::shared_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  const std::string key = settlement_key(demand.merchant_id, demand.period);
  if (auto it = settlements_.find(key); it != settlements_.end()) return it->second;

  ReconcileResult result = reconcile(demand, replicas_, registry_);

  std::set<std::string> demanded;
  for (const auto& r : demand.records) demanded.insert(r.txn_id);
  ReportContext ctx{demand.merchant_id, demand.period, {}};
  for (const auto& [id, rec] : replicas_.records())
    if (rec.merchant_id == demand.merchant_id && rec.state == TxnState::Captured &&
        demand.period.contains(rec.timestamp) && !demanded.contains(id))
      ctx.undemanded.push_back({id, rec.amount});

  SettlementReport report =
      emit_report(ctx, result.matched, std::move(result.discrepancies), config_.fee_rate_bp, registry_);
  journal_and_apply(Map{{"op", "settle"}, {"key", key}, {"report", report.to_value()}});
  return report;
}

Money ProviderService::balance_inquiry(const std::string& card_number, const std::string& secret,
                                       const std::string& password) {
  std::shared_lock cards_lock(cards_mu_);
  CardSlot* s = slot(card_number);
  if (!s) fail(ErrorCode::AuthFailure, "authentication failed");
  Card snapshot;
  {
    std::lock_guard lk(s->mu);
    snapshot = s->card;
  }
  if (snapshot.state == CardState::Issued || snapshot.state == CardState::Blocked ||
      !credentials_ok(snapshot, secret, password))
    fail(ErrorCode::AuthFailure, "authentication failed");
  std::lock_guard lk(s->mu);
  std::lock_guard state_lock(state_mu_);
  auto it = held_by_card_.find(card_number);
  return s->card.balance - (it == held_by_card_.end() ? Money{} : it->second);
}

std::optional<SettlementReport> ProviderService::settled_report(const std::string& merchant_id,
                                                                const Period& period) const {
  std::lock_guard state_lock(state_mu_);
  auto it = settlements_.find(settlement_key(merchant_id, period));
  if (it == settlements_.end()) return std::nullopt;
  return it->second;
}

std::optional<Card> ProviderService::find_card(const std::string& card_number) const {
  std::shared_lock cards_lock(cards_mu_);
  CardSlot* s = slot(card_number);
  if (!s) return std::nullopt;
  std::lock_guard lk(s->mu);
  return s->card;
}

std::vector<Card> ProviderService::cards() const {
  std::shared_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  std::vector<Card> out;
  for (const auto& [_, s] : cards_) out.push_back(s->card);
  return out;
}

std::vector<Hold> ProviderService::active_holds() const {
  std::lock_guard state_lock(state_mu_);
  std::vector<Hold> out;
  for (const auto& [_, h] : holds_) out.push_back(h);
  return out;
}

Money ProviderService::held_amount(const std::string& card_number) const {
  std::lock_guard state_lock(state_mu_);
  auto it = held_by_card_.find(card_number);
  return it == held_by_card_.end() ? Money{} : it->second;
}

std::vector<TransactionRecord> ProviderService::replicas() const {
  std::lock_guard state_lock(state_mu_);
  std::vector<TransactionRecord> out;
  for (const auto& [_, r] : replicas_.records()) out.push_back(r);
  return out;
}

Value ProviderService::state_value_locked() const {
  List cards, holds, released, replicas;
  for (const auto& [_, s] : cards_) cards.push_back(s->card.to_value());
  for (const auto& [_, h] : holds_) holds.push_back(h.to_value());
  for (const auto& id : released_holds_) released.push_back(id);
  for (const auto& [_, r] : replicas_.records()) replicas.push_back(r.to_value());
  Map captured, decisions, settlements;
  for (const auto& [h, t] : captured_holds_) captured.emplace(h, t);
  for (const auto& [k, d] : decisions_)
    if (d.decision.verdict == Verdict::Available)
      decisions.emplace(k, Map{{"fingerprint", d.fingerprint}, {"decision", d.decision.to_value()}});
  for (const auto& [k, r] : settlements_) settlements.emplace(k, r.to_value());
  return Map{
      {"cards", std::move(cards)},         {"holds", std::move(holds)},
      {"released", std::move(released)},   {"captured", std::move(captured)},
      {"decisions", std::move(decisions)}, {"replicas", std::move(replicas)},
      {"settlements", std::move(settlements)},
  };
}

void ProviderService::restore_state(const Value& state) {
  for (const auto& c : state.at("cards").as_list()) {
    auto s = std::make_unique<CardSlot>();
    s->card = Card::from_value(c);
    const std::string num = s->card.card_number;
    cards_.emplace(num, std::move(s));
  }
  for (const auto& hv : state.at("holds").as_list()) {
    Hold h = Hold::from_value(hv);
    held_by_card_[h.card_number] += h.amount;
    const std::string id = h.hold_id;
    holds_.emplace(id, std::move(h));
  }
  for (const auto& id : state.at("released").as_list()) released_holds_.insert(id.as_string());
  for (const auto& [h, t] : state.at("captured").as_map()) captured_holds_[h] = t.as_string();
  for (const auto& [k, d] : state.at("decisions").as_map())
    decisions_[k] = {get_string(d, "fingerprint"), AuthorizationDecision::from_value(d.at("decision"))};
  for (const auto& r : state.at("replicas").as_list()) replicas_.restore(TransactionRecord::from_value(r));
  for (const auto& [k, r] : state.at("settlements").as_map()) settlements_[k] = SettlementReport::from_value(r);
}

Value ProviderService::state_value() const {
  std::shared_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  return state_value_locked();
}

std::string ProviderService::state_digest() const {
  return crypto::sha256_hex(canonical::encode(state_value()));
}

void ProviderService::snapshot() {
  std::unique_lock cards_lock(cards_mu_);
  std::lock_guard state_lock(state_mu_);
  journal_->write_snapshot(state_value_locked());
}

Value ProviderService::dispatch(const Envelope& env, std::string& reply_type) {
  const Value& body = env.body;
  if (env.type == msg::kCreditRequest) {
    reply_type = msg::kAuthDecision;
    CreditRequest req = CreditRequest::from_value(body);
    if (req.merchant_id != env.sender_id)
      return plain_decision(req.request_id, Verdict::InvalidRequest).to_value();
    return authorize(req).to_value();
  }
  if (env.type == msg::kCapture) {
    reply_type = msg::kCaptureConfirm;
    CaptureRequest req = CaptureRequest::from_value(body);
    if (req.record.merchant_id != env.sender_id)
      fail(ErrorCode::RecordMismatch, "record names a different merchant");
    return capture(req.hold_id, req.record).to_value();
  }
  if (env.type == msg::kSettleDemand) {
    reply_type = msg::kSettleReport;
    SettlementDemand demand = SettlementDemand::from_value(body.at("demand"));
    if (demand.merchant_id != env.sender_id)
      fail(ErrorCode::UnknownMerchant, "demand names a different merchant");
    return Map{{"report", handle_settlement(demand).to_value()}};
  }
  if (env.type == msg::kActivate) {
    reply_type = msg::kActivateReply;
    ActivateRequest req = ActivateRequest::from_value(body);
    try {
      activate_card(req.card_number, req.secret, req.new_password);
    } catch (const Error& e) {
      // Do not let the wire distinguish unknown cards from wrong secrets.
      if (e.code() == ErrorCode::UnknownCard || e.code() == ErrorCode::SecretMismatch)
        fail(ErrorCode::AuthFailure, "authentication failed");
      throw;
    }
    return Map{{"status", std::string(to_string(CardState::Activated))}};
  }
  if (env.type == msg::kBalance) {
    reply_type = msg::kBalanceReply;
    BalanceRequest req = BalanceRequest::from_value(body);
    return Map{{"balance", balance_inquiry(req.card_number, req.secret, req.password).minor}};
  }
  fail(ErrorCode::MalformedInput, "unknown message type '" + env.type + "'");
}

std::string ProviderService::handle_line(std::string_view line, const std::string* authenticated_peer) {
  const std::string reply_nonce =
      crypto::sha256_hex("cardpay/reply/v1|" + std::string(line)).substr(0, 32);
  std::string in_reply_to;
  std::int64_t reply_ts = clock_();
  std::string reply_type = std::string(msg::kError);
  Value body;
  try {
    Envelope env = Envelope::decode(line);
    in_reply_to = env.nonce;
    reply_ts = env.ts;
    if (env.sender_id == config_.provider_id || !registry_.knows(env.sender_id))
      fail(ErrorCode::UnknownParty, "unregistered sender");
    if (!env.signature_valid(registry_)) fail(ErrorCode::MalformedInput, "bad envelope signature");
    if (authenticated_peer && *authenticated_peer != env.sender_id)
      fail(ErrorCode::UnknownParty, "sender does not match the authenticated peer");
    if (std::llabs(clock_() - env.ts) > config_.acceptance_window)
      fail(ErrorCode::MalformedInput, "stale envelope");
    body = dispatch(env, reply_type);
  } catch (const Error& e) {
    reply_type = std::string(msg::kError);
    body = Map{{"error", std::string(to_string(e.code()))}};
  } catch (const std::exception&) {
    reply_type = std::string(msg::kError);
    body = Map{{"error", std::string(to_string(ErrorCode::MalformedInput))}};
  }
  body.as_map().insert_or_assign("in_reply_to", in_reply_to);
  return seal(reply_type, std::move(body), registry_, reply_nonce, reply_ts).encode();
}

}  // namespace cardpay
