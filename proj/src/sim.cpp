#include "cardpay/sim.hpp"

#include <stdlib.h>

#include <deque>
#include <memory>
#include <random>
#include <set>

#include "cardpay/card.hpp"
#include "cardpay/clock.hpp"
#include "cardpay/envelope.hpp"
#include "cardpay/error.hpp"
#include "cardpay/issuance.hpp"
#include "cardpay/keys.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/messages.hpp"
#include "cardpay/provider.hpp"

namespace cardpay {

using canonical::List;
using canonical::Map;
using canonical::Value;

std::vector<std::string> LoopbackTransport::exchange(const std::string& line) {
  std::string reply = provider_.handle_line(line);
  if (tap) tap(line, reply);
  return {std::move(reply)};
}

TempDir::TempDir(const std::string& prefix) {
  std::string templ = (std::filesystem::temp_directory_path() / (prefix + "-XXXXXX")).string();
  if (!::mkdtemp(templ.data())) fail(ErrorCode::Io, "cannot create a temporary directory");
  path_ = templ;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

// ---------------------------------------------------------------------------
// Config

namespace {

constexpr std::int64_t kSimEpoch = 1700000000;

const std::set<std::string, std::less<>> kConfigKeys = {
    "seed",         "num_cards",   "denominations", "num_customers", "num_items",    "num_purchases",
    "price_min",    "price_max",   "drop_pct",      "duplicate_pct", "reorder_pct",  "crash_points",
    "hold_ttl",     "fee_rate_bp", "periods",       "tick_seconds"};

std::int64_t int_field(const Value& v, std::string_view key, std::int64_t fallback) {
  const Value* f = v.find(key);
  if (!f) return fallback;
  if (!f->is_int()) fail(ErrorCode::ConfigInvalid, "sim config: '" + std::string(key) + "' must be an integer");
  return f->as_int();
}

std::vector<std::int64_t> int_list(const Value& v, std::string_view key, std::vector<std::int64_t> fallback) {
  const Value* f = v.find(key);
  if (!f) return fallback;
  if (!f->is_list()) fail(ErrorCode::ConfigInvalid, "sim config: '" + std::string(key) + "' must be a list");
  std::vector<std::int64_t> out;
  for (const Value& e : f->as_list()) {
    if (!e.is_int()) fail(ErrorCode::ConfigInvalid, "sim config: '" + std::string(key) + "' entries must be integers");
    out.push_back(e.as_int());
  }
  return out;
}

std::size_t count_field(const Value& v, std::string_view key, std::size_t fallback) {
  const std::int64_t n = int_field(v, key, static_cast<std::int64_t>(fallback));
  if (n < 0) fail(ErrorCode::ConfigInvalid, "sim config: '" + std::string(key) + "' must not be negative");
  return static_cast<std::size_t>(n);
}

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ConfigInvalid, "sim config: " + what);
}

}  // namespace

Value SimConfig::to_value() const {
  List denoms(denominations.begin(), denominations.end());
  List crashes;
  for (auto c : crash_points) crashes.push_back(c);
  return Map{{"seed", seed},
             {"num_cards", num_cards},
             {"denominations", std::move(denoms)},
             {"num_customers", num_customers},
             {"num_items", num_items},
             {"num_purchases", num_purchases},
             {"price_min", price_min},
             {"price_max", price_max},
             {"drop_pct", drop_pct},
             {"duplicate_pct", duplicate_pct},
             {"reorder_pct", reorder_pct},
             {"crash_points", std::move(crashes)},
             {"hold_ttl", hold_ttl},
             {"fee_rate_bp", fee_rate_bp},
             {"periods", periods},
             {"tick_seconds", tick_seconds}};
}

SimConfig SimConfig::from_value(const Value& v) {
  if (!v.is_map()) fail(ErrorCode::ConfigInvalid, "sim config must be a map");
  for (const auto& [k, _] : v.as_map())
    if (!kConfigKeys.contains(k)) fail(ErrorCode::ConfigInvalid, "sim config: unknown field '" + k + "'");
  SimConfig c;
  const std::int64_t seed = int_field(v, "seed", static_cast<std::int64_t>(c.seed));
  require(seed >= 0, "seed must not be negative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.num_cards = count_field(v, "num_cards", c.num_cards);
  c.denominations = int_list(v, "denominations", c.denominations);
  c.num_customers = count_field(v, "num_customers", c.num_customers);
  c.num_items = count_field(v, "num_items", c.num_items);
  c.num_purchases = count_field(v, "num_purchases", c.num_purchases);
  c.price_min = int_field(v, "price_min", c.price_min);
  c.price_max = int_field(v, "price_max", c.price_max);
  auto pct = [&](std::string_view key, int fallback) {
    const std::int64_t p = int_field(v, key, fallback);
    require(p >= 0 && p <= 100, std::string(key) + " must be within [0, 100]");
    return static_cast<int>(p);
  };
  c.drop_pct = pct("drop_pct", c.drop_pct);
  c.duplicate_pct = pct("duplicate_pct", c.duplicate_pct);
  c.reorder_pct = pct("reorder_pct", c.reorder_pct);
  c.crash_points.clear();
  for (auto p : int_list(v, "crash_points", {})) {
    require(p >= 1, "crash_points are 1-based capture ordinals");
    c.crash_points.push_back(static_cast<std::uint64_t>(p));
  }
  c.hold_ttl = int_field(v, "hold_ttl", c.hold_ttl);
  c.fee_rate_bp = int_field(v, "fee_rate_bp", c.fee_rate_bp);
  c.periods = count_field(v, "periods", c.periods);
  c.tick_seconds = int_field(v, "tick_seconds", c.tick_seconds);
  c.validate();
  return c;
}

void SimConfig::validate() const {
  require(num_cards >= 1, "num_cards must be at least 1");
  require(!denominations.empty(), "denominations must not be empty");
  for (auto d : denominations)
    require(d >= kMinDenomination.minor && d <= kMaxDenomination.minor, "denomination out of range");
  require(num_customers >= 1 && num_customers <= num_cards, "num_customers must be within [1, num_cards]");
  require(num_items >= 1, "num_items must be at least 1");
  require(price_min >= 1 && price_min <= price_max, "price range must satisfy 1 <= price_min <= price_max");
  for (int p : {drop_pct, duplicate_pct, reorder_pct}) require(p >= 0 && p <= 100, "rates must be within [0, 100]");
  require(drop_pct + duplicate_pct + reorder_pct <= 100, "drop + duplicate + reorder must not exceed 100");
  require(hold_ttl >= 1, "hold_ttl must be positive");
  require(fee_rate_bp >= 0 && fee_rate_bp <= 10000, "fee_rate_bp must be within [0, 10000]");
  require(periods >= 1 && periods <= std::max<std::size_t>(num_purchases, 1), "periods must be within [1, num_purchases]");
  require(tick_seconds >= 1 && tick_seconds <= 3600, "tick_seconds must be within [1, 3600]");
}

ConservationResult check_conservation(const FinalState& s) {
  const Money accounted = s.remaining + s.held + s.payouts + s.fees + s.undemanded;
  const std::int64_t residual = (s.issued - accounted).minor;
  return {residual == 0, residual};
}

bool SimReport::invariants_hold() const {
  return conservation.ok && totals.held.minor == 0 && double_spends == 0 && duplicate_txn_ids == 0 &&
         card_mismatches == 0 && replica_mismatches == 0 && invariant_violations == 0 &&
         crash_state_mismatches == 0 && unsettled_periods == 0 &&
         spent == totals.payouts + totals.fees + totals.undemanded;
}

Value SimReport::to_value() const {
  auto counts = [](const std::map<std::string, std::size_t>& m) {
    Map out;
    for (const auto& [k, n] : m) out.emplace(k, n);
    return out;
  };
  return Map{
      {"v", 1},
      {"kind", "sim_report"},
      {"seed", seed},
      {"totals", Map{{"issued", totals.issued.minor},
                     {"spent", spent.minor},
                     {"remaining", totals.remaining.minor},
                     {"held", totals.held.minor},
                     {"payouts", totals.payouts.minor},
                     {"fees", totals.fees.minor},
                     {"undemanded", totals.undemanded.minor}}},
      {"conservation", Map{{"ok", conservation.ok}, {"residual", conservation.residual}}},
      {"purchases_ok", purchases_ok},
      {"declines", counts(declines)},
      {"discrepancies", counts(discrepancies)},
      {"network", counts(network)},
      {"ledger_entries", ledger_entries},
      {"replicas", replicas},
      {"crashes", Map{{"count", crashes}, {"state_mismatches", crash_state_mismatches}}},
      {"reference", Map{{"double_spends", double_spends},
                        {"duplicate_txn_ids", duplicate_txn_ids},
                        {"card_mismatches", card_mismatches},
                        {"replica_mismatches", replica_mismatches}}},
      {"invariant_violations", invariant_violations},
      {"unsettled_periods", unsettled_periods},
      {"invariants_ok", invariants_hold()},
  };
}

// ---------------------------------------------------------------------------
// Run

namespace {

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so bounded draws are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t x = g_();
      if (x < limit) return x % n;
    }
  }
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }
  std::uint64_t next() { return g_(); }

 private:
  std::mt19937_64 g_;
};

enum class Fate { Deliver, Drop, Duplicate, Delay };

// Message-layer fault injection between merchant and provider. Each leg of
// an exchange (request, reply) draws its own fate. Delayed messages are
// delivered behind the next exchange, so they arrive out of order.
class FaultyNetwork : public ProviderTransport {
 public:
  using Rebuild = std::function<void()>;

  FaultyNetwork(std::unique_ptr<ProviderService>& provider, const SimConfig& cfg, Rebuild rebuild)
      : provider_(provider),
        rng_(cfg.seed ^ 0x9e3779b97f4a7c15ULL),
        drop_(cfg.drop_pct),
        dup_(cfg.duplicate_pct),
        reorder_(cfg.reorder_pct),
        crash_points_(cfg.crash_points.begin(), cfg.crash_points.end()),
        rebuild_(std::move(rebuild)) {}

  std::vector<std::string> exchange(const std::string& line) override {
    std::vector<std::string> out;
    for (auto& r : delayed_replies_) out.push_back(std::move(r));
    delayed_replies_.clear();
    std::deque<std::string> late;
    late.swap(delayed_requests_);

    ++counts_["sent"];
    switch (fate()) {
      case Fate::Drop: ++counts_["dropped"]; break;
      case Fate::Duplicate:
        ++counts_["duplicated"];
        deliver(line, out);
        deliver(line, out);
        break;
      case Fate::Delay:
        ++counts_["reordered"];
        delayed_requests_.push_back(line);
        break;
      case Fate::Deliver: deliver(line, out); break;
    }
    for (const auto& l : late) deliver(l, out);
    return out;
  }

  // Delivers everything still in flight; replies go nowhere.
  void flush() {
    std::vector<std::string> sink;
    while (!delayed_requests_.empty()) {
      std::deque<std::string> late;
      late.swap(delayed_requests_);
      for (const auto& l : late) deliver(l, sink);
    }
    delayed_replies_.clear();
  }

  void heal() { drop_ = dup_ = reorder_ = 0; }

  const std::vector<std::string>& reply_log() const { return reply_log_; }
  const std::map<std::string, std::size_t>& counts() const { return counts_; }
  std::size_t crashes() const { return crashes_; }
  std::size_t crash_mismatches() const { return crash_mismatches_; }

 private:
  Fate fate() {
    if (drop_ + dup_ + reorder_ == 0) return Fate::Deliver;
    const int r = static_cast<int>(rng_.below(100));
    if (r < drop_) return Fate::Drop;
    if (r < drop_ + dup_) return Fate::Duplicate;
    if (r < drop_ + dup_ + reorder_) return Fate::Delay;
    return Fate::Deliver;
  }

  void deliver(const std::string& line, std::vector<std::string>& out) {
    std::string reply = provider_->handle_line(line);
    reply_log_.push_back(reply);
    if (is_new_capture(reply) && crash_points_.contains(++captures_)) {
      // The capture is durable but its reply never leaves the process.
      const std::string before = provider_->state_digest();
      rebuild_();
      ++crashes_;
      if (provider_->state_digest() != before) ++crash_mismatches_;
      return;
    }
    switch (fate()) {
      case Fate::Drop: ++counts_["reply_dropped"]; break;
      case Fate::Duplicate:
        ++counts_["reply_duplicated"];
        out.push_back(reply);
        out.push_back(std::move(reply));
        break;
      case Fate::Delay:
        ++counts_["reply_reordered"];
        delayed_replies_.push_back(std::move(reply));
        break;
      case Fate::Deliver: out.push_back(std::move(reply)); break;
    }
  }

  bool is_new_capture(const std::string& reply) {
    if (crash_points_.empty() || reply.find(msg::kCaptureConfirm) == std::string::npos) return false;
    const Envelope env = Envelope::decode(reply);
    if (env.type != msg::kCaptureConfirm) return false;
    return seen_captures_.insert(canonical::get_string(env.body, "hold_id")).second;
  }

  std::unique_ptr<ProviderService>& provider_;
  Rng rng_;
  int drop_, dup_, reorder_;
  std::set<std::uint64_t> crash_points_;
  Rebuild rebuild_;
  std::deque<std::string> delayed_requests_;
  std::vector<std::string> delayed_replies_;
  std::vector<std::string> reply_log_;
  std::map<std::string, std::size_t> counts_;
  std::set<std::string> seen_captures_;
  std::uint64_t captures_ = 0;
  std::size_t crashes_ = 0;
  std::size_t crash_mismatches_ = 0;
};

struct SimCard {
  std::string number;
  std::string secret;
  std::string password;
  Money denomination;
  bool active = false;
};

std::string decline_reason(const Error& e) {
  if (e.code() == ErrorCode::PaymentDeclined && !e.detail().empty()) return e.detail();
  return std::string(to_string(e.code()));
}

}  // namespace

SimReport run_simulation(const SimConfig& cfg) {
  cfg.validate();
  const std::string seed_text = std::to_string(cfg.seed);
  const std::string provider_id = "4242";
  const std::string merchant_id = "sim-merchant";

  TempDir dir("cardpay-sim");
  ManualClock clock(kSimEpoch);
  Rng rng(cfg.seed);

  const crypto::SigningKey provider_key =
      crypto::SigningKey::from_seed(crypto::seed_from_string("cardpay/sim/provider|" + seed_text));
  const crypto::SigningKey merchant_key =
      crypto::SigningKey::from_seed(crypto::seed_from_string("cardpay/sim/merchant|" + seed_text));

  ProviderConfig pcfg;
  pcfg.provider_id = provider_id;
  pcfg.data_dir = dir.path() / "provider";
  pcfg.hold_ttl = cfg.hold_ttl;
  pcfg.fee_rate_bp = cfg.fee_rate_bp;
  pcfg.sync = false;
  pcfg.snapshot_every = 2500;
  pcfg.password_cost = crypto::PasswordCost::minimal();
  KeyRegistry preg(provider_id, provider_key);
  preg.add_counterparty(merchant_id, merchant_key.public_key());

  std::unique_ptr<ProviderService> provider;
  auto rebuild = [&] {
    provider.reset();
    provider = std::make_unique<ProviderService>(pcfg, preg, clock.clock());
  };
  rebuild();

  // Issuance: one batch per denomination, cards dealt round-robin.
  std::vector<SimCard> cards;
  Money issued;
  {
    std::vector<std::size_t> per_denom(cfg.denominations.size(), 0);
    for (std::size_t i = 0; i < cfg.num_cards; ++i) ++per_denom[i % cfg.denominations.size()];
    std::vector<std::vector<IssuedCard>> dealt(cfg.denominations.size());
    for (std::size_t d = 0; d < cfg.denominations.size(); ++d) {
      if (per_denom[d] == 0) continue;
      IssueOptions opt;
      opt.seed = "cardpay/sim/batch|" + seed_text + "|" + std::to_string(d);
      opt.batch_id = static_cast<std::uint32_t>(d + 1);
      opt.issued_at = kSimEpoch;
      const CardBatch batch = issue_batch(provider_id, Money{cfg.denominations[d]}, per_denom[d], opt);
      provider->load_cards(batch);
      dealt[d] = batch.cards;
    }
    std::vector<std::size_t> next(cfg.denominations.size(), 0);
    for (std::size_t i = 0; i < cfg.num_cards; ++i) {
      const std::size_t d = i % cfg.denominations.size();
      const IssuedCard& ic = dealt[d][next[d]++];
      cards.push_back({ic.card_number, ic.secret, "pw-" + std::to_string(rng.next() % 1000000000ULL),
                       Money{cfg.denominations[d]}, false});
      issued += Money{cfg.denominations[d]};
    }
  }

  Catalog catalog = [&] {
    std::vector<CatalogItem> items;
    for (std::size_t i = 0; i < cfg.num_items; ++i)
      items.push_back({"item-" + std::to_string(i), "Item " + std::to_string(i),
                       Money{rng.between(cfg.price_min, cfg.price_max)}});
    return Catalog(std::move(items));
  }();

  auto network = std::make_shared<FaultyNetwork>(provider, cfg, rebuild);
  MerchantConfig mcfg;
  mcfg.merchant_id = merchant_id;
  mcfg.provider_id = provider_id;
  mcfg.data_dir = dir.path() / "merchant";
  mcfg.sync = false;
  mcfg.deterministic_seed = "cardpay/sim|" + seed_text;
  mcfg.log = [](const std::string&) {};
  KeyRegistry mreg(merchant_id, merchant_key);
  mreg.add_counterparty(provider_id, provider_key.public_key());
  MerchantService merchant(mcfg, mreg, catalog, network, clock.clock());

  SimReport report;
  report.seed = cfg.seed;

  // Activation through the merchant, over the same faulty channel.
  for (SimCard& c : cards) {
    for (int attempt = 0; attempt < 20 && !c.active; ++attempt) {
      try {
        merchant.activate_card(c.number, c.secret, c.password);
        c.active = true;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::AlreadyActivated) c.active = true;
        else if (e.code() != ErrorCode::ProviderUnreachable) break;
      }
    }
    if (!c.active) ++report.declines["activation_failed"];
  }

  // Purchases on fixed ticks; periods split the purchase sequence evenly.
  const auto N = cfg.num_purchases;
  const auto P = cfg.periods;
  auto boundary = [&](std::size_t k) { return kSimEpoch + static_cast<std::int64_t>(k * N / P) * cfg.tick_seconds; };
  std::vector<Period> periods;
  for (std::size_t k = 0; k < P; ++k) periods.push_back({boundary(k), boundary(k + 1)});
  std::set<std::size_t> unsettled;

  Money payouts, fees;
  auto settle = [&](std::size_t k, int attempts) {
    for (int a = 0; a < attempts; ++a) {
      try {
        const SettlementSummary s = merchant.settle(periods[k]);
        payouts += s.payout;
        fees += s.fee;
        for (const auto& d : s.discrepancies) ++report.discrepancies[std::string(to_string(d.kind))];
        return true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ProviderUnreachable) {
          ++report.declines["settlement_" + std::string(to_string(e.code()))];
          return false;
        }
      }
    }
    return false;
  };

  std::vector<std::vector<std::size_t>> owned(cfg.num_customers);
  for (std::size_t i = 0; i < cards.size(); ++i) owned[i % cfg.num_customers].push_back(i);

  const std::vector<CatalogItem> items = catalog.list();
  std::size_t next_period = 0;
  for (std::size_t i = 0; i < N; ++i) {
    clock.set(kSimEpoch + static_cast<std::int64_t>(i) * cfg.tick_seconds);
    while (next_period + 1 < P && clock.now() >= periods[next_period].end) {
      if (!settle(next_period, 5)) unsettled.insert(next_period);
      ++next_period;
    }
    provider->expire_holds(clock.now());

    const auto& mine = owned[rng.below(cfg.num_customers)];
    const SimCard& card = cards[mine[rng.below(mine.size())]];
    const CatalogItem& item = items[rng.below(cfg.num_items)];
    try {
      merchant.checkout(item.item_id, card.number, card.secret, card.password, provider_id);
      ++report.purchases_ok;
    } catch (const Error& e) {
      ++report.declines[decline_reason(e)];
    }
  }

  clock.set(kSimEpoch + static_cast<std::int64_t>(N) * cfg.tick_seconds);
  for (; next_period < P; ++next_period)
    if (!settle(next_period, 5)) unsettled.insert(next_period);

  // Closing: drain the channel, heal it, and settle whatever is left.
  network->flush();
  network->heal();
  for (auto it = unsettled.begin(); it != unsettled.end();)
    it = settle(*it, 1) ? unsettled.erase(it) : std::next(it);
  clock.advance(cfg.hold_ttl + 1);
  provider->expire_holds(clock.now());

  // Final state.
  FinalState fs;
  fs.issued = issued;
  fs.payouts = payouts;
  fs.fees = fees;
  std::map<std::string, Money> card_balance;
  for (const Card& c : provider->cards()) {
    fs.remaining += c.balance;
    card_balance[c.card_number] = c.balance;
  }
  for (const Hold& h : provider->active_holds()) fs.held += h.amount;
  const std::vector<TransactionRecord> replicas = provider->replicas();
  for (const auto& r : replicas) {
    report.spent += r.amount;
    if (r.state == TxnState::Captured) fs.undemanded += r.amount;
  }
  report.totals = fs;
  report.conservation = check_conservation(fs);
  report.replicas = replicas.size();
  report.unsettled_periods = unsettled.size();
  report.invariant_violations = provider->invariant_violations();
  report.crashes = network->crashes();
  report.crash_state_mismatches = network->crash_mismatches();
  for (const auto& [k, n] : network->counts()) report.network[k] = n;

  const std::vector<TransactionRecord> ledger = merchant.ledger();
  report.ledger_entries = ledger.size();
  {
    std::set<std::string> ids;
    for (const auto& r : ledger)
      if (!ids.insert(r.txn_id).second) ++report.duplicate_txn_ids;
  }
  if (merchant.expected_payouts() != payouts) ++report.replica_mismatches;

  // Reference ledger from the provider's own reply log, independent of its
  // card store: every confirmed capture, once.
  std::map<std::string, TransactionRecord> logged;
  for (const auto& line : network->reply_log()) {
    if (line.find(msg::kCaptureConfirm) == std::string::npos) continue;
    const Envelope env = Envelope::decode(line);
    if (env.type != msg::kCaptureConfirm) continue;
    const CaptureConfirm cc = CaptureConfirm::from_value(env.body);
    auto [it, inserted] = logged.emplace(cc.record.txn_id, cc.record);
    if (!inserted && !it->second.same_signed_fields(cc.record)) ++report.replica_mismatches;
  }
  std::map<std::string, Money> spent_by_ref;
  for (const auto& [id, r] : logged) spent_by_ref[r.card_ref] += r.amount;
  for (const SimCard& c : cards) {
    const Money spent = spent_by_ref[card_ref(c.number)];
    if (spent > c.denomination) ++report.double_spends;
    if (card_balance[c.number] != c.denomination - spent) ++report.card_mismatches;
  }
  {
    std::set<std::string> replica_ids;
    for (const auto& r : replicas) replica_ids.insert(r.txn_id);
    for (const auto& [id, _] : logged)
      if (!replica_ids.contains(id)) ++report.replica_mismatches;
    for (const auto& id : replica_ids)
      if (!logged.contains(id)) ++report.replica_mismatches;
  }
  return report;
}

}  // namespace cardpay
