#include "cardpay/config.hpp"

#include <algorithm>

#include "cardpay/canonical.hpp"
#include "cardpay/card.hpp"
#include "cardpay/error.hpp"

namespace cardpay {

using canonical::Value;

namespace {

// Field readers that turn every shape problem into ConfigInvalid.
class Fields {
 public:
  Fields(const Value& v, std::filesystem::path base) : v_(v), base_(std::move(base)) {
    if (!v_.is_map()) fail(ErrorCode::ConfigInvalid, "config must be a map");
  }

  const Value* raw(std::string_view key) const { return v_.find(key); }

  std::string str(std::string_view key) const {
    const Value* f = v_.find(key);
    if (!f || !f->is_string() || f->as_string().empty())
      fail(ErrorCode::ConfigInvalid, "config: '" + std::string(key) + "' must be a non-empty string");
    return f->as_string();
  }
  std::string str_or(std::string_view key, std::string fallback) const {
    return v_.contains(key) ? str(key) : fallback;
  }
  std::int64_t num_or(std::string_view key, std::int64_t fallback, std::int64_t lo, std::int64_t hi) const {
    const Value* f = v_.find(key);
    if (!f) return fallback;
    if (!f->is_int() || f->as_int() < lo || f->as_int() > hi)
      fail(ErrorCode::ConfigInvalid, "config: '" + std::string(key) + "' must be an integer in [" +
                                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return f->as_int();
  }
  bool flag_or(std::string_view key, bool fallback) const {
    const Value* f = v_.find(key);
    if (!f) return fallback;
    if (!f->is_bool()) fail(ErrorCode::ConfigInvalid, "config: '" + std::string(key) + "' must be a boolean");
    return f->as_bool();
  }
  std::filesystem::path path(std::string_view key) const {
    std::filesystem::path p = str(key);
    return p.is_absolute() ? p : base_ / p;
  }
  std::filesystem::path path_or(std::string_view key) const {
    return v_.contains(key) ? path(key) : std::filesystem::path{};
  }
  std::vector<std::string> str_list(std::string_view key) const {
    std::vector<std::string> out;
    const Value* f = v_.find(key);
    if (!f) return out;
    if (!f->is_list()) fail(ErrorCode::ConfigInvalid, "config: '" + std::string(key) + "' must be a list");
    for (const Value& e : f->as_list()) {
      if (!e.is_string()) fail(ErrorCode::ConfigInvalid, "config: '" + std::string(key) + "' entries must be strings");
      out.push_back(e.as_string());
    }
    return out;
  }

 private:
  const Value& v_;
  std::filesystem::path base_;
};

Value read_config(const std::filesystem::path& path) {
  try {
    return canonical::read_file_relaxed(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigInvalid, "cannot read config " + path.string() + ": " + e.what());
  }
}

void check_key_hex(const std::string& hex, const std::string& what) {
  try {
    if (crypto::from_hex(hex).size() == 32) return;
  } catch (const Error&) {
  }
  fail(ErrorCode::ConfigInvalid, "config: " + what + " must be 64 hex characters");
}

crypto::PasswordCost password_cost(const std::string& name) {
  if (name == "interactive") return crypto::PasswordCost::interactive();
  if (name == "minimal") return crypto::PasswordCost::minimal();
  fail(ErrorCode::ConfigInvalid, "config: password_cost must be 'interactive' or 'minimal'");
}

// A misspelt key would otherwise fall back to its default without notice.
void reject_unknown(const Value& v, std::initializer_list<std::string_view> known) {
  for (const auto& [key, _] : v.as_map())
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(ErrorCode::ConfigInvalid, "config: unknown key '" + key + "'");
}

TransportMode transport_mode(const Fields& f) {
  return f.flag_or("plaintext", false) ? TransportMode::PlaintextAllowlist : TransportMode::Secure;
}

}  // namespace

KeyRegistry ProviderFileConfig::registry() const {
  KeyRegistry reg(service.provider_id, crypto::SigningKey::from_seed_hex(signing_seed));
  for (const auto& [id, key] : merchants) reg.add_counterparty(id, crypto::VerifyKey::from_hex(key));
  return reg;
}

KeyRegistry MerchantFileConfig::registry() const {
  KeyRegistry reg(service.merchant_id, crypto::SigningKey::from_seed_hex(signing_seed));
  reg.add_counterparty(service.provider_id, crypto::VerifyKey::from_hex(provider_key));
  return reg;
}

ProviderFileConfig load_provider_config(const std::filesystem::path& path) {
  const Value v = read_config(path);
  const Fields f(v, path.parent_path());
  reject_unknown(v, {"provider_id", "signing_seed", "data_dir", "hold_ttl", "fee_rate_bp", "acceptance_window",
                     "sync", "snapshot_every", "password_cost", "merchants", "bind", "port", "threads",
                     "plaintext", "plaintext_allowlist"});
  ProviderFileConfig c;
  c.service.provider_id = f.str("provider_id");
  if (!valid_provider_id(c.service.provider_id))
    fail(ErrorCode::ConfigInvalid, "config: provider_id must be 1-6 digits");
  c.signing_seed = f.str("signing_seed");
  check_key_hex(c.signing_seed, "signing_seed");
  c.service.data_dir = f.path("data_dir");
  c.service.hold_ttl = f.num_or("hold_ttl", c.service.hold_ttl, 1, 86400 * 30);
  c.service.fee_rate_bp = f.num_or("fee_rate_bp", c.service.fee_rate_bp, 0, 10000);
  c.service.acceptance_window = f.num_or("acceptance_window", c.service.acceptance_window, 0, 86400);
  c.service.sync = f.flag_or("sync", true);
  c.service.snapshot_every =
      static_cast<std::uint64_t>(f.num_or("snapshot_every", static_cast<std::int64_t>(c.service.snapshot_every), 0, INT64_MAX));
  c.service.password_cost = password_cost(f.str_or("password_cost", "interactive"));

  const Value* merchants = f.raw("merchants");
  if (!merchants || !merchants->is_map() || merchants->as_map().empty())
    fail(ErrorCode::ConfigInvalid, "config: 'merchants' must map merchant ids to public keys");
  for (const auto& [id, key] : merchants->as_map()) {
    if (!key.is_string()) fail(ErrorCode::ConfigInvalid, "config: key for merchant '" + id + "' must be a string");
    check_key_hex(key.as_string(), "key for merchant '" + id + "'");
    c.merchants.emplace(id, key.as_string());
  }

  c.server.bind = f.str_or("bind", c.server.bind);
  c.server.port = static_cast<std::uint16_t>(f.num_or("port", kDefaultProviderPort, 0, 65535));
  c.server.threads = static_cast<std::size_t>(f.num_or("threads", 8, 1, 1024));
  c.server.mode = transport_mode(f);
  c.server.allowlist = f.str_list("plaintext_allowlist");
  if (c.server.mode == TransportMode::PlaintextAllowlist && c.server.allowlist.empty())
    fail(ErrorCode::ConfigInvalid, "config: plaintext mode requires 'plaintext_allowlist'");
  return c;
}

MerchantFileConfig load_merchant_config(const std::filesystem::path& path) {
  const Value v = read_config(path);
  const Fields f(v, path.parent_path());
  reject_unknown(v, {"merchant_id", "provider_id", "data_dir", "sync", "signing_seed", "provider_key",
                     "provider_host", "provider_port", "plaintext", "http_bind", "http_port", "catalog",
                     "static_dir"});
  MerchantFileConfig c;
  c.service.merchant_id = f.str("merchant_id");
  c.service.provider_id = f.str("provider_id");
  c.service.data_dir = f.path("data_dir");
  c.service.sync = f.flag_or("sync", true);
  c.signing_seed = f.str("signing_seed");
  check_key_hex(c.signing_seed, "signing_seed");
  c.provider_key = f.str("provider_key");
  check_key_hex(c.provider_key, "provider_key");
  c.provider_host = f.str_or("provider_host", c.provider_host);
  c.provider_port = static_cast<std::uint16_t>(f.num_or("provider_port", kDefaultProviderPort, 1, 65535));
  c.mode = transport_mode(f);
  c.http_bind = f.str_or("http_bind", c.http_bind);
  c.http_port = static_cast<std::uint16_t>(f.num_or("http_port", 8080, 0, 65535));
  c.catalog = f.path_or("catalog");
  c.static_dir = f.path_or("static_dir");
  return c;
}

}  // namespace cardpay
