#include "cardpay/keys.hpp"

#include "cardpay/error.hpp"

namespace cardpay {

KeyRegistry::KeyRegistry(std::string own_id, crypto::SigningKey own_key)
    : own_id_(std::move(own_id)), own_key_(std::move(own_key)), own_public_(own_key_.public_key()) {}

void KeyRegistry::add_counterparty(const std::string& party_id, const crypto::VerifyKey& key) {
  if (party_id == own_id_) fail(ErrorCode::ConfigInvalid, "counterparty id equals own id");
  peers_[party_id] = key;
}

bool KeyRegistry::knows(const std::string& party_id) const {
  return party_id == own_id_ || peers_.contains(party_id);
}

const crypto::VerifyKey& KeyRegistry::verify_key(const std::string& party_id) const {
  if (party_id == own_id_) return own_public_;
  auto it = peers_.find(party_id);
  if (it == peers_.end()) fail(ErrorCode::UnknownParty, "no key registered for '" + party_id + "'");
  return it->second;
}

std::vector<std::string> KeyRegistry::counterparties() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : peers_) out.push_back(id);
  return out;
}

crypto::SigningKey test_key(std::string_view label) {
  return crypto::SigningKey::from_seed(crypto::seed_from_string("cardpay-test-key|" + std::string(label)));
}

}  // namespace cardpay
