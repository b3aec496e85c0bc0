#pragma once

#include <map>
#include <string>
#include <vector>

#include "cardpay/crypto.hpp"

namespace cardpay {

// Pairwise key material held by one party: its own signing key plus the
// verification keys of exactly the counterparties it was configured with.
// Keys are exchanged out of band; there is no public key server.
class KeyRegistry {
 public:
  KeyRegistry(std::string own_id, crypto::SigningKey own_key);

  const std::string& own_id() const { return own_id_; }
  const crypto::SigningKey& signing_key() const { return own_key_; }

  void add_counterparty(const std::string& party_id, const crypto::VerifyKey& key);

  bool knows(const std::string& party_id) const;
  // Own id resolves to the own public key. Throws UnknownParty otherwise.
  const crypto::VerifyKey& verify_key(const std::string& party_id) const;
  std::vector<std::string> counterparties() const;

  crypto::Bytes sign(std::string_view message) const { return own_key_.sign(message); }

 private:
  std::string own_id_;
  crypto::SigningKey own_key_;
  crypto::VerifyKey own_public_;
  std::map<std::string, crypto::VerifyKey, std::less<>> peers_;
};

// Deterministic key for tests and simulations only.
crypto::SigningKey test_key(std::string_view label);

}  // namespace cardpay
