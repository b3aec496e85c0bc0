#include "cardpay/envelope.hpp"

#include "cardpay/record.hpp"

namespace cardpay {

using canonical::Map;
using canonical::Value;

std::string Envelope::signing_bytes() const {
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"type", type},
      {"sender_id", sender_id},
      {"nonce", nonce},
      {"ts", ts},
      {"body", body},
  });
}

std::string Envelope::encode() const {
  return canonical::encode(Map{
      {"v", kFormatVersion},
      {"type", type},
      {"sender_id", sender_id},
      {"nonce", nonce},
      {"ts", ts},
      {"body", body},
      {"sig", crypto::to_hex(sig)},
  });
}

Envelope Envelope::decode(std::string_view line) {
  using namespace canonical;
  const Value v = canonical::decode(line);
  if (get_int(v, "v") != kFormatVersion) fail(ErrorCode::MalformedInput, "unsupported envelope version");
  if (v.as_map().size() != 7) fail(ErrorCode::MalformedInput, "unexpected envelope fields");
  Envelope e;
  e.type = get_string(v, "type");
  e.sender_id = get_string(v, "sender_id");
  e.nonce = get_string(v, "nonce");
  e.ts = get_int(v, "ts");
  e.body = v.at("body");
  if (!e.body.is_map()) fail(ErrorCode::MalformedInput, "envelope body must be a map");
  e.sig = crypto::from_hex(get_string(v, "sig"));
  return e;
}

bool Envelope::signature_valid(const KeyRegistry& registry) const {
  return registry.verify_key(sender_id).verify(signing_bytes(), sig);
}

Envelope seal(std::string_view type, Value body, const KeyRegistry& signer, std::string nonce,
              std::int64_t ts) {
  Envelope e;
  e.type = std::string(type);
  e.sender_id = signer.own_id();
  e.nonce = std::move(nonce);
  e.ts = ts;
  e.body = std::move(body);
  e.sig = signer.sign(e.signing_bytes());
  return e;
}

std::string random_nonce() { return crypto::to_hex(crypto::random_bytes(16)); }

}  // namespace cardpay
