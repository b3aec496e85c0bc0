#include "cardpay/crypto.hpp"

#include <sodium.h>

#include <mutex>

#include "cardpay/error.hpp"

namespace cardpay::crypto {

void init() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) fail(ErrorCode::Io, "libsodium initialisation failed");
  });
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (const auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xf]);
  }
  return out;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) fail(ErrorCode::MalformedInput, "odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(ErrorCode::MalformedInput, "non-hex character");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return out;
}

std::array<std::uint8_t, 32> sha256(std::string_view data) {
  init();
  std::array<std::uint8_t, 32> out{};
  crypto_hash_sha256(out.data(), reinterpret_cast<const unsigned char*>(data.data()),
                     data.size());
  return out;
}

std::string sha256_hex(std::string_view data) { return to_hex(sha256(data)); }

Bytes random_bytes(std::size_t n) {
  init();
  Bytes out(n);
  randombytes_buf(out.data(), n);
  return out;
}

Bytes deterministic_bytes(const Seed& seed, std::size_t n) {
  init();
  Bytes out(n);
  randombytes_buf_deterministic(out.data(), n, seed.data());
  return out;
}

Seed seed_from_string(std::string_view material) { return sha256(material); }

VerifyKey VerifyKey::from_hex(std::string_view hex) {
  const Bytes b = crypto::from_hex(hex);
  if (b.size() != kSize) fail(ErrorCode::MalformedInput, "public key must be 32 bytes");
  std::array<std::uint8_t, kSize> pk{};
  std::copy(b.begin(), b.end(), pk.begin());
  return VerifyKey(pk);
}

bool VerifyKey::verify(std::string_view message, std::span<const std::uint8_t> signature) const {
  init();
  if (signature.size() != kSignatureSize) return false;
  return crypto_sign_verify_detached(signature.data(),
                                     reinterpret_cast<const unsigned char*>(message.data()),
                                     message.size(), pk_.data()) == 0;
}

std::string VerifyKey::hex() const { return to_hex(pk_); }

SigningKey SigningKey::generate() {
  const Bytes r = random_bytes(32);
  Seed seed{};
  std::copy(r.begin(), r.end(), seed.begin());
  return from_seed(seed);
}

SigningKey SigningKey::from_seed(const Seed& seed) {
  init();
  SigningKey k;
  std::array<std::uint8_t, 32> pk{};
  crypto_sign_seed_keypair(pk.data(), k.sk_.data(), seed.data());
  k.seed_ = seed;
  k.public_ = VerifyKey(pk);
  return k;
}

SigningKey SigningKey::from_seed_hex(std::string_view hex) {
  const Bytes b = from_hex(hex);
  if (b.size() != 32) fail(ErrorCode::MalformedInput, "signing seed must be 32 bytes");
  Seed seed{};
  std::copy(b.begin(), b.end(), seed.begin());
  return from_seed(seed);
}

SigningKey::~SigningKey() {
  sodium_memzero(sk_.data(), sk_.size());
  sodium_memzero(seed_.data(), seed_.size());
}

Bytes SigningKey::sign(std::string_view message) const {
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, reinterpret_cast<const unsigned char*>(message.data()),
                       message.size(), sk_.data());
  return sig;
}

std::string SigningKey::seed_hex() const { return to_hex(seed_); }

PasswordCost PasswordCost::interactive() {
  return {crypto_pwhash_OPSLIMIT_INTERACTIVE, crypto_pwhash_MEMLIMIT_INTERACTIVE};
}

PasswordCost PasswordCost::minimal() {
  return {crypto_pwhash_OPSLIMIT_MIN, crypto_pwhash_MEMLIMIT_MIN};
}

std::string hash_password(std::string_view password, PasswordCost cost) {
  init();
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str_alg(out, password.data(), password.size(), cost.ops, cost.mem,
                            crypto_pwhash_ALG_ARGON2ID13) != 0)
    fail(ErrorCode::Io, "password hashing ran out of memory");
  return std::string(out);
}

bool verify_password(const std::string& hash, std::string_view password) {
  init();
  return crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  return sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace cardpay::crypto
