#pragma once

// Thin RAII wrappers over libsodium: Ed25519 signatures, SHA-256 digests,
// Argon2id password hashes and randomness.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cardpay::crypto {

using Bytes = std::vector<std::uint8_t>;
using Seed = std::array<std::uint8_t, 32>;

void init();

std::string to_hex(std::span<const std::uint8_t> bytes);
// Throws MalformedInput on odd length or non-hex characters.
Bytes from_hex(std::string_view hex);

std::array<std::uint8_t, 32> sha256(std::string_view data);
std::string sha256_hex(std::string_view data);

Bytes random_bytes(std::size_t n);
// Expands a 32-byte seed into a reproducible byte stream.
Bytes deterministic_bytes(const Seed& seed, std::size_t n);
Seed seed_from_string(std::string_view material);

class VerifyKey {
 public:
  static constexpr std::size_t kSize = 32;
  static constexpr std::size_t kSignatureSize = 64;

  VerifyKey() = default;
  explicit VerifyKey(const std::array<std::uint8_t, kSize>& pk) : pk_(pk) {}
  static VerifyKey from_hex(std::string_view hex);

  bool verify(std::string_view message, std::span<const std::uint8_t> signature) const;
  std::string hex() const;
  const std::array<std::uint8_t, kSize>& bytes() const { return pk_; }

  friend bool operator==(const VerifyKey&, const VerifyKey&) = default;

 private:
  std::array<std::uint8_t, kSize> pk_{};
};

class SigningKey {
 public:
  static SigningKey generate();
  static SigningKey from_seed(const Seed& seed);
  static SigningKey from_seed_hex(std::string_view hex);

  SigningKey(const SigningKey&) = default;
  SigningKey& operator=(const SigningKey&) = default;
  ~SigningKey();

  Bytes sign(std::string_view message) const;
  VerifyKey public_key() const { return public_; }
  std::string seed_hex() const;

 private:
  SigningKey() = default;

  std::array<std::uint8_t, 64> sk_{};
  Seed seed_{};
  VerifyKey public_;
};

// Argon2id parameters. `interactive()` is for deployed services; `minimal()`
// keeps simulations and tests fast while producing the same hash format.
struct PasswordCost {
  unsigned long long ops;
  std::size_t mem;

  static PasswordCost interactive();
  static PasswordCost minimal();
};

std::string hash_password(std::string_view password, PasswordCost cost);
bool verify_password(const std::string& hash, std::string_view password);

bool constant_time_equal(std::string_view a, std::string_view b);

}  // namespace cardpay::crypto
