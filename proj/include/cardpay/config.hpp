#pragma once

// Service config files. Read with the relaxed reader so they can be written
// by hand; relative paths resolve against the config file's directory.

#include <filesystem>
#include <map>
#include <string>

#include "cardpay/keys.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/provider.hpp"
#include "cardpay/transport.hpp"

namespace cardpay {

struct ProviderFileConfig {
  ProviderConfig service;
  std::string signing_seed;                      // hex, 32 bytes
  std::map<std::string, std::string> merchants;  // merchant_id -> public key hex
  ServerOptions server;

  KeyRegistry registry() const;
};

struct MerchantFileConfig {
  MerchantConfig service;
  std::string signing_seed;
  std::string provider_key;  // provider public key hex
  std::string provider_host = "127.0.0.1";
  std::uint16_t provider_port = kDefaultProviderPort;
  TransportMode mode = TransportMode::Secure;
  std::string http_bind = "127.0.0.1";
  std::uint16_t http_port = 8080;
  std::filesystem::path catalog;
  std::filesystem::path static_dir;  // optional storefront build

  KeyRegistry registry() const;
};

// Both throw ConfigInvalid with the offending field in the message.
ProviderFileConfig load_provider_config(const std::filesystem::path& path);
MerchantFileConfig load_merchant_config(const std::filesystem::path& path);

}  // namespace cardpay
