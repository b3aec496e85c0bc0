#pragma once

// Customer-facing HTTP endpoints of the merchant:
//   GET  /catalog
//   POST /checkout        item_id, card_number, secret, password, provider_id
//   GET  /receipt/{txn_id}
//   POST /activate        card_number, secret, new_password
//   POST /balance         card_number, secret, password
// Bodies are JSON objects or url-encoded forms; responses are JSON.
// Decline responses are generic; the reason goes to the merchant log only.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>

#include "cardpay/merchant.hpp"

namespace cardpay {

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

// Transport-free request handling, shared by the server and tests.
HttpReply http_catalog(MerchantService& merchant);
HttpReply http_checkout(MerchantService& merchant, const std::map<std::string, std::string>& fields);
HttpReply http_receipt(MerchantService& merchant, const std::string& txn_id);
HttpReply http_activate(MerchantService& merchant, const std::map<std::string, std::string>& fields);
HttpReply http_balance(MerchantService& merchant, const std::map<std::string, std::string>& fields);

class MerchantHttpServer {
 public:
  MerchantHttpServer(MerchantService& merchant, std::string bind, std::uint16_t port,
                     std::filesystem::path static_dir = {});
  ~MerchantHttpServer();

  void start();
  void stop();
  // Blocks until stop() is called from elsewhere.
  void run();
  std::uint16_t port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string bind_;
  std::uint16_t port_;
  std::thread thread_;
};

}  // namespace cardpay
