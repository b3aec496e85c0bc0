#include "cardpay/merchant_http.hpp"

#include <httplib.h>

#include "cardpay/canonical.hpp"
#include "cardpay/error.hpp"

namespace cardpay {

using canonical::List;
using canonical::Map;
using canonical::Value;

namespace {

HttpReply json(int status, const Value& v) { return {status, canonical::encode(v)}; }

HttpReply error_reply(int status, const std::string& message) {
  return json(status, Map{{"error", message}});
}

// Required form fields, or the name of the first missing one.
std::optional<std::string> missing(const std::map<std::string, std::string>& fields,
                                   std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = fields.find(n);
    if (it == fields.end() || it->second.empty()) return std::string(n);
  }
  return std::nullopt;
}

HttpReply from_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::UnknownItem: return error_reply(404, "unknown item");
    case ErrorCode::PaymentDeclined:
    case ErrorCode::AuthFailure: return error_reply(402, "payment declined");
    case ErrorCode::ProviderUnreachable: return error_reply(503, "provider unavailable, please retry");
    case ErrorCode::BadProviderSignature: return error_reply(502, "payment could not be completed");
    case ErrorCode::InvalidAmount:
    case ErrorCode::MalformedInput: return error_reply(400, "malformed request");
    default: return error_reply(500, "internal error");
  }
}

template <class F>
HttpReply guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception&) {
    return error_reply(500, "internal error");
  }
}

std::map<std::string, std::string> request_fields(const httplib::Request& req) {
  std::map<std::string, std::string> out;
  if (req.get_header_value("Content-Type").rfind("application/json", 0) == 0) {
    const Value v = canonical::parse_relaxed(req.body);
    if (!v.is_map()) fail(ErrorCode::MalformedInput, "body must be an object");
    for (const auto& [k, f] : v.as_map()) {
      if (f.is_string()) out[k] = f.as_string();
      else if (f.is_int()) out[k] = std::to_string(f.as_int());
    }
    return out;
  }
  for (const auto& [k, f] : req.params) out[k] = f;
  return out;
}

}  // namespace

HttpReply http_catalog(MerchantService& merchant) {
  List items;
  for (const CatalogItem& i : merchant.list_catalog())
    items.push_back(Map{{"item_id", i.item_id}, {"title", i.title}, {"price", i.price.minor}});
  return json(200, Map{{"items", std::move(items)}});
}

HttpReply http_checkout(MerchantService& merchant, const std::map<std::string, std::string>& fields) {
  if (auto m = missing(fields, {"item_id", "card_number", "secret", "password", "provider_id"}))
    return error_reply(400, "missing field " + *m);
  return guarded([&] {
    const Receipt r = merchant.checkout(fields.at("item_id"), fields.at("card_number"), fields.at("secret"),
                                        fields.at("password"), fields.at("provider_id"));
    return json(200, r.to_value());
  });
}

HttpReply http_receipt(MerchantService& merchant, const std::string& txn_id) {
  if (auto r = merchant.receipt(txn_id)) return json(200, r->to_value());
  return error_reply(404, "unknown receipt");
}

HttpReply http_activate(MerchantService& merchant, const std::map<std::string, std::string>& fields) {
  if (auto m = missing(fields, {"card_number", "secret", "new_password"}))
    return error_reply(400, "missing field " + *m);
  return guarded([&] {
    merchant.activate_card(fields.at("card_number"), fields.at("secret"), fields.at("new_password"));
    return json(200, Map{{"status", "ACTIVATED"}});
  });
}

HttpReply http_balance(MerchantService& merchant, const std::map<std::string, std::string>& fields) {
  if (auto m = missing(fields, {"card_number", "secret", "password"})) return error_reply(400, "missing field " + *m);
  return guarded([&] {
    const Money b = merchant.balance(fields.at("card_number"), fields.at("secret"), fields.at("password"));
    return json(200, Map{{"balance", b.minor}});
  });
}

struct MerchantHttpServer::Impl {
  httplib::Server server;
};

MerchantHttpServer::MerchantHttpServer(MerchantService& merchant, std::string bind, std::uint16_t port,
                                       std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>()), bind_(std::move(bind)), port_(port) {
  auto& s = impl_->server;
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto with_fields = [send](httplib::Response& res, const httplib::Request& req, auto handler) {
    HttpReply r;
    try {
      r = handler(request_fields(req));
    } catch (const Error&) {
      r = error_reply(400, "malformed request");
    }
    send(res, r);
  };

  s.Get("/catalog", [&merchant, send](const httplib::Request&, httplib::Response& res) {
    send(res, http_catalog(merchant));
  });
  s.Get(R"(/receipt/([0-9a-f]+))", [&merchant, send](const httplib::Request& req, httplib::Response& res) {
    send(res, http_receipt(merchant, req.matches[1]));
  });
  s.Post("/checkout", [&merchant, with_fields](const httplib::Request& req, httplib::Response& res) {
    with_fields(res, req, [&](const auto& f) { return http_checkout(merchant, f); });
  });
  s.Post("/activate", [&merchant, with_fields](const httplib::Request& req, httplib::Response& res) {
    with_fields(res, req, [&](const auto& f) { return http_activate(merchant, f); });
  });
  s.Post("/balance", [&merchant, with_fields](const httplib::Request& req, httplib::Response& res) {
    with_fields(res, req, [&](const auto& f) { return http_balance(merchant, f); });
  });
  if (!static_dir.empty() && !s.set_mount_point("/", static_dir.string()))
    fail(ErrorCode::ConfigInvalid, "static_dir does not exist: " + static_dir.string());
}

MerchantHttpServer::~MerchantHttpServer() { stop(); }

void MerchantHttpServer::start() {
  auto& s = impl_->server;
  if (port_ == 0) {
    const int p = s.bind_to_any_port(bind_);
    if (p < 0) fail(ErrorCode::Io, "cannot bind http port");
    port_ = static_cast<std::uint16_t>(p);
  } else if (!s.bind_to_port(bind_, port_)) {
    fail(ErrorCode::Io, "cannot bind http port " + std::to_string(port_));
  }
  thread_ = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
}

void MerchantHttpServer::run() {
  start();
  if (thread_.joinable()) thread_.join();
}

void MerchantHttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cardpay
