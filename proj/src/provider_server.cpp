#include <sys/socket.h>

#include <algorithm>

#include "cardpay/error.hpp"
#include "cardpay/provider.hpp"
#include "cardpay/transport.hpp"

namespace cardpay {

ProviderServer::ProviderServer(ProviderService& service, ServerOptions options)
    : service_(service), options_(std::move(options)) {
  if (options_.mode == TransportMode::PlaintextAllowlist && options_.allowlist.empty())
    fail(ErrorCode::ConfigInvalid, "plaintext mode requires an address allowlist");
  if (options_.threads == 0) options_.threads = 1;
}

ProviderServer::~ProviderServer() { stop(); }

void ProviderServer::start() {
  if (running_.exchange(true)) return;
  listener_ = Socket::listen(options_.bind, options_.port);
  port_ = listener_.local_port();
  for (std::size_t i = 0; i < options_.threads; ++i) workers_.emplace_back([this] { worker_loop(); });
  acceptor_ = std::thread([this] { accept_loop(); });
}

void ProviderServer::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  {
    std::lock_guard lock(mu_);
    for (int fd : active_fds_) ::shutdown(fd, SHUT_RDWR);
    pending_.clear();
  }
  cv_.notify_all();
  if (acceptor_.joinable()) acceptor_.join();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
  listener_ = Socket();
}

bool ProviderServer::allowed(const std::string& address) const {
  if (options_.allowlist.empty()) return true;
  std::string addr = address;
  // IPv4-mapped IPv6 form
  if (addr.rfind("::ffff:", 0) == 0) addr = addr.substr(7);
  return std::find(options_.allowlist.begin(), options_.allowlist.end(), addr) != options_.allowlist.end();
}

void ProviderServer::accept_loop() {
  while (running_) {
    auto conn = listener_.accept();
    if (!conn) {
      if (!running_) break;
      continue;
    }
    if (!allowed(conn->peer_address())) continue;  // dropped, socket closes
    conn->set_timeout(options_.io_timeout_ms);
    {
      std::lock_guard lock(mu_);
      if (!running_) break;
      pending_.push_back(std::move(*conn));
    }
    cv_.notify_one();
  }
}

void ProviderServer::worker_loop() {
  for (;;) {
    Socket s;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return !running_ || !pending_.empty(); });
      if (!running_) return;
      s = std::move(pending_.front());
      pending_.pop_front();
      active_fds_.insert(s.fd());
    }
    const int fd = s.fd();
    serve(std::move(s));
    std::lock_guard lock(mu_);
    active_fds_.erase(fd);
  }
}

void ProviderServer::serve(Socket socket) {
  try {
    if (options_.mode == TransportMode::Secure) {
      SecureSession session = SecureSession::server(socket, service_.registry());
      const std::string peer = session.peer_id();
      while (auto line = session.receive(socket)) session.send(socket, service_.handle_line(*line, &peer));
    } else {
      while (auto line = socket.read_line()) socket.write_all(service_.handle_line(*line) + "\n");
    }
  } catch (const std::exception&) {
    // Connection-level failure: drop the connection. Protocol errors inside a
    // well-formed frame are answered by handle_line itself.
  }
}

}  // namespace cardpay
