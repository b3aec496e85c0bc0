#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cardpay/keys.hpp"
#include "cardpay/merchant.hpp"

namespace cardpay {

class ProviderService;

inline constexpr std::uint16_t kDefaultProviderPort = 7402;
inline constexpr std::size_t kMaxLineBytes = 64 * 1024 * 1024;

// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& o) noexcept : fd_(o.fd_), buffer_(std::move(o.buffer_)) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const std::string& host, std::uint16_t port, int timeout_ms);
  static Socket listen(const std::string& host, std::uint16_t port);

  std::optional<Socket> accept();
  void set_timeout(int timeout_ms);
  void write_all(std::string_view data);
  // Next newline-terminated line without the newline; nullopt on EOF,
  // timeout or an over-long line.
  std::optional<std::string> read_line();
  void shutdown();

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  std::string peer_address() const;
  std::uint16_t local_port() const;

 private:
  int fd_ = -1;
  std::string buffer_;
};

enum class TransportMode {
  Secure,              // mutually authenticated, encrypted
  PlaintextAllowlist,  // test mode: clear text, peers restricted by address
};

// Channel keyed from an ephemeral X25519 exchange whose public halves are
// signed with each party's long-term Ed25519 key. Frames are hex-encoded
// secretbox ciphertexts, one per line, with per-direction counters.
class SecureSession {
 public:
  static SecureSession client(Socket& socket, const KeyRegistry& registry,
                              const std::string& expected_server);
  static SecureSession server(Socket& socket, const KeyRegistry& registry);

  void send(Socket& socket, std::string_view plaintext);
  // nullopt on EOF; throws MalformedInput on a frame that fails to decrypt.
  std::optional<std::string> receive(Socket& socket);

  const std::string& peer_id() const { return peer_id_; }

 private:
  std::string peer_id_;
  std::array<std::uint8_t, 32> rx_{};
  std::array<std::uint8_t, 32> tx_{};
  std::uint64_t rx_counter_ = 0;
  std::uint64_t tx_counter_ = 0;
};

struct ServerOptions {
  std::string bind = "0.0.0.0";
  std::uint16_t port = kDefaultProviderPort;  // 0 picks a free port
  TransportMode mode = TransportMode::Secure;
  // Peer IP addresses allowed to connect. Required in plaintext mode; when
  // non-empty in secure mode it is enforced as well.
  std::vector<std::string> allowlist;
  std::size_t threads = 8;
  int io_timeout_ms = 30000;
};

// Serves the envelope protocol for one ProviderService.
class ProviderServer {
 public:
  ProviderServer(ProviderService& service, ServerOptions options);
  ~ProviderServer();

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void worker_loop();
  void serve(Socket socket);
  bool allowed(const std::string& address) const;

  ProviderService& service_;
  ServerOptions options_;
  Socket listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Socket> pending_;
  std::set<int> active_fds_;
};

// Merchant-side client: one connection per exchange.
class TcpProviderTransport : public ProviderTransport {
 public:
  TcpProviderTransport(std::string host, std::uint16_t port, KeyRegistry registry,
                       std::string provider_id, TransportMode mode, int timeout_ms = 10000);

  std::vector<std::string> exchange(const std::string& line) override;

 private:
  std::string host_;
  std::uint16_t port_;
  KeyRegistry registry_;
  std::string provider_id_;
  TransportMode mode_;
  int timeout_ms_;
};

}  // namespace cardpay
