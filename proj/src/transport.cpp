#include "cardpay/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "cardpay/canonical.hpp"
#include "cardpay/error.hpp"
#include "cardpay/record.hpp"

namespace cardpay {

namespace {

[[noreturn]] void sys_error(ErrorCode code, const std::string& what) {
  fail(code, what + ": " + std::strerror(errno));
}

}  // namespace

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = o.fd_;
    buffer_ = std::move(o.buffer_);
    o.fd_ = -1;
  }
  return *this;
}

Socket Socket::connect(const std::string& host, std::uint16_t port, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    fail(ErrorCode::ProviderUnreachable, "cannot resolve " + host);
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, ::freeaddrinfo);

  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) continue;
    s.set_timeout(timeout_ms);
    if (::connect(s.fd_, ai->ai_addr, ai->ai_addrlen) == 0) {
      int one = 1;
      ::setsockopt(s.fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
  }
  sys_error(ErrorCode::ProviderUnreachable, "cannot connect to " + host + ":" + std::to_string(port));
}

Socket Socket::listen(const std::string& host, std::uint16_t port) {
  Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!s.valid()) sys_error(ErrorCode::Io, "socket");
  int one = 1;
  ::setsockopt(s.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    fail(ErrorCode::ConfigInvalid, "bind address must be an IPv4 literal");
  if (::bind(s.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    sys_error(ErrorCode::Io, "bind " + host + ":" + std::to_string(port));
  if (::listen(s.fd_, 128) != 0) sys_error(ErrorCode::Io, "listen");
  return s;
}

std::optional<Socket> Socket::accept() {
  for (;;) {
    const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR || errno == ECONNABORTED) continue;
    return std::nullopt;
  }
}

void Socket::set_timeout(int timeout_ms) {
  timeval tv{};
  tv.tv_sec = timeout_ms / 1000;
  tv.tv_usec = (timeout_ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

void Socket::write_all(std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_error(ErrorCode::ProviderUnreachable, "send");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::optional<std::string> Socket::read_line() {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (buffer_.size() > kMaxLineBytes) return std::nullopt;
    char chunk[16384];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return std::nullopt;
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

std::string Socket::peer_address() const {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getpeername(fd_, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return {};
  char buf[INET6_ADDRSTRLEN] = {};
  if (ss.ss_family == AF_INET)
    ::inet_ntop(AF_INET, &reinterpret_cast<sockaddr_in*>(&ss)->sin_addr, buf, sizeof buf);
  else if (ss.ss_family == AF_INET6)
    ::inet_ntop(AF_INET6, &reinterpret_cast<sockaddr_in6*>(&ss)->sin6_addr, buf, sizeof buf);
  return buf;
}

std::uint16_t Socket::local_port() const {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return 0;
  return ntohs(addr.sin_port);
}

// ---------------------------------------------------------------------------

namespace {

std::string client_hello_bytes(const std::string& party, const std::string& eph) {
  return "cardpay/hello/client/v1|" + party + "|" + eph;
}

std::string server_hello_bytes(const std::string& party, const std::string& eph,
                               const std::string& client_eph) {
  return "cardpay/hello/server/v1|" + party + "|" + eph + "|" + client_eph;
}

struct Ephemeral {
  std::array<std::uint8_t, crypto_kx_PUBLICKEYBYTES> pk{};
  std::array<std::uint8_t, crypto_kx_SECRETKEYBYTES> sk{};
  Ephemeral() {
    crypto::init();
    crypto_kx_keypair(pk.data(), sk.data());
  }
  ~Ephemeral() { sodium_memzero(sk.data(), sk.size()); }
};

std::array<std::uint8_t, crypto_kx_PUBLICKEYBYTES> parse_eph(const std::string& hex) {
  const crypto::Bytes b = crypto::from_hex(hex);
  if (b.size() != crypto_kx_PUBLICKEYBYTES) fail(ErrorCode::MalformedInput, "bad ephemeral key");
  std::array<std::uint8_t, crypto_kx_PUBLICKEYBYTES> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

std::array<std::uint8_t, crypto_secretbox_NONCEBYTES> frame_nonce(std::uint64_t counter) {
  std::array<std::uint8_t, crypto_secretbox_NONCEBYTES> n{};
  for (int i = 0; i < 8; ++i) n[i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return n;
}

}  // namespace

SecureSession SecureSession::client(Socket& socket, const KeyRegistry& registry,
                                    const std::string& expected_server) {
  Ephemeral eph;
  const std::string eph_hex = crypto::to_hex(eph.pk);
  const crypto::Bytes sig = registry.sign(client_hello_bytes(registry.own_id(), eph_hex));
  socket.write_all(canonical::encode(canonical::Map{{"v", kFormatVersion},
                                                    {"type", "HELLO"},
                                                    {"party", registry.own_id()},
                                                    {"eph", eph_hex},
                                                    {"sig", crypto::to_hex(sig)}}) +
                   "\n");
  const auto line = socket.read_line();
  if (!line) fail(ErrorCode::ProviderUnreachable, "handshake: no reply");
  const canonical::Value ack = canonical::decode(*line);
  const std::string& party = canonical::get_string(ack, "party");
  const std::string& server_eph = canonical::get_string(ack, "eph");
  if (canonical::get_string(ack, "type") != "HELLO_ACK" || party != expected_server)
    fail(ErrorCode::UnknownParty, "handshake: unexpected server identity");
  if (!registry.verify_key(party).verify(server_hello_bytes(party, server_eph, eph_hex),
                                         crypto::from_hex(canonical::get_string(ack, "sig"))))
    fail(ErrorCode::UnknownParty, "handshake: server signature does not verify");

  SecureSession s;
  s.peer_id_ = party;
  const auto server_pk = parse_eph(server_eph);
  if (crypto_kx_client_session_keys(s.rx_.data(), s.tx_.data(), eph.pk.data(), eph.sk.data(),
                                    server_pk.data()) != 0)
    fail(ErrorCode::MalformedInput, "handshake: bad server key");
  return s;
}

SecureSession SecureSession::server(Socket& socket, const KeyRegistry& registry) {
  const auto line = socket.read_line();
  if (!line) fail(ErrorCode::MalformedInput, "handshake: no hello");
  const canonical::Value hello = canonical::decode(*line);
  const std::string& party = canonical::get_string(hello, "party");
  const std::string& client_eph = canonical::get_string(hello, "eph");
  if (canonical::get_string(hello, "type") != "HELLO" || party == registry.own_id())
    fail(ErrorCode::UnknownParty, "handshake: bad hello");
  if (!registry.verify_key(party).verify(client_hello_bytes(party, client_eph),
                                         crypto::from_hex(canonical::get_string(hello, "sig"))))
    fail(ErrorCode::UnknownParty, "handshake: client signature does not verify");

  Ephemeral eph;
  const std::string eph_hex = crypto::to_hex(eph.pk);
  const crypto::Bytes sig = registry.sign(server_hello_bytes(registry.own_id(), eph_hex, client_eph));
  socket.write_all(canonical::encode(canonical::Map{{"v", kFormatVersion},
                                                    {"type", "HELLO_ACK"},
                                                    {"party", registry.own_id()},
                                                    {"eph", eph_hex},
                                                    {"sig", crypto::to_hex(sig)}}) +
                   "\n");

  SecureSession s;
  s.peer_id_ = party;
  const auto client_pk = parse_eph(client_eph);
  if (crypto_kx_server_session_keys(s.rx_.data(), s.tx_.data(), eph.pk.data(), eph.sk.data(),
                                    client_pk.data()) != 0)
    fail(ErrorCode::MalformedInput, "handshake: bad client key");
  return s;
}

void SecureSession::send(Socket& socket, std::string_view plaintext) {
  crypto::Bytes box(plaintext.size() + crypto_secretbox_MACBYTES);
  const auto nonce = frame_nonce(tx_counter_++);
  crypto_secretbox_easy(box.data(), reinterpret_cast<const unsigned char*>(plaintext.data()),
                        plaintext.size(), nonce.data(), tx_.data());
  socket.write_all(crypto::to_hex(box) + "\n");
}

std::optional<std::string> SecureSession::receive(Socket& socket) {
  const auto line = socket.read_line();
  if (!line) return std::nullopt;
  const crypto::Bytes box = crypto::from_hex(*line);
  if (box.size() < crypto_secretbox_MACBYTES) fail(ErrorCode::MalformedInput, "short frame");
  std::string plain(box.size() - crypto_secretbox_MACBYTES, '\0');
  const auto nonce = frame_nonce(rx_counter_++);
  if (crypto_secretbox_open_easy(reinterpret_cast<unsigned char*>(plain.data()), box.data(), box.size(),
                                 nonce.data(), rx_.data()) != 0)
    fail(ErrorCode::MalformedInput, "frame failed authentication");
  return plain;
}

// ---------------------------------------------------------------------------

TcpProviderTransport::TcpProviderTransport(std::string host, std::uint16_t port, KeyRegistry registry,
                                           std::string provider_id, TransportMode mode, int timeout_ms)
    : host_(std::move(host)),
      port_(port),
      registry_(std::move(registry)),
      provider_id_(std::move(provider_id)),
      mode_(mode),
      timeout_ms_(timeout_ms) {}

std::vector<std::string> TcpProviderTransport::exchange(const std::string& line) {
  Socket s = Socket::connect(host_, port_, timeout_ms_);
  try {
    if (mode_ == TransportMode::Secure) {
      SecureSession session = SecureSession::client(s, registry_, provider_id_);
      session.send(s, line);
      if (auto reply = session.receive(s)) return {*reply};
      return {};
    }
    s.write_all(line + "\n");
    if (auto reply = s.read_line()) return {*reply};
    return {};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ProviderUnreachable) throw;
    // Handshake or framing failures: the provider did not answer usefully.
    fail(ErrorCode::ProviderUnreachable, e.what());
  }
}

}  // namespace cardpay
