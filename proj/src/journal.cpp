#include "cardpay/journal.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cardpay {

namespace {

[[noreturn]] void io_error(const std::string& what) {
  fail(ErrorCode::Io, what + ": " + std::strerror(errno));
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_error("journal write");
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

Journal::Journal(const std::filesystem::path& dir, const std::string& name, bool sync)
    : log_path_(dir / (name + ".journal")), snapshot_path_(dir / (name + ".snapshot")), sync_(sync) {
  std::filesystem::create_directories(dir);
  // One writer per data directory; a second process fails fast instead of
  // interleaving entries.
  const std::filesystem::path lock_path = dir / (name + ".lock");
  lock_fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0600);
  if (lock_fd_ < 0) io_error("open " + lock_path.string());
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    fail(ErrorCode::Io, "data directory " + dir.string() + " is in use by another process");
  }
}

Journal::~Journal() {
  if (fd_ >= 0) ::close(fd_);
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

void Journal::open_log() {
  fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
  if (fd_ < 0) io_error("open " + log_path_.string());
}

Journal::Recovered Journal::recover() {
  Recovered out;
  std::uint64_t snap_seq = 0;
  if (std::filesystem::exists(snapshot_path_)) {
    const canonical::Value snap = canonical::read_file(snapshot_path_);
    snap_seq = static_cast<std::uint64_t>(canonical::get_int(snap, "seq"));
    out.snapshot = snap.at("state");
  }
  seq_ = snap_seq;

  std::string data;
  if (std::ifstream f{log_path_, std::ios::binary}) {
    std::ostringstream ss;
    ss << f.rdbuf();
    data = ss.str();
  }

  std::size_t pos = 0;
  std::size_t valid_end = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail
    const std::string_view line(data.data() + pos, nl - pos);
    canonical::Value rec;
    try {
      rec = canonical::decode(line);
    } catch (const Error&) {
      if (nl + 1 == data.size()) break;
      throw;
    }
    const auto seq = static_cast<std::uint64_t>(canonical::get_int(rec, "seq"));
    if (seq > snap_seq) {
      if (seq != seq_ + 1) fail(ErrorCode::MalformedInput, "journal sequence gap");
      out.entries.push_back(rec.at("entry"));
      seq_ = seq;
      ++since_snapshot_;
    }
    pos = nl + 1;
    valid_end = pos;
  }

  if (valid_end != data.size()) {
    // Drop the torn tail so later appends start on a clean line.
    if (::truncate(log_path_.c_str(), static_cast<off_t>(valid_end)) != 0) io_error("truncate journal");
  }
  open_log();
  return out;
}

void Journal::append(const canonical::Value& entry) {
  if (fd_ < 0) open_log();
  const std::uint64_t next = seq_ + 1;
  std::string line = canonical::encode(canonical::Map{
      {"seq", static_cast<std::int64_t>(next)},
      {"entry", entry},
  });
  line.push_back('\n');
  write_all(fd_, line);
  if (sync_ && ::fdatasync(fd_) != 0) io_error("fdatasync journal");
  seq_ = next;
  ++since_snapshot_;
}

void Journal::write_snapshot(const canonical::Value& state) {
  canonical::write_file(snapshot_path_, canonical::Map{
                                            {"seq", static_cast<std::int64_t>(seq_)},
                                            {"state", state},
                                        });
  if (sync_) {
    const int dfd = ::open(snapshot_path_.c_str(), O_RDONLY | O_CLOEXEC);
    if (dfd >= 0) {
      ::fsync(dfd);
      ::close(dfd);
    }
  }
  if (fd_ >= 0 && ::ftruncate(fd_, 0) != 0) io_error("truncate journal");
  since_snapshot_ = 0;
}

}  // namespace cardpay
