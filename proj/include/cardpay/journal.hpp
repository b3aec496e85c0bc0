#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardpay/canonical.hpp"

namespace cardpay {

// Append-only log of canonical entries with an optional snapshot. Each line is
// {"entry":..., "seq":n}. A snapshot records the state as of some seq; replay
// applies only entries with a greater seq, so a crash between writing the
// snapshot and truncating the log is harmless. A torn final line (crash during
// append, never acknowledged) is discarded on recovery.
class Journal {
 public:
  Journal(const std::filesystem::path& dir, const std::string& name, bool sync);
  ~Journal();
  Journal(const Journal&) = delete;
  Journal& operator=(const Journal&) = delete;

  struct Recovered {
    std::optional<canonical::Value> snapshot;
    std::vector<canonical::Value> entries;
  };
  Recovered recover();

  // Returns once the entry has reached the OS (and the disk, with sync on).
  void append(const canonical::Value& entry);
  void write_snapshot(const canonical::Value& state);

  std::uint64_t seq() const { return seq_; }
  std::uint64_t entries_since_snapshot() const { return since_snapshot_; }

 private:
  void open_log();

  std::filesystem::path log_path_;
  std::filesystem::path snapshot_path_;
  bool sync_;
  int fd_ = -1;
  int lock_fd_ = -1;
  std::uint64_t seq_ = 0;
  std::uint64_t since_snapshot_ = 0;
};

}  // namespace cardpay
