#pragma once

// Concurrency check over the real services: many checkout workers racing
// against one card through a loopback ProviderServer. Only safety is
// checked here, not byte-determinism.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>

#include "cardpay/canonical.hpp"

namespace cardpay {

struct StressConfig {
  std::size_t server_threads = 8;
  std::size_t workers = 32;
  std::int64_t card_balance = 1000;
  std::int64_t request_amount = 100;
  // Checkouts per worker; 0 means card_balance / request_amount, so the
  // workers together ask for `workers` times what the card holds.
  std::size_t requests_per_worker = 0;
  bool secure = true;
};

struct StressReport {
  std::size_t attempts = 0;
  std::size_t captures = 0;
  std::int64_t expected_captures = 0;
  std::int64_t final_balance = 0;
  std::uint64_t negative_balance_events = 0;
  std::map<std::string, std::size_t> failures;  // reason -> count

  bool ok() const;
  canonical::Value to_value() const;
};

StressReport run_stress(const StressConfig& config);

}  // namespace cardpay
