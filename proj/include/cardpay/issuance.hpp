#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cardpay/canonical.hpp"
#include "cardpay/money.hpp"

namespace cardpay {

inline constexpr std::size_t kSecretLength = 26;
inline constexpr std::string_view kSecretAlphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
inline constexpr std::uint32_t kMaxBatchId = 99999;
inline constexpr std::uint64_t kCardsPerBatch = 1000000;

struct IssuedCard {
  std::string card_number;
  std::string secret;  // printed on the card; plaintext in batch files only
  friend bool operator==(const IssuedCard&, const IssuedCard&) = default;
};

// A print run of cards sharing one denomination. Serial numbers are
// batch_id * 10^6 + index, so batches never collide on card numbers.
struct CardBatch {
  std::string provider_id;
  Money denomination;
  std::uint32_t batch_id = 0;
  std::int64_t issued_at = 0;
  std::vector<IssuedCard> cards;

  canonical::Value to_value() const;
  static CardBatch from_value(const canonical::Value& v);
  friend bool operator==(const CardBatch&, const CardBatch&) = default;
};

struct IssueOptions {
  // When set, the batch is a pure function of the inputs (simulation use).
  // Otherwise secrets come from the system CSPRNG.
  std::optional<std::string> seed;
  std::optional<std::uint32_t> batch_id;
  std::int64_t issued_at = 0;
};

CardBatch issue_batch(const std::string& provider_id, Money denomination, std::size_t count,
                      const IssueOptions& options = {});

void export_batch(const CardBatch& batch, const std::filesystem::path& path);
// Throws MalformedBatchFile for anything that is not a well-formed batch.
CardBatch load_batch(const std::filesystem::path& path);

// Problems found in a batch (bad check digits, duplicates, range); empty if sound.
std::vector<std::string> verify_batch(const CardBatch& batch);

}  // namespace cardpay
