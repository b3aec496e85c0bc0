#include "cardpay/issuance.hpp"

#include <set>

#include "cardpay/card.hpp"
#include "cardpay/crypto.hpp"
#include "cardpay/record.hpp"

namespace cardpay {

using canonical::get_int;
using canonical::get_string;
using canonical::List;
using canonical::Map;
using canonical::Value;

namespace {

std::string secret_from_bytes(const std::uint8_t* bytes) {
  std::string s(kSecretLength, '0');
  // 256 is a multiple of 32, so reducing each byte is unbiased.
  for (std::size_t i = 0; i < kSecretLength; ++i) s[i] = kSecretAlphabet[bytes[i] % 32];
  return s;
}

}  // namespace

Value CardBatch::to_value() const {
  List list;
  for (const auto& c : cards) list.push_back(Map{{"card_number", c.card_number}, {"secret", c.secret}});
  return Map{
      {"v", kFormatVersion},
      {"kind", "card_batch"},
      {"provider_id", provider_id},
      {"denomination", denomination.minor},
      {"batch_id", static_cast<std::int64_t>(batch_id)},
      {"issued_at", issued_at},
      {"cards", std::move(list)},
  };
}

CardBatch CardBatch::from_value(const Value& v) {
  if (get_int(v, "v") != kFormatVersion || get_string(v, "kind") != "card_batch")
    fail(ErrorCode::MalformedInput, "not a card batch");
  CardBatch b;
  b.provider_id = get_string(v, "provider_id");
  b.denomination = Money{get_int(v, "denomination")};
  const std::int64_t id = get_int(v, "batch_id");
  if (id < 0 || id > kMaxBatchId) fail(ErrorCode::MalformedInput, "batch id out of range");
  b.batch_id = static_cast<std::uint32_t>(id);
  b.issued_at = get_int(v, "issued_at");
  for (const auto& c : v.at("cards").as_list())
    b.cards.push_back({get_string(c, "card_number"), get_string(c, "secret")});
  return b;
}

CardBatch issue_batch(const std::string& provider_id, Money denomination, std::size_t count,
                      const IssueOptions& options) {
  if (denomination < kMinDenomination || denomination > kMaxDenomination)
    fail(ErrorCode::DenominationOutOfRange, "denomination must be within 100..100000 minor units");
  if (!valid_provider_id(provider_id)) fail(ErrorCode::ConfigInvalid, "provider id must be 1-6 digits");
  if (count > kCardsPerBatch) fail(ErrorCode::ConfigInvalid, "at most 10^6 cards per batch");

  crypto::Bytes stream;
  std::uint32_t batch_id = 0;
  if (options.seed) {
    const crypto::Seed seed = crypto::seed_from_string("cardpay/issue/v1|" + provider_id + "|" +
                                                       std::to_string(denomination.minor) + "|" +
                                                       *options.seed);
    stream = crypto::deterministic_bytes(seed, 4 + count * kSecretLength);
  } else {
    stream = crypto::random_bytes(4 + count * kSecretLength);
  }
  batch_id = options.batch_id.value_or(
      (static_cast<std::uint32_t>(stream[0]) << 24 | static_cast<std::uint32_t>(stream[1]) << 16 |
       static_cast<std::uint32_t>(stream[2]) << 8 | stream[3]) %
      (kMaxBatchId + 1));
  if (batch_id > kMaxBatchId) fail(ErrorCode::ConfigInvalid, "batch id out of range");

  CardBatch batch;
  batch.provider_id = provider_id;
  batch.denomination = denomination;
  batch.batch_id = batch_id;
  batch.issued_at = options.issued_at;
  batch.cards.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t serial = static_cast<std::uint64_t>(batch_id) * kCardsPerBatch + i;
    batch.cards.push_back({make_card_number(provider_id, serial),
                           secret_from_bytes(stream.data() + 4 + i * kSecretLength)});
  }
  return batch;
}

void export_batch(const CardBatch& batch, const std::filesystem::path& path) {
  canonical::write_file(path, batch.to_value());
}

CardBatch load_batch(const std::filesystem::path& path) {
  try {
    CardBatch b = CardBatch::from_value(canonical::read_file(path));
    if (auto problems = verify_batch(b); !problems.empty())
      fail(ErrorCode::MalformedBatchFile, problems.front());
    return b;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedBatchFile || e.code() == ErrorCode::Io) throw;
    fail(ErrorCode::MalformedBatchFile, e.what());
  }
}

std::vector<std::string> verify_batch(const CardBatch& batch) {
  std::vector<std::string> problems;
  if (!valid_provider_id(batch.provider_id)) problems.push_back("invalid provider id");
  if (batch.denomination < kMinDenomination || batch.denomination > kMaxDenomination)
    problems.push_back("denomination out of range");
  std::set<std::string> seen;
  for (const auto& c : batch.cards) {
    if (!card_number_matches_provider(c.card_number, batch.provider_id))
      problems.push_back("bad card number " + c.card_number);
    if (!seen.insert(c.card_number).second) problems.push_back("duplicate card number " + c.card_number);
    if (c.secret.size() != kSecretLength ||
        c.secret.find_first_not_of(kSecretAlphabet) != std::string::npos)
      problems.push_back("malformed secret for " + c.card_number);
  }
  return problems;
}

}  // namespace cardpay
