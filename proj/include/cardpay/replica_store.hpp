#pragma once

#include <map>
#include <string>
#include <vector>

#include "cardpay/keys.hpp"
#include "cardpay/record.hpp"

namespace cardpay {

// Provider-side copies of fully countersigned records, keyed by txn_id.
class ReplicaStore {
 public:
  enum class InsertResult { Inserted, AlreadyPresent };

  // Accepts only CAPTURED records whose two signatures verify. Re-inserting
  // the byte-identical record is a no-op; a different record under the same
  // txn_id throws RecordMismatch.
  InsertResult insert(const TransactionRecord& record, const KeyRegistry& registry);
  // Used by journal replay; the record was verified when first inserted.
  void restore(TransactionRecord record);

  const TransactionRecord* find(const std::string& txn_id) const;
  void mark_settled(const std::string& txn_id);

  std::size_t size() const { return records_.size(); }
  const std::map<std::string, TransactionRecord>& records() const { return records_; }

 private:
  std::map<std::string, TransactionRecord> records_;
};

}  // namespace cardpay
