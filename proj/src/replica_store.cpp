#include "cardpay/replica_store.hpp"

namespace cardpay {

ReplicaStore::InsertResult ReplicaStore::insert(const TransactionRecord& record,
                                                const KeyRegistry& registry) {
  if (record.state != TxnState::Captured)
    fail(ErrorCode::RecordMismatch, "replicas must be CAPTURED");
  if (verify_record(record, registry) != RecordVerdict::Valid)
    fail(ErrorCode::RecordMismatch, "replica signatures do not verify");
  auto it = records_.find(record.txn_id);
  if (it != records_.end()) {
    TransactionRecord existing = it->second;
    existing.state = record.state;
    if (canonical::encode(existing.to_value()) != canonical::encode(record.to_value()))
      fail(ErrorCode::RecordMismatch, "txn_id already holds a different record");
    return InsertResult::AlreadyPresent;
  }
  records_.emplace(record.txn_id, record);
  return InsertResult::Inserted;
}

void ReplicaStore::restore(TransactionRecord record) {
  const std::string id = record.txn_id;
  records_.insert_or_assign(id, std::move(record));
}

const TransactionRecord* ReplicaStore::find(const std::string& txn_id) const {
  auto it = records_.find(txn_id);
  return it == records_.end() ? nullptr : &it->second;
}

void ReplicaStore::mark_settled(const std::string& txn_id) {
  auto it = records_.find(txn_id);
  if (it == records_.end()) fail(ErrorCode::RecordMismatch, "no replica " + txn_id);
  it->second.state = next_state(it->second.state, TxnEvent::Settle);
}

}  // namespace cardpay
