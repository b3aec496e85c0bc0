#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cardpay {

enum class ErrorCode {
  UnencodableValue,
  MalformedInput,
  NonCanonicalInput,
  InvalidAmount,
  MissingKey,
  UnknownParty,
  IllegalTransition,
  UnknownCard,
  SecretMismatch,
  AlreadyActivated,
  WeakPassword,
  AuthFailure,
  UnknownHold,
  HoldExpired,
  RecordMismatch,
  BadMerchantSignature,
  UnknownMerchant,
  MalformedDemand,
  UnknownItem,
  PaymentDeclined,
  ProviderUnreachable,
  BadProviderSignature,
  BadReportSignature,
  UnknownPeriod,
  RateOutOfRange,
  DenominationOutOfRange,
  MalformedBatchFile,
  DuplicateCardNumber,
  ConfigInvalid,
  Io,
};

std::string_view to_string(ErrorCode code);

// All failures raised by the library carry a machine-readable code. `detail`
// narrows the code where the contract distinguishes sub-cases, e.g.
// PaymentDeclined("insufficient_funds").
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string detail = {}) {
  throw Error(code, message, std::move(detail));
}

}  // namespace cardpay

namespace cardpay {
// Inverse of to_string; unknown names map to MalformedInput.
ErrorCode error_code_from_string(std::string_view name);
}  // namespace cardpay
