#include "cardpay/error.hpp"

namespace cardpay {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnencodableValue: return "UnencodableValue";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::NonCanonicalInput: return "NonCanonicalInput";
    case ErrorCode::InvalidAmount: return "InvalidAmount";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::UnknownParty: return "UnknownParty";
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::UnknownCard: return "UnknownCard";
    case ErrorCode::SecretMismatch: return "SecretMismatch";
    case ErrorCode::AlreadyActivated: return "AlreadyActivated";
    case ErrorCode::WeakPassword: return "WeakPassword";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::UnknownHold: return "UnknownHold";
    case ErrorCode::HoldExpired: return "HoldExpired";
    case ErrorCode::RecordMismatch: return "RecordMismatch";
    case ErrorCode::BadMerchantSignature: return "BadMerchantSignature";
    case ErrorCode::UnknownMerchant: return "UnknownMerchant";
    case ErrorCode::MalformedDemand: return "MalformedDemand";
    case ErrorCode::UnknownItem: return "UnknownItem";
    case ErrorCode::PaymentDeclined: return "PaymentDeclined";
    case ErrorCode::ProviderUnreachable: return "ProviderUnreachable";
    case ErrorCode::BadProviderSignature: return "BadProviderSignature";
    case ErrorCode::BadReportSignature: return "BadReportSignature";
    case ErrorCode::UnknownPeriod: return "UnknownPeriod";
    case ErrorCode::RateOutOfRange: return "RateOutOfRange";
    case ErrorCode::DenominationOutOfRange: return "DenominationOutOfRange";
    case ErrorCode::MalformedBatchFile: return "MalformedBatchFile";
    case ErrorCode::DuplicateCardNumber: return "DuplicateCardNumber";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace cardpay

namespace cardpay {

ErrorCode error_code_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::Io); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  return ErrorCode::MalformedInput;
}

}  // namespace cardpay
