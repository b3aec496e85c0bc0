#include "cardpay/lifecycle.hpp"

#include <string>

#include "cardpay/error.hpp"

namespace cardpay {

std::string_view to_string(TxnState s) {
  switch (s) {
    case TxnState::Authorized: return "AUTHORIZED";
    case TxnState::Captured: return "CAPTURED";
    case TxnState::Voided: return "VOIDED";
    case TxnState::Settled: return "SETTLED";
    case TxnState::Declined: return "DECLINED";
  }
  return "?";
}

std::string_view to_string(TxnEvent e) {
  switch (e) {
    case TxnEvent::AuthorizeOk: return "authorize_ok";
    case TxnEvent::AuthorizeFail: return "authorize_fail";
    case TxnEvent::Capture: return "capture";
    case TxnEvent::Void: return "void";
    case TxnEvent::Expire: return "expire";
    case TxnEvent::Settle: return "settle";
  }
  return "?";
}

TxnState txn_state_from_string(std::string_view s) {
  for (const TxnState st : kAllTxnStates)
    if (to_string(st) == s) return st;
  fail(ErrorCode::MalformedInput, "unknown transaction state '" + std::string(s) + "'");
}

TxnState next_state(TxnState state, TxnEvent event) {
  if (state == TxnState::Authorized) {
    if (event == TxnEvent::Capture) return TxnState::Captured;
    if (event == TxnEvent::Void || event == TxnEvent::Expire) return TxnState::Voided;
  } else if (state == TxnState::Captured && event == TxnEvent::Settle) {
    return TxnState::Settled;
  }
  fail(ErrorCode::IllegalTransition,
       std::string(to_string(event)) + " not allowed in state " + std::string(to_string(state)));
}

TxnState initial_state(TxnEvent event) {
  if (event == TxnEvent::AuthorizeOk) return TxnState::Authorized;
  if (event == TxnEvent::AuthorizeFail) return TxnState::Declined;
  fail(ErrorCode::IllegalTransition, "not an authorization outcome");
}

}  // namespace cardpay
