#pragma once

#include <string_view>

namespace cardpay {

enum class TxnState { Authorized, Captured, Voided, Settled, Declined };
enum class TxnEvent { AuthorizeOk, AuthorizeFail, Capture, Void, Expire, Settle };

inline constexpr TxnState kAllTxnStates[] = {TxnState::Authorized, TxnState::Captured,
                                             TxnState::Voided, TxnState::Settled,
                                             TxnState::Declined};
inline constexpr TxnEvent kAllTxnEvents[] = {TxnEvent::AuthorizeOk, TxnEvent::AuthorizeFail,
                                             TxnEvent::Capture,     TxnEvent::Void,
                                             TxnEvent::Expire,      TxnEvent::Settle};

std::string_view to_string(TxnState s);
std::string_view to_string(TxnEvent e);
TxnState txn_state_from_string(std::string_view s);

// Allowed transitions:
//   AUTHORIZED --capture--> CAPTURED
//   AUTHORIZED --void|expire--> VOIDED
//   CAPTURED --settle--> SETTLED
// Everything else throws IllegalTransition. authorize_ok/authorize_fail decide
// the initial state (see initial_state) and are never transitions.
TxnState next_state(TxnState state, TxnEvent event);

// AUTHORIZED for authorize_ok, DECLINED for authorize_fail.
TxnState initial_state(TxnEvent event);

}  // namespace cardpay
