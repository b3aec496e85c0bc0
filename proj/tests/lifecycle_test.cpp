#include <gtest/gtest.h>

#include <map>
#include <optional>
#include <set>

#include "cardpay/error.hpp"
#include "cardpay/lifecycle.hpp"

using namespace cardpay;

TEST(Lifecycle, ExhaustiveTableMatchesDeclaredTransitions) {
  const std::map<std::pair<TxnState, TxnEvent>, TxnState> allowed = {
      {{TxnState::Authorized, TxnEvent::Capture}, TxnState::Captured},
      {{TxnState::Authorized, TxnEvent::Void}, TxnState::Voided},
      {{TxnState::Authorized, TxnEvent::Expire}, TxnState::Voided},
      {{TxnState::Captured, TxnEvent::Settle}, TxnState::Settled},
  };
  int cells = 0;
  for (TxnState s : kAllTxnStates) {
    for (TxnEvent e : kAllTxnEvents) {
      ++cells;
      auto it = allowed.find({s, e});
      if (it != allowed.end()) {
        EXPECT_EQ(next_state(s, e), it->second);
      } else {
        try {
          next_state(s, e);
          ADD_FAILURE() << to_string(s) << " + " << to_string(e) << " should be illegal";
        } catch (const Error& err) {
          EXPECT_EQ(err.code(), ErrorCode::IllegalTransition);
        }
      }
    }
  }
  EXPECT_EQ(cells, 30);
}

TEST(Lifecycle, NoPathFromVoidedOrDeclinedToSettled) {
  // Breadth-first over the transition relation.
  for (TxnState start : {TxnState::Voided, TxnState::Declined}) {
    std::vector<TxnState> frontier{start};
    std::set<TxnState> seen{start};
    while (!frontier.empty()) {
      const TxnState s = frontier.back();
      frontier.pop_back();
      for (TxnEvent e : kAllTxnEvents) {
        try {
          const TxnState n = next_state(s, e);
          if (seen.insert(n).second) frontier.push_back(n);
        } catch (const Error&) {
        }
      }
    }
    EXPECT_FALSE(seen.contains(TxnState::Settled));
  }
}

TEST(Lifecycle, InitialStates) {
  EXPECT_EQ(initial_state(TxnEvent::AuthorizeOk), TxnState::Authorized);
  EXPECT_EQ(initial_state(TxnEvent::AuthorizeFail), TxnState::Declined);
  EXPECT_THROW(initial_state(TxnEvent::Capture), Error);
}
