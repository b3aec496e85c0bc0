#include <gtest/gtest.h>

#include <set>

#include "cardpay/card.hpp"
#include "cardpay/error.hpp"
#include "cardpay/issuance.hpp"
#include "support.hpp"

using namespace cardpay;
using cardpay::testing::Rng;

namespace {

// Reference mod-10 check, written from the textbook definition.
bool oracle_luhn(const std::string& digits) {
  int sum = 0;
  bool dbl = false;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    int d = *it - '0';
    if (dbl) {
      d *= 2;
      if (d > 9) d -= 9;
    }
    sum += d;
    dbl = !dbl;
  }
  return sum % 10 == 0;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

}  // namespace

TEST(Luhn, KnownNumbers) {
  EXPECT_TRUE(luhn_valid("79927398713"));
  EXPECT_FALSE(luhn_valid("79927398710"));
  EXPECT_TRUE(luhn_valid("4111111111111111"));
  EXPECT_EQ(luhn_check_digit("7992739871"), 3);
}

TEST(Luhn, AgreesWithOracleOnRandomStrings) {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    std::string s(2 + rng.below(19), '0');
    for (char& c : s) c = static_cast<char>('0' + rng.below(10));
    EXPECT_EQ(luhn_valid(s), oracle_luhn(s)) << s;
  }
}

TEST(CardNumber, DetectsEverySingleDigitSubstitution) {
  Rng rng(9);
  for (int n = 0; n < 20; ++n) {
    const std::string number = make_card_number("4242", rng.below(kMaxBatchId * kCardsPerBatch));
    ASSERT_TRUE(luhn_valid(number));
    for (std::size_t pos = 0; pos < number.size(); ++pos) {
      for (char d = '0'; d <= '9'; ++d) {
        if (d == number[pos]) continue;
        std::string m = number;
        m[pos] = d;
        EXPECT_FALSE(luhn_valid(m)) << m;
      }
    }
  }
}

TEST(CardNumber, FormatIsProviderSerialCheck) {
  const std::string n = make_card_number("4242", 12345);
  EXPECT_EQ(n.size(), 4u + 11u + 1u);
  EXPECT_EQ(n.substr(0, 4), "4242");
  EXPECT_EQ(n.substr(4, 11), "00000012345");
  EXPECT_TRUE(card_number_matches_provider(n, "4242"));
  EXPECT_FALSE(card_number_matches_provider(n, "424"));
  EXPECT_FALSE(valid_provider_id(""));
  EXPECT_FALSE(valid_provider_id("1234567"));
  EXPECT_FALSE(valid_provider_id("12a"));
}

TEST(Issuance, OneDollarCardIsTheLowerBound) {
  const CardBatch b = issue_batch("4242", Money{100}, 1);
  ASSERT_EQ(b.cards.size(), 1u);
  EXPECT_EQ(b.denomination, Money{100});
  EXPECT_EQ(code_of([] { issue_batch("4242", Money{99}, 1); }), ErrorCode::DenominationOutOfRange);
  EXPECT_EQ(code_of([] { issue_batch("4242", Money{100001}, 1); }), ErrorCode::DenominationOutOfRange);
  EXPECT_NO_THROW(issue_batch("4242", Money{100000}, 1));
}

TEST(Issuance, EmptyBatch) { EXPECT_TRUE(issue_batch("4242", Money{500}, 0).cards.empty()); }

TEST(Issuance, SeededBatchesAreDeterministicAndDisjoint) {
  IssueOptions a;
  a.seed = "alpha";
  IssueOptions b;
  b.seed = "beta";
  const CardBatch x = issue_batch("4242", Money{1000}, 10000, a);
  EXPECT_EQ(canonical::encode(x.to_value()), canonical::encode(issue_batch("4242", Money{1000}, 10000, a).to_value()));
  const CardBatch y = issue_batch("4242", Money{1000}, 10000, b);
  std::set<std::string> secrets;
  for (const auto& c : x.cards) secrets.insert(c.secret);
  for (const auto& c : y.cards) EXPECT_FALSE(secrets.contains(c.secret));
}

TEST(Issuance, HundredThousandSecretsWithoutDuplicates) {
  const CardBatch b = issue_batch("4242", Money{1000}, 100000);
  std::set<std::string> secrets;
  for (const auto& c : b.cards) {
    EXPECT_EQ(c.secret.size(), kSecretLength);
    for (char ch : c.secret) EXPECT_NE(kSecretAlphabet.find(ch), std::string_view::npos);
    secrets.insert(c.secret);
  }
  EXPECT_EQ(secrets.size(), b.cards.size());
}

TEST(Issuance, ExportLoadRoundTrip) {
  TempDir dir;
  IssueOptions o;
  o.seed = "rt";
  const CardBatch b = issue_batch("4242", Money{2500}, 50, o);
  export_batch(b, dir.path() / "batch");
  EXPECT_EQ(load_batch(dir.path() / "batch"), b);
}

TEST(Issuance, TruncatedFileIsMalformed) {
  TempDir dir;
  export_batch(issue_batch("4242", Money{2500}, 5), dir.path() / "batch");
  std::filesystem::resize_file(dir.path() / "batch", 100);
  EXPECT_EQ(code_of([&] { load_batch(dir.path() / "batch"); }), ErrorCode::MalformedBatchFile);
}

TEST(Issuance, VerifyFindsBadCheckDigitsAndDuplicates) {
  CardBatch b = issue_batch("4242", Money{2500}, 3);
  EXPECT_TRUE(verify_batch(b).empty());
  b.cards[1].card_number.back() = b.cards[1].card_number.back() == '0' ? '1' : '0';
  EXPECT_FALSE(verify_batch(b).empty());
  CardBatch d = issue_batch("4242", Money{2500}, 3);
  d.cards[2] = d.cards[0];
  EXPECT_FALSE(verify_batch(d).empty());
}

TEST(Issuance, SecondIngestReportsAllDuplicates) {
  cardpay::testing::ProviderHarness h;
  const CardBatch b = issue_batch(cardpay::testing::kProvider, Money{500}, 20);
  EXPECT_EQ(h.provider->load_cards(b).loaded, 20u);
  const std::string before = h.provider->state_digest();
  const LoadReport again = h.provider->load_cards(b);
  EXPECT_EQ(again.loaded, 0u);
  EXPECT_EQ(again.duplicates.size(), 20u);
  EXPECT_EQ(h.provider->state_digest(), before);
  for (const auto& c : b.cards) EXPECT_EQ(h.provider->find_card(c.card_number)->state, CardState::Issued);
}
