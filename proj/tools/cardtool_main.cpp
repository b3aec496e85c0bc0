// cardtool issue | verify | keygen

#include <iostream>

#include "cardpay/crypto.hpp"
#include "cardpay/issuance.hpp"
#include "cli_util.hpp"

using namespace cardpay;

int main(int argc, char** argv) {
  CLI::App app{"Prepaid card issuance"};
  app.require_subcommand(1);

  std::string provider, seed, out;
  std::int64_t denomination = 0;
  std::size_t count = 0;
  std::uint32_t batch_id = 0;
  auto* issue = app.add_subcommand("issue", "generate a batch of cards");
  issue->add_option("--provider", provider)->required();
  issue->add_option("--denomination", denomination, "minor units")->required();
  issue->add_option("--count", count)->required();
  issue->add_option("--seed", seed, "reproducible batch (testing only)");
  auto* batch_opt = issue->add_option("--batch", batch_id, "batch id, 0..99999")->check(CLI::Range(0, 99999));
  issue->add_option("--out", out)->required();

  std::string path;
  auto* verify = app.add_subcommand("verify", "check a batch file");
  verify->add_option("path", path)->required();

  auto* keygen = app.add_subcommand("keygen", "print a fresh signing seed and its public key");

  return cli::guarded_main(app, argc, argv, [&]() -> int {
    if (*issue) {
      IssueOptions opt;
      if (!seed.empty()) opt.seed = seed;
      if (*batch_opt) opt.batch_id = batch_id;
      opt.issued_at = std::chrono::duration_cast<std::chrono::seconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
      const CardBatch b = issue_batch(provider, Money{denomination}, count, opt);
      export_batch(b, out);
      std::cout << b.cards.size() << " cards of " << format_dollars(b.denomination) << " in batch "
                << b.batch_id << "\n";
      return 0;
    }
    if (*verify) {
      const CardBatch b = load_batch(path);
      std::cout << "ok: " << b.cards.size() << " cards of " << format_dollars(b.denomination) << "\n";
      return 0;
    }
    if (*keygen) {
      const crypto::SigningKey k = crypto::SigningKey::generate();
      std::cout << "signing_seed " << k.seed_hex() << "\npublic_key   " << k.public_key().hex() << "\n";
      return 0;
    }
    return 2;
  });
}
