// merchant serve | demand | apply-report | ledger export

#include <iostream>

#include "cardpay/canonical.hpp"
#include "cardpay/config.hpp"
#include "cardpay/merchant.hpp"
#include "cardpay/merchant_http.hpp"
#include "cardpay/transport.hpp"
#include "cli_util.hpp"

using namespace cardpay;

namespace {

void print_summary(const SettlementSummary& s) {
  std::cout << "period " << s.period.key() << ": settled " << s.settled << ", matched "
            << format_dollars(s.matched_total) << ", fee " << format_dollars(s.fee) << ", payout "
            << format_dollars(s.payout) << "\n";
  for (const auto& d : s.discrepancies) std::cout << "  " << to_string(d.kind) << " " << d.txn_id << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Merchant service"};
  app.require_subcommand(1);
  std::string config_path = "merchant.conf";
  app.add_option("--config", config_path, "merchant config file");

  auto* serve = app.add_subcommand("serve", "serve the checkout endpoints");
  serve->add_option("--config", config_path, "merchant config file");

  std::string period_text, out_path;
  auto* demand = app.add_subcommand("demand", "settle a period with the provider");
  demand->add_option("--config", config_path, "merchant config file");
  demand->add_option("--period", period_text, "<start>..<end>")->required();
  demand->add_option("--out", out_path, "write the signed demand to a file instead of sending it");

  std::string report_path;
  auto* apply = app.add_subcommand("apply-report", "apply a settlement report received out of band");
  apply->add_option("--config", config_path, "merchant config file");
  apply->add_option("report", report_path)->required();

  std::string export_path;
  auto* ledger = app.add_subcommand("ledger", "ledger operations");
  auto* ledger_export = ledger->add_subcommand("export", "write the signed ledger");
  ledger->require_subcommand(1);
  ledger_export->add_option("--config", config_path, "merchant config file");
  ledger_export->add_option("path", export_path)->required();

  return cli::guarded_main(app, argc, argv, [&]() -> int {
    MerchantFileConfig cfg = load_merchant_config(config_path);
    cfg.service.log = [](const std::string& line) { std::cerr << "merchant: " << line << "\n"; };
    const KeyRegistry registry = cfg.registry();
    const Catalog catalog = cfg.catalog.empty() ? Catalog{} : Catalog::load(cfg.catalog);
    auto transport = std::make_shared<TcpProviderTransport>(cfg.provider_host, cfg.provider_port, registry,
                                                            cfg.service.provider_id, cfg.mode);

    if (*serve) cli::block_stop_signals();
    MerchantService merchant(cfg.service, registry, catalog, transport);

    if (*serve) {
      MerchantHttpServer http(merchant, cfg.http_bind, cfg.http_port, cfg.static_dir);
      http.start();
      std::cerr << "merchant " << cfg.service.merchant_id << " serving http on " << cfg.http_bind << ":"
                << http.port() << "\n";
      cli::wait_for_signal();
      http.stop();
      return 0;
    }
    if (*demand) {
      const Period period = Period::parse(period_text);
      if (!out_path.empty()) {
        const SettlementDemand d = merchant.build_demand(period);
        canonical::write_file(out_path, d.to_value());
        std::cout << d.records.size() << " records, total " << format_dollars(d.total()) << "\n";
        return 0;
      }
      print_summary(merchant.settle(period));
      return 0;
    }
    if (*apply) {
      print_summary(merchant.apply_settlement(SettlementReport::from_value(canonical::read_file(report_path))));
      return 0;
    }
    if (*ledger_export) {
      merchant.export_ledger(export_path);
      std::cout << merchant.ledger().size() << " records written\n";
      return 0;
    }
    return 2;
  });
}
