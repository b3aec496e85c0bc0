// provider serve | expire-holds | load-cards | settle

#include <iostream>

#include "cardpay/canonical.hpp"
#include "cardpay/config.hpp"
#include "cardpay/issuance.hpp"
#include "cardpay/provider.hpp"
#include "cardpay/transport.hpp"
#include "cli_util.hpp"

using namespace cardpay;

int main(int argc, char** argv) {
  CLI::App app{"Prepaid card provider service"};
  app.require_subcommand(1);
  std::string config_path = "provider.conf";
  app.add_option("--config", config_path, "provider config file");

  auto* serve = app.add_subcommand("serve", "serve the envelope protocol");
  serve->add_option("--config", config_path, "provider config file");

  auto* expire = app.add_subcommand("expire-holds", "release holds past their expiry");
  expire->add_option("--config", config_path, "provider config file");

  std::string batch_path;
  auto* load = app.add_subcommand("load-cards", "load an issued card batch into the sold-cards store");
  load->add_option("--config", config_path, "provider config file");
  load->add_option("batch-file", batch_path)->required();

  std::string merchant_id, period_text, out_path, demand_path;
  auto* settle = app.add_subcommand("settle", "answer a settlement demand or export an existing report");
  settle->add_option("--config", config_path, "provider config file");
  settle->add_option("--merchant", merchant_id)->required();
  settle->add_option("--period", period_text, "<start>..<end>")->required();
  settle->add_option("--out", out_path)->required();
  settle->add_option("--demand", demand_path, "signed demand file from the merchant");

  return cli::guarded_main(app, argc, argv, [&]() -> int {
    const ProviderFileConfig cfg = load_provider_config(config_path);

    if (*serve) {
      cli::block_stop_signals();
      ProviderService service(cfg.service, cfg.registry());
      ProviderServer server(service, cfg.server);
      server.start();
      std::cerr << "provider " << cfg.service.provider_id << " listening on " << cfg.server.bind << ":"
                << server.port() << "\n";
      cli::wait_for_signal();
      server.stop();
      return 0;
    }

    ProviderService service(cfg.service, cfg.registry());
    if (*expire) {
      std::cout << service.expire_holds(service.now()) << " holds released\n";
      return 0;
    }
    if (*load) {
      const LoadReport r = service.load_cards(load_batch(batch_path));
      std::cout << r.loaded << " cards loaded";
      if (!r.duplicates.empty()) std::cout << ", " << r.duplicates.size() << " already present";
      std::cout << "\n";
      return r.duplicates.empty() ? 0 : 1;
    }
    if (*settle) {
      const Period period = Period::parse(period_text);
      SettlementReport report;
      if (!demand_path.empty()) {
        const SettlementDemand demand = SettlementDemand::from_value(canonical::read_file(demand_path));
        if (demand.merchant_id != merchant_id || demand.period != period)
          fail(ErrorCode::MalformedDemand, "demand does not match --merchant/--period");
        report = service.handle_settlement(demand);
      } else if (auto existing = service.settled_report(merchant_id, period)) {
        report = *existing;
      } else {
        fail(ErrorCode::UnknownPeriod, "no settlement for " + merchant_id + " " + period.key() +
                                           "; pass the merchant's demand with --demand");
      }
      canonical::write_file(out_path, report.to_value());
      std::cout << "matched " << report.matched.size() << " (" << format_dollars(report.matched_total)
                << "), fee " << format_dollars(report.fee) << ", payout " << format_dollars(report.payout)
                << ", discrepancies " << report.discrepancies.size() << "\n";
      return 0;
    }
    return 2;
  });
}
