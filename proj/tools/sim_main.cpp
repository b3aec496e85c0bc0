// sim run | stress

#include <chrono>
#include <iostream>

#include "cardpay/canonical.hpp"
#include "cardpay/sim.hpp"
#include "cardpay/stress.hpp"
#include "cli_util.hpp"

using namespace cardpay;

int main(int argc, char** argv) {
  CLI::App app{"End-to-end simulation"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  auto* run = app.add_subcommand("run", "deterministic simulation with fault injection");
  run->add_option("--config", config_path, "sim config; defaults apply to missing fields");
  run->add_option("--out", out_path, "report path")->required();

  StressConfig sc;
  bool plaintext = false;
  auto* stress = app.add_subcommand("stress", "concurrent checkouts against one card over loopback");
  stress->add_option("--threads", sc.server_threads, "provider server threads");
  stress->add_option("--card-balance", sc.card_balance, "minor units");
  stress->add_option("--request-amount", sc.request_amount, "minor units");
  stress->add_option("--workers", sc.workers, "concurrent checkout workers");
  stress->add_option("--requests-per-worker", sc.requests_per_worker);
  stress->add_flag("--plaintext", plaintext, "skip the encrypted channel");

  return cli::guarded_main(app, argc, argv, [&]() -> int {
    if (*run) {
      const SimConfig cfg = config_path.empty()
                                ? SimConfig{}
                                : SimConfig::from_value(canonical::read_file_relaxed(config_path));
      const auto t0 = std::chrono::steady_clock::now();
      const SimReport report = run_simulation(cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      canonical::write_file(out_path, report.to_value());
      std::cout << "residual " << report.conservation.residual << ", purchases " << report.purchases_ok
                << ", invariants " << (report.invariants_hold() ? "ok" : "VIOLATED") << ", " << secs
                << " s\n";
      return report.invariants_hold() ? 0 : 3;
    }
    if (*stress) {
      sc.secure = !plaintext;
      const StressReport r = run_stress(sc);
      std::cout << canonical::encode(r.to_value()) << "\n";
      return r.ok() ? 0 : 3;
    }
    return 2;
  });
}
