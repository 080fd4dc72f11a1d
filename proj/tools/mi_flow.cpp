// mi-flow: mutual-information lower bounds for randomly initialised feed-forward networks.
//
//   mi-flow <mode> [--config PATH] [--preset fig3|fig4|fig5|fig6|fig7] [--seed N] [--out DIR]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "miflow/errors.hpp"
#include "miflow/presets.hpp"
#include "miflow/run_config.hpp"
#include "miflow/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace miflow;
  using namespace miflow::experiments;

  CLI::App app{"Mutual-information lower bounds of randomly initialised networks", "mi-flow"};
  std::string mode;
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> workers;
  bool print_config = false;

  app.add_option("mode", mode, "eoc | meanfield | sample | sweep | compare")->required();
  app.add_option("--config", config_path, "run config (JSON)");
  app.add_option("--preset", preset_name, "figure preset applied before --config")
      ->check(CLI::IsMember({"fig3", "fig4", "fig5", "fig6", "fig7"}));
  app.add_option("--seed", seed, "master seed for weight, input and noise streams");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads (0 = all cores)");
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg = preset_name.empty() ? RunConfig{} : preset(preset_name);
    const Mode cli_mode = parse_mode(mode);
    if (!config_path.empty()) {
      cfg.mode = cli_mode;
      cfg = load_run_config(config_path, cfg);
      if (cfg.mode != cli_mode) {
        throw ConfigError("run config mode '" + std::string(mode_name(cfg.mode)) + "' conflicts with command-line mode '" +
                          mode + "'");
      }
    }
    cfg.mode = cli_mode;
    if (seed) cfg.sampling.master_seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    if (workers) cfg.workers = *workers;
    cfg.validate();

    if (print_config) {
      std::cout << serialise(cfg);
      return 0;
    }

    RunResult result = run(cfg);
    std::size_t rows = 0;
    for (const auto& p : result.parts) rows += p.table.rows.size();
    std::cout << "mode " << mode_name(cfg.mode) << ": " << rows << " rows, " << result.grid.size() << " grid point(s)";
    if (!result.skipped_sigma_w.empty()) {
      std::cout << ", " << result.skipped_sigma_w.size() << " sigma_w value(s) without an edge-of-chaos sigma_b";
    }
    std::cout << "\n";
    for (const auto& f : result.files) std::cout << "  wrote " << f.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "mi-flow: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "mi-flow: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}
