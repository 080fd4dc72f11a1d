#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "miflow/meanfield.hpp"

namespace miflow::experiments {

enum class Mode { eoc, meanfield, sample, sweep, compare };

std::string_view mode_name(Mode m) noexcept;
Mode parse_mode(std::string_view name);

/// sigma_w grid start, start + step, ... up to and including stop (with a 1e-9 relative slack).
struct SweepSpec {
  double start = 0.5;
  double stop = 3.0;
  double step = 0.25;
  bool eoc_coupled = true;  // solve sigma_b from the edge of chaos at every grid point
  double sigma_b = 0.0;     // used when eoc_coupled is false

  std::vector<double> grid() const;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

struct SamplingSpec {
  int weight_draws = 20;
  std::size_t samples = 100000;
  std::uint64_t master_seed = 20200613;

  friend bool operator==(const SamplingSpec&, const SamplingSpec&) = default;
};

struct RunConfig {
  Mode mode = Mode::meanfield;
  NetworkConfig network;
  std::optional<SweepSpec> sweep;
  SamplingSpec sampling;
  int quadrature_order = 64;
  bool literal_e3_variance = false;
  std::vector<int> widths;       // several widths run side by side; empty means network.width
  std::vector<int> plot_layers;  // layers drawn in the SVG views; empty means {1, depth}
  unsigned workers = 1;          // 0 = hardware concurrency
  std::string output_dir = "out";

  void validate() const;
  std::vector<int> resolved_widths() const;
  std::vector<int> resolved_plot_layers() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Applies every key present in `j` on top of `base`. Unknown keys and ill-typed values throw
/// ConfigError naming the offending key.
RunConfig apply_json(const nlohmann::json& j, RunConfig base = {});

/// Parses JSON text; syntax errors report line and column.
RunConfig parse_run_config(std::string_view text, RunConfig base = {});
std::string serialise(const RunConfig& cfg);
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace miflow::experiments
