#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "miflow/meanfield.hpp"
#include "miflow/montecarlo.hpp"
#include "miflow/result_table.hpp"
#include "miflow/run_config.hpp"

namespace miflow::experiments {

/// Empirical mean diagonals of the second-moment matrices next to their mean-field predictions.
struct DiagonalRow {
  int layer = 0;
  double sigma_w = 0.0;
  double sigma_b = 0.0;
  double empirical_q = 0.0;
  double empirical_q_stderr = 0.0;
  double meanfield_q = 0.0;
  double empirical_q_c = 0.0;
  double empirical_q_c_stderr = 0.0;
  double meanfield_q_c = 0.0;
};

std::string diagonals_csv(const std::vector<DiagonalRow>& rows);

struct GridPoint {
  double sigma_w = 0.0;
  double sigma_b = 0.0;
  std::optional<double> q_star;  // set when sigma_b came from the edge of chaos
};

struct WidthResult {
  int width = 0;
  ResultTable table;
  std::vector<DiagonalRow> diagonals;
  std::vector<meanfield::MeanFieldTrajectory> trajectories;  // one per grid point, when computed
  std::vector<montecarlo::MIBoundSeries> sampled;             // one per grid point, when computed
  int jitter_events = 0;
};

struct RunResult {
  RunConfig config;
  std::vector<GridPoint> grid;
  std::vector<double> skipped_sigma_w;  // grid values without an edge-of-chaos sigma_b
  std::vector<WidthResult> parts;       // one per resolved width
  nlohmann::ordered_json manifest;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured mode without touching the filesystem.
RunResult compute(const RunConfig& cfg);

/// compute() followed by writing results.csv, run.json, diagonals.csv (sampling modes) and the
/// SVG views under cfg.output_dir (one n<width>/ subdirectory per width when several are given).
RunResult run(const RunConfig& cfg);

void write_outputs(RunResult& result);

}  // namespace miflow::experiments
