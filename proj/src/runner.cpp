#include "miflow/runner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "miflow/errors.hpp"
#include "miflow/parallel.hpp"
#include "miflow/quadrature.hpp"
#include "miflow/svg.hpp"

namespace miflow::experiments {

namespace fs = std::filesystem;
using meanfield::MeanFieldOptions;
using numerics::SeedSpec;

namespace {

bool is_sampling(Mode m) { return m == Mode::sample || m == Mode::sweep || m == Mode::compare; }
bool is_analytic(Mode m) { return m == Mode::meanfield || m == Mode::compare; }

std::string point_label(const GridPoint& p) {
  std::ostringstream os;
  os << "sigma_w=" << format_double(p.sigma_w, 6) << ", sigma_b=" << format_double(p.sigma_b, 6);
  return os.str();
}

template <typename Fn>
auto annotated(const GridPoint& p, Fn&& fn) {
  try {
    return fn();
  } catch (const SingularMatrixError& e) {
    throw SingularMatrixError(point_label(p) + ": " + e.what(), e.smallest_pivot());
  } catch (const NumericalError& e) {
    throw NumericalError(point_label(p) + ": " + e.what());
  }
}

void resolve_grid(const RunConfig& cfg, RunResult& out) {
  const Activation& phi = get_activation(cfg.network.activation);
  const auto& rule = numerics::cached_rule(cfg.quadrature_order);

  std::vector<double> sigma_ws = cfg.sweep ? cfg.sweep->grid() : std::vector<double>{cfg.network.sigma_w};
  const bool solve_eoc = cfg.mode == Mode::eoc || (cfg.sweep && cfg.sweep->eoc_coupled);
  for (const double sw : sigma_ws) {
    GridPoint p{sw, 0.0, std::nullopt};
    if (solve_eoc) {
      const auto root = annotated(p, [&] { return meanfield::eoc_solve(sw, phi, rule); });
      if (!root) {
        out.skipped_sigma_w.push_back(sw);
        continue;
      }
      p.sigma_b = root->sigma_b;
      p.q_star = root->q_star;
    } else {
      p.sigma_b = cfg.sweep ? cfg.sweep->sigma_b : cfg.network.sigma_b;
    }
    out.grid.push_back(p);
  }
}

WidthResult compute_width(const RunConfig& cfg, const std::vector<GridPoint>& grid, int width) {
  WidthResult wr;
  wr.width = width;
  const auto& rule = numerics::cached_rule(cfg.quadrature_order);
  const MeanFieldOptions options{cfg.literal_e3_variance};

  auto point_config = [&](const GridPoint& p) {
    NetworkConfig nc = cfg.network;
    nc.width = width;
    nc.sigma_w = p.sigma_w;
    nc.sigma_b = p.sigma_b;
    return nc;
  };

  if (cfg.mode == Mode::eoc) {
    for (const auto& p : grid) {
      ResultRow row;
      row.sigma_w = p.sigma_w;
      row.sigma_b = p.sigma_b;
      row.q = p.q_star.value_or(kMissing);
      wr.table.rows.push_back(row);
    }
    return wr;
  }

  // Mean-field trajectories are cheap; the sampled bounds parallelise over weight draws instead.
  wr.trajectories.resize(grid.size());
  parallel_for(grid.size(), is_sampling(cfg.mode) ? 1u : cfg.workers, [&](std::size_t g) {
    wr.trajectories[g] = annotated(grid[g], [&] { return meanfield::analytic_mi_bound(point_config(grid[g]), rule, options); });
  });

  if (is_sampling(cfg.mode)) {
    wr.sampled.reserve(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const SeedSpec seed = SeedSpec{cfg.sampling.master_seed, 0}.child(g);
      wr.sampled.push_back(annotated(grid[g], [&] {
        return montecarlo::sampled_mi_bound(point_config(grid[g]), cfg.sampling.weight_draws, cfg.sampling.samples,
                                            seed, cfg.workers);
      }));
      wr.jitter_events += wr.sampled.back().jitter_events;
    }
  }

  const double n = static_cast<double>(width);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& t = wr.trajectories[g];
    for (int l = 0; l < cfg.network.depth; ++l) {
      const auto li = static_cast<std::size_t>(l);
      ResultRow row;
      row.layer = l + 1;
      row.sigma_w = grid[g].sigma_w;
      row.sigma_b = grid[g].sigma_b;
      if (is_analytic(cfg.mode)) {
        row.q = t.q[li];
        row.q_c = t.q_c[li];
        row.rho = t.rho[li];
        row.analytic_bound_per_unit = t.bound_per_unit[li];
      }
      if (is_sampling(cfg.mode)) {
        const auto& s = wr.sampled[g];
        row.sampled_bound_per_unit = s.sampled_bound[li] / n;
        row.stderr_per_unit = s.stderr_bound[li] / n;
        wr.diagonals.push_back({l + 1, grid[g].sigma_w, grid[g].sigma_b, s.diag_q[li], s.diag_q_stderr[li], t.q[li],
                                s.diag_qc[li], s.diag_qc_stderr[li], t.q_c[li]});
      }
      wr.table.rows.push_back(row);
    }
  }
  return wr;
}

std::vector<std::string> y_columns(Mode m) {
  std::vector<std::string> y;
  if (is_analytic(m)) y.emplace_back("analytic_bound_per_unit");
  if (is_sampling(m)) y.emplace_back("sampled_bound_per_unit");
  return y;
}

std::vector<double> selected_sigma_w(const std::vector<GridPoint>& grid) {
  std::vector<double> out;
  if (grid.size() <= 6) {
    for (const auto& p : grid) out.push_back(p.sigma_w);
    return out;
  }
  for (int k = 0; k < 5; ++k) {
    const auto idx = static_cast<std::size_t>(std::lround(k * (grid.size() - 1) / 4.0));
    out.push_back(grid[idx].sigma_w);
  }
  return out;
}

std::string network_summary(const RunConfig& cfg, int width) {
  std::ostringstream os;
  os << cfg.network.activation << ", n=" << width << ", sigma_n=" << format_double(cfg.network.sigma_n, 6);
  return os.str();
}

}  // namespace

std::string diagonals_csv(const std::vector<DiagonalRow>& rows) {
  std::string out =
      "layer,sigma_w,sigma_b,empirical_q,empirical_q_stderr,meanfield_q,empirical_q_c,empirical_q_c_stderr,"
      "meanfield_q_c\n";
  for (const auto& r : rows) {
    out += std::to_string(r.layer);
    for (const double v : {r.sigma_w, r.sigma_b, r.empirical_q, r.empirical_q_stderr, r.meanfield_q, r.empirical_q_c,
                           r.empirical_q_c_stderr, r.meanfield_q_c}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

RunResult compute(const RunConfig& cfg) {
  cfg.validate();
  RunResult out;
  out.config = cfg;
  resolve_grid(cfg, out);
  for (const int w : cfg.resolved_widths()) out.parts.push_back(compute_width(cfg, out.grid, w));

  auto& m = out.manifest;
  m["config"] = to_json(cfg);
  nlohmann::ordered_json resolved;
  resolved["quadrature_order"] = cfg.quadrature_order;
  resolved["weight_draws"] = is_sampling(cfg.mode) ? cfg.sampling.weight_draws : 0;
  resolved["input_samples"] = is_sampling(cfg.mode) ? cfg.sampling.samples : 0;
  resolved["master_seed"] = cfg.sampling.master_seed;
  int jitter = 0;
  for (const auto& p : out.parts) jitter += p.jitter_events;
  resolved["jitter_events"] = jitter;
  resolved["widths"] = cfg.resolved_widths();
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const auto& p : out.grid) {
    nlohmann::ordered_json g{{"sigma_w", p.sigma_w}, {"sigma_b", p.sigma_b}};
    if (p.q_star) g["q_star"] = *p.q_star;
    grid.push_back(g);
  }
  resolved["grid"] = grid;
  resolved["skipped_sigma_w"] = out.skipped_sigma_w;
  nlohmann::ordered_json singular = nlohmann::ordered_json::array();
  if (!out.parts.empty()) {
    const auto& trajs = out.parts.front().trajectories;
    for (std::size_t g = 0; g < trajs.size(); ++g) {
      if (trajs[g].singular) singular.push_back(out.grid[g].sigma_w);
    }
  }
  resolved["meanfield_singular_sigma_w"] = singular;
  if (cfg.mode == Mode::eoc) {
    const auto& rule = numerics::cached_rule(cfg.quadrature_order);
    const Activation& phi = get_activation(cfg.network.activation);
    try {
      resolved["network_point_phase"] = std::string(
          meanfield::phase_name(meanfield::classify_phase(cfg.network.sigma_w, cfg.network.sigma_b, phi, rule)));
    } catch (const FixedPointError&) {
      resolved["network_point_phase"] = "undefined (q* diverges)";
    }
  }
  m["resolved"] = resolved;
  return out;
}

void write_outputs(RunResult& result) {
  const RunConfig& cfg = result.config;
  const fs::path root(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw ConfigError("cannot create output directory '" + root.string() + "': " + ec.message());

  auto emit = [&](const fs::path& path, const std::string& text) {
    write_text_file(path, text);
    result.files.push_back(path);
  };

  const bool multi = result.parts.size() > 1;
  const auto plot_layers = cfg.resolved_plot_layers();
  const auto ys = y_columns(cfg.mode);

  for (const auto& part : result.parts) {
    const fs::path dir = multi ? root / ("n" + std::to_string(part.width)) : root;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    emit(dir / "results.csv", part.table.to_csv());
    if (is_sampling(cfg.mode)) emit(dir / "diagonals.csv", diagonals_csv(part.diagonals));
    if (part.table.rows.empty()) continue;

    if (cfg.mode == Mode::eoc) {
      ViewSpec v{"eoc_curve", "Edge of chaos (" + cfg.network.activation + ")", "sigma_w", {"sigma_b"}, "", {}};
      emit(dir / "eoc_curve.svg", emit_svg(part.table, v));
      continue;
    }
    const std::string net = network_summary(cfg, part.width);
    if (result.grid.size() > 1) {
      std::vector<double> groups(plot_layers.begin(), plot_layers.end());
      ViewSpec v{"bound_vs_sigma_w", "MI lower bound per unit vs sigma_w (" + net + ")", "sigma_w", ys, "layer",
                 groups};
      emit(dir / "bound_vs_sigma_w.svg", emit_svg(part.table, v));
    }
    ViewSpec v{"bound_vs_layer", "MI lower bound per unit vs layer (" + net + ")", "layer", ys, "sigma_w",
               selected_sigma_w(result.grid)};
    emit(dir / "bound_vs_layer.svg", emit_svg(part.table, v));

    if (is_sampling(cfg.mode) && result.grid.size() == 1) {
      LineChart chart;
      chart.title = "Mean diagonal of covariance blocks vs layer (" + net + ")";
      chart.x_label = "layer";
      chart.y_label = "mean diagonal (signal variance)";
      Series eq{"empirical q", {}}, mq{"mean-field q", {}}, eqc{"empirical q_c", {}}, mqc{"mean-field q_c", {}};
      for (const auto& d : part.diagonals) {
        eq.points.emplace_back(d.layer, d.empirical_q);
        mq.points.emplace_back(d.layer, d.meanfield_q);
        eqc.points.emplace_back(d.layer, d.empirical_q_c);
        mqc.points.emplace_back(d.layer, d.meanfield_q_c);
      }
      chart.series = {eq, mq, eqc, mqc};
      emit(dir / "diagonals.svg", render_svg(chart));
    }
  }

  if (multi && result.grid.size() > 1 && cfg.mode != Mode::eoc) {
    for (const int layer : plot_layers) {
      LineChart chart;
      chart.title = "MI lower bound per unit at layer " + std::to_string(layer) + " for several widths";
      chart.x_label = column_label("sigma_w");
      chart.y_label = "bound per unit (nats per coordinate)";
      for (const auto& part : result.parts) {
        for (const auto& y : ys) {
          Series s;
          s.label = "n=" + std::to_string(part.width) + (y == "analytic_bound_per_unit" ? " analytic" : " sampled");
          for (const auto& row : part.table.rows) {
            if (row.layer == layer) s.points.emplace_back(row.sigma_w, ResultTable::value(row, y));
          }
          chart.series.push_back(std::move(s));
        }
      }
      emit(root / ("widths_layer" + std::to_string(layer) + ".svg"), render_svg(chart));
    }
  }

  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : result.files) files.push_back(fs::relative(f, root).generic_string());
  files.push_back("run.json");
  result.manifest["files"] = files;
  const fs::path manifest_path = root / "run.json";
  write_text_file(manifest_path, result.manifest.dump(2) + "\n");
  result.files.push_back(manifest_path);
}

RunResult run(const RunConfig& cfg) {
  RunResult r = compute(cfg);
  write_outputs(r);
  return r;
}

}  // namespace miflow::experiments
