#include "miflow/presets.hpp"

#include "miflow/errors.hpp"

namespace miflow::experiments {

namespace {

// tanh network, sigma_x = 1, sigma_n = 0.1, sigma_b on the edge of chaos.
RunConfig eoc_sweep_base() {
  RunConfig c;
  c.network.width = 90;
  c.network.depth = 17;
  c.network.activation = "tanh";
  c.network.sigma_x = 1.0;
  c.network.sigma_n = 0.1;
  c.sweep = SweepSpec{0.5, 3.0, 0.25, true, 0.0};
  c.sampling = SamplingSpec{20, 100000, 20200613};
  return c;
}

}  // namespace

std::optional<RunConfig> find_preset(std::string_view name) {
  if (name == "fig3") {
    RunConfig c = eoc_sweep_base();
    c.mode = Mode::sweep;
    c.plot_layers = {1, 5, 9, 13, 17};
    c.output_dir = "out/fig3";
    return c;
  }
  if (name == "fig4") {
    RunConfig c;
    c.mode = Mode::sample;
    c.network = NetworkConfig{50, 10, 2.5, 0.3, 0.1, 1.0, "tanh"};
    c.sampling = SamplingSpec{100, 10000, 20200613};
    c.output_dir = "out/fig4";
    return c;
  }
  if (name == "fig5") {
    RunConfig c = eoc_sweep_base();
    c.mode = Mode::compare;
    c.plot_layers = {1, 5, 9, 13, 17};
    c.output_dir = "out/fig5";
    return c;
  }
  if (name == "fig6") {
    RunConfig c = eoc_sweep_base();
    c.mode = Mode::compare;
    c.widths = {30, 60, 90};
    c.plot_layers = {1, 17};
    c.output_dir = "out/fig6";
    return c;
  }
  if (name == "fig7") {
    RunConfig c;
    c.mode = Mode::meanfield;
    c.network = NetworkConfig{1000, 50, 1.0, 0.0, 0.1, 1.0, "tanh"};
    c.sweep = SweepSpec{0.5, 2.0, 0.05, false, 0.0};
    c.plot_layers = {1, 5, 10, 20, 30, 40, 50};
    c.output_dir = "out/fig7";
    return c;
  }
  return std::nullopt;
}

RunConfig preset(std::string_view name) {
  if (auto c = find_preset(name)) return *c;
  throw ConfigError("unknown preset '" + std::string(name) + "'; expected fig3, fig4, fig5, fig6 or fig7");
}

std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "fig6", "fig7"}; }

}  // namespace miflow::experiments
