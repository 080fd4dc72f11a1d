#include "miflow/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "miflow/errors.hpp"
#include "miflow/quadrature.hpp"

namespace miflow::experiments {

using nlohmann::json;

namespace {

constexpr std::string_view kModeNames[] = {"eoc", "meanfield", "sample", "sweep", "compare"};

[[noreturn]] void key_error(const std::string& key, const std::string& problem) {
  throw ConfigError("run config key '" + key + "': " + problem);
}

void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("run config: unknown key '" + prefix + key + "'");
    }
  }
}

const json& require_object(const json& j, const std::string& key) {
  if (!j.is_object()) key_error(key, "expected an object");
  return j;
}

double get_double(const json& j, const std::string& key) {
  if (!j.is_number()) key_error(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) key_error(key, "expected a finite number");
  return v;
}

std::int64_t get_int(const json& j, const std::string& key) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<std::int64_t>(v);
  }
  key_error(key, "expected an integer");
}

std::uint64_t get_uint(const json& j, const std::string& key) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const std::int64_t v = get_int(j, key);
  if (v < 0) key_error(key, "expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) key_error(key, "expected true or false");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) key_error(key, "expected a string");
  return j.get<std::string>();
}

std::vector<int> get_int_list(const json& j, const std::string& key) {
  if (!j.is_array()) key_error(key, "expected an array of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(static_cast<int>(get_int(j[i], key + "[" + std::to_string(i) + "]")));
  }
  return out;
}

}  // namespace

std::string_view mode_name(Mode m) noexcept { return kModeNames[static_cast<int>(m)]; }

Mode parse_mode(std::string_view name) {
  for (int i = 0; i < 5; ++i) {
    if (kModeNames[i] == name) return static_cast<Mode>(i);
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'; expected one of eoc, meanfield, sample, sweep, compare");
}

std::vector<double> SweepSpec::grid() const {
  if (!(step > 0.0) || !(stop >= start)) return {};
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step * (1.0 + 1e-9) + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

std::vector<int> RunConfig::resolved_widths() const {
  return widths.empty() ? std::vector<int>{network.width} : widths;
}

std::vector<int> RunConfig::resolved_plot_layers() const {
  if (!plot_layers.empty()) return plot_layers;
  if (network.depth == 1) return {1};
  return {1, network.depth};
}

void RunConfig::validate() const {
  network.validate();
  if (quadrature_order < numerics::kMinQuadratureOrder || quadrature_order > numerics::kMaxQuadratureOrder) {
    throw ConfigError("quadrature_order must lie in [2, 512]");
  }
  if (mode != Mode::eoc && quadrature_order < 32) {
    throw ConfigError("mean-field propagation needs quadrature_order >= 32");
  }
  if (sweep) {
    if (!(sweep->step > 0.0)) throw ConfigError("sweep.step must be > 0");
    if (!(sweep->start > 0.0 || (!sweep->eoc_coupled && sweep->start >= 0.0))) {
      throw ConfigError("sweep.start must be > 0 (>= 0 without eoc_coupled)");
    }
    if (!(sweep->stop >= sweep->start)) throw ConfigError("sweep.stop must be >= sweep.start");
    if (!sweep->eoc_coupled && !(sweep->sigma_b >= 0.0)) throw ConfigError("sweep.sigma_b must be >= 0");
  }
  if ((mode == Mode::sweep || mode == Mode::compare) && (!sweep || sweep->grid().empty())) {
    throw ConfigError(std::string("mode '") + std::string(mode_name(mode)) + "' needs a non-empty sweep grid");
  }
  const bool sampling_mode = mode == Mode::sample || mode == Mode::sweep || mode == Mode::compare;
  if (sampling_mode) {
    if (sampling.weight_draws < 1) throw ConfigError("sampling.weight_draws must be >= 1");
    for (const int w : resolved_widths()) {
      if (sampling.samples < static_cast<std::size_t>(w) + 1) {
        throw ConfigError("sampling.samples must be >= width + 1 for every width");
      }
    }
  }
  for (const int w : widths) {
    if (w < 1) throw ConfigError("widths entries must be >= 1");
  }
  for (const int l : plot_layers) {
    if (l < 1 || l > network.depth) throw ConfigError("plot_layers entries must lie in [1, depth]");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(mode_name(cfg.mode));
  j["network"] = {
      {"width", cfg.network.width},         {"depth", cfg.network.depth},
      {"sigma_w", cfg.network.sigma_w},     {"sigma_b", cfg.network.sigma_b},
      {"sigma_n", cfg.network.sigma_n},     {"sigma_x", cfg.network.sigma_x},
      {"activation", cfg.network.activation},
  };
  if (cfg.sweep) {
    j["sweep"] = {
        {"start", cfg.sweep->start},
        {"stop", cfg.sweep->stop},
        {"step", cfg.sweep->step},
        {"eoc_coupled", cfg.sweep->eoc_coupled},
        {"sigma_b", cfg.sweep->sigma_b},
    };
  } else {
    j["sweep"] = nullptr;
  }
  j["sampling"] = {
      {"weight_draws", cfg.sampling.weight_draws},
      {"samples", cfg.sampling.samples},
      {"master_seed", cfg.sampling.master_seed},
  };
  j["quadrature_order"] = cfg.quadrature_order;
  j["literal_e3_variance"] = cfg.literal_e3_variance;
  j["widths"] = cfg.widths;
  j["plot_layers"] = cfg.plot_layers;
  j["workers"] = cfg.workers;
  j["output_dir"] = cfg.output_dir;
  return j;
}

RunConfig apply_json(const json& j, RunConfig cfg) {
  require_object(j, "<root>");
  reject_unknown(j, "", {"mode", "network", "sweep", "sampling", "quadrature_order", "literal_e3_variance", "widths",
                         "plot_layers", "workers", "output_dir"});
  if (j.contains("mode")) cfg.mode = parse_mode(get_string(j["mode"], "mode"));

  if (j.contains("network")) {
    const json& n = require_object(j["network"], "network");
    reject_unknown(n, "network.", {"width", "depth", "sigma_w", "sigma_b", "sigma_n", "sigma_x", "activation"});
    if (n.contains("width")) cfg.network.width = static_cast<int>(get_int(n["width"], "network.width"));
    if (n.contains("depth")) cfg.network.depth = static_cast<int>(get_int(n["depth"], "network.depth"));
    if (n.contains("sigma_w")) cfg.network.sigma_w = get_double(n["sigma_w"], "network.sigma_w");
    if (n.contains("sigma_b")) cfg.network.sigma_b = get_double(n["sigma_b"], "network.sigma_b");
    if (n.contains("sigma_n")) cfg.network.sigma_n = get_double(n["sigma_n"], "network.sigma_n");
    if (n.contains("sigma_x")) cfg.network.sigma_x = get_double(n["sigma_x"], "network.sigma_x");
    if (n.contains("activation")) cfg.network.activation = get_string(n["activation"], "network.activation");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.is_null()) {
      cfg.sweep.reset();
    } else {
      require_object(s, "sweep");
      reject_unknown(s, "sweep.", {"start", "stop", "step", "eoc_coupled", "sigma_b"});
      SweepSpec sw = cfg.sweep.value_or(SweepSpec{});
      if (s.contains("start")) sw.start = get_double(s["start"], "sweep.start");
      if (s.contains("stop")) sw.stop = get_double(s["stop"], "sweep.stop");
      if (s.contains("step")) sw.step = get_double(s["step"], "sweep.step");
      if (s.contains("eoc_coupled")) sw.eoc_coupled = get_bool(s["eoc_coupled"], "sweep.eoc_coupled");
      if (s.contains("sigma_b")) sw.sigma_b = get_double(s["sigma_b"], "sweep.sigma_b");
      cfg.sweep = sw;
    }
  }

  if (j.contains("sampling")) {
    const json& s = require_object(j["sampling"], "sampling");
    reject_unknown(s, "sampling.", {"weight_draws", "samples", "master_seed"});
    if (s.contains("weight_draws")) {
      cfg.sampling.weight_draws = static_cast<int>(get_int(s["weight_draws"], "sampling.weight_draws"));
    }
    if (s.contains("samples")) cfg.sampling.samples = get_uint(s["samples"], "sampling.samples");
    if (s.contains("master_seed")) cfg.sampling.master_seed = get_uint(s["master_seed"], "sampling.master_seed");
  }

  if (j.contains("quadrature_order")) {
    cfg.quadrature_order = static_cast<int>(get_int(j["quadrature_order"], "quadrature_order"));
  }
  if (j.contains("literal_e3_variance")) {
    cfg.literal_e3_variance = get_bool(j["literal_e3_variance"], "literal_e3_variance");
  }
  if (j.contains("widths")) cfg.widths = get_int_list(j["widths"], "widths");
  if (j.contains("plot_layers")) cfg.plot_layers = get_int_list(j["plot_layers"], "plot_layers");
  if (j.contains("workers")) cfg.workers = static_cast<unsigned>(get_uint(j["workers"], "workers"));
  if (j.contains("output_dir")) cfg.output_dir = get_string(j["output_dir"], "output_dir");
  return cfg;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column.
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "run config line " << line << ", column " << col << ": " << e.what();
    throw ConfigError(os.str());
  }
  return apply_json(j, std::move(base));
}

std::string serialise(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

}  // namespace miflow::experiments
