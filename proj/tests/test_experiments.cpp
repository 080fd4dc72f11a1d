#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "miflow/errors.hpp"
#include "miflow/meanfield.hpp"
#include "miflow/presets.hpp"
#include "miflow/result_table.hpp"
#include "miflow/run_config.hpp"
#include "miflow/runner.hpp"
#include "miflow/svg.hpp"

using namespace miflow;
using namespace miflow::experiments;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("miflow-test-" + name);
  fs::remove_all(p);
  return p;
}

RunConfig small_meanfield() {
  RunConfig c;
  c.mode = Mode::meanfield;
  c.network.depth = 17;
  c.sweep = SweepSpec{0.5, 3.0, 0.25, true, 0.0};
  return c;
}

}  // namespace

TEST_SUITE("run config") {
  TEST_CASE("defaults validate and round-trip") {
    RunConfig c;
    c.validate();
    CHECK(parse_run_config(serialise(c)) == c);
  }

  TEST_CASE("randomised round trip") {
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> u(0.01, 4.0);
    const char* acts[] = {"tanh", "identity", "relu", "hard-tanh"};
    for (int i = 0; i < 200; ++i) {
      RunConfig c;
      c.mode = static_cast<Mode>(g() % 5);
      c.network = NetworkConfig{1 + static_cast<int>(g() % 200), 1 + static_cast<int>(g() % 60), u(g), u(g), u(g), u(g),
                                acts[g() % 4]};
      if (g() % 2 || c.mode == Mode::sweep || c.mode == Mode::compare) {
        const double start = u(g);
        c.sweep = SweepSpec{start, start + u(g), u(g) / 8.0, static_cast<bool>(g() % 2), u(g)};
      }
      c.sampling = SamplingSpec{1 + static_cast<int>(g() % 50), 1000 + g() % 100000, g()};
      c.quadrature_order = 32 + static_cast<int>(g() % 400);
      c.literal_e3_variance = g() % 2;
      if (g() % 2) c.widths = {static_cast<int>(1 + g() % 99), static_cast<int>(1 + g() % 99)};
      if (g() % 2) c.plot_layers = {1, c.network.depth};
      c.workers = static_cast<unsigned>(g() % 8);
      c.output_dir = "out/run-" + std::to_string(i);
      CHECK(parse_run_config(serialise(c)) == c);
    }
  }

  TEST_CASE("unknown keys are rejected with their path") {
    try {
      parse_run_config(R"({"network": {"width": 10, "sigma_q": 1}})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("network.sigma_q") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config(R"({"seed": 1})"), ConfigError);
  }

  TEST_CASE("syntax errors carry line and column") {
    try {
      parse_run_config("{\n  \"mode\": \"eoc\",\n  \"network\": {\"width\": }\n}");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }

  TEST_CASE("ill-typed values name the key") {
    try {
      parse_run_config(R"({"sampling": {"samples": "many"}})");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("sampling.samples") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config(R"({"network": {"width": 2.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"mode": "plot"})"), ConfigError);
  }

  TEST_CASE("overlay keeps unspecified fields") {
    RunConfig base = preset("fig4");
    const RunConfig c = parse_run_config(R"({"network": {"depth": 3}})", base);
    CHECK(c.network.depth == 3);
    CHECK(c.network.width == base.network.width);
    CHECK(c.sampling == base.sampling);
  }

  TEST_CASE("validation") {
    RunConfig c;
    c.mode = Mode::sweep;
    CHECK_THROWS_AS(c.validate(), ConfigError);  // needs a grid
    c.sweep = SweepSpec{};
    c.validate();
    c.sampling.samples = 50;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.quadrature_order = 16;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig{};
    c.plot_layers = {0};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("sweep grid includes the end point") {
    const auto g = SweepSpec{0.5, 3.0, 0.25, true, 0.0}.grid();
    REQUIRE(g.size() == 11);
    CHECK(g.front() == 0.5);
    CHECK(g.back() == doctest::Approx(3.0));
    CHECK(SweepSpec{0.5, 2.0, 0.05, false, 0.0}.grid().size() == 31);
  }

  TEST_CASE("presets") {
    CHECK(preset_names() == std::vector<std::string>{"fig3", "fig4", "fig5", "fig6", "fig7"});
    for (const auto& name : preset_names()) preset(name).validate();
    CHECK_THROWS_AS(preset("fig8"), ConfigError);
    const auto f4 = preset("fig4");
    CHECK(f4.network.width == 50);
    CHECK(f4.network.sigma_w == 2.5);
    CHECK(f4.network.sigma_b == 0.3);
    CHECK(f4.sampling.weight_draws == 100);
    CHECK(preset("fig6").resolved_widths() == std::vector<int>{30, 60, 90});
  }
}

TEST_SUITE("result table") {
  TEST_CASE("header order and number formatting") {
    ResultTable t;
    ResultRow r;
    r.layer = 3;
    r.sigma_w = 0.1;
    r.q = 1.0 / 3.0;
    t.rows.push_back(r);
    const std::string csv = t.to_csv();
    CHECK(csv.substr(0, csv.find('\n')) ==
          "layer,sigma_w,sigma_b,q,q_c,rho,analytic_bound_per_unit,sampled_bound_per_unit,stderr");
    CHECK(csv.find("3,0.10000000000000001,,0.33333333333333331,,,,,") != std::string::npos);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }

  TEST_CASE("column access") {
    ResultRow r;
    r.stderr_per_unit = 0.5;
    CHECK(ResultTable::value(r, "stderr") == 0.5);
    CHECK(ResultTable::has_column("q_c"));
    CHECK_FALSE(ResultTable::has_column("q_star"));
    CHECK_THROWS_AS(ResultTable::value(r, "q_star"), ConfigError);
  }
}

TEST_SUITE("svg") {
  TEST_CASE("single point gets a marker and no line") {
    ResultTable t;
    ResultRow r;
    r.layer = 1;
    r.sigma_w = 1.0;
    r.analytic_bound_per_unit = 0.4;
    t.rows.push_back(r);
    const std::string svg = emit_svg(t, ViewSpec{"v", "one", "sigma_w", {"analytic_bound_per_unit"}, "layer", {}});
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg ") != std::string::npos);
    CHECK(count(svg, "<circle") == 1);
    CHECK(count(svg, "<polyline") == 0);
    CHECK(svg.find("href") == std::string::npos);
  }

  TEST_CASE("two-layer meanfield view") {
    RunConfig c = small_meanfield();
    const auto res = compute(c);
    const auto& table = res.parts.front().table;
    const std::string svg =
        emit_svg(table, ViewSpec{"v", "bound", "sigma_w", {"analytic_bound_per_unit"}, "layer", {1.0, 17.0}});
    CHECK(count(svg, "<polyline") == 2);
    CHECK(svg.find(">layer=1<") != std::string::npos);
    CHECK(svg.find(">layer=17<") != std::string::npos);
    CHECK(svg.find("nats per coordinate") != std::string::npos);
    CHECK(svg.find("sigma_w") != std::string::npos);
  }

  TEST_CASE("empty selections are configuration errors") {
    ResultTable t;
    CHECK_THROWS_AS(emit_svg(t, ViewSpec{"v", "none", "sigma_w", {"q"}, "", {}}), ConfigError);
    ResultRow r;
    r.layer = 1;
    t.rows.push_back(r);
    CHECK_THROWS_AS(emit_svg(t, ViewSpec{"v", "bad", "sigma_w", {"nope"}, "", {}}), ConfigError);
  }
}

TEST_SUITE("runner") {
  TEST_CASE("eoc mode at unit gain") {
    RunConfig c;
    c.mode = Mode::eoc;
    c.sweep = SweepSpec{1.0, 1.0, 0.25, true, 0.0};
    const auto res = compute(c);
    REQUIRE(res.parts.front().table.rows.size() == 1);
    const auto& row = res.parts.front().table.rows.front();
    CHECK(row.sigma_w == 1.0);
    CHECK(row.sigma_b <= 1e-3);
  }

  TEST_CASE("eoc mode skips rootless points") {
    RunConfig c;
    c.mode = Mode::eoc;
    c.sweep = SweepSpec{0.5, 3.0, 0.25, true, 0.0};
    const auto res = compute(c);
    CHECK(res.skipped_sigma_w == std::vector<double>{0.5, 0.75});
    CHECK(res.parts.front().table.rows.size() == 9);
  }

  TEST_CASE("meanfield with zero weights has a zero bound column") {
    RunConfig c;
    c.mode = Mode::meanfield;
    c.network.sigma_w = 0.0;
    c.network.sigma_b = 0.2;
    const auto res = compute(c);
    REQUIRE_FALSE(res.parts.front().table.rows.empty());
    for (const auto& row : res.parts.front().table.rows) CHECK(row.analytic_bound_per_unit == 0.0);
  }

  TEST_CASE("eoc-coupled rows satisfy the curve residual") {
    const auto res = compute(small_meanfield());
    const auto& rule = numerics::cached_rule(64);
    for (const auto& row : res.parts.front().table.rows) {
      const double qs = meanfield::q_star(row.sigma_w, row.sigma_b, get_activation("tanh"), rule);
      CHECK(std::abs(meanfield::chi1(row.sigma_w, qs, get_activation("tanh"), rule) - 1.0) <= 1e-6);
    }
  }

  TEST_CASE("files, manifest and byte-identical reruns") {
    RunConfig c;
    c.mode = Mode::compare;
    c.network.width = 8;
    c.network.depth = 4;
    c.sweep = SweepSpec{1.0, 1.5, 0.25, true, 0.0};
    c.sampling = SamplingSpec{3, 500, 99};
    c.output_dir = scratch("run-a").string();
    run(c);
    RunConfig d = c;
    d.output_dir = scratch("run-b").string();
    run(d);
    const fs::path a(c.output_dir), b(d.output_dir);
    for (const char* f : {"results.csv", "diagonals.csv", "bound_vs_sigma_w.svg", "bound_vs_layer.svg", "run.json"}) {
      CHECK(fs::exists(a / f));
    }
    CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
    const auto manifest = nlohmann::json::parse(slurp(a / "run.json"));
    CHECK(manifest["resolved"]["quadrature_order"] == 64);
    CHECK(manifest["resolved"]["weight_draws"] == 3);
    CHECK(manifest["resolved"]["jitter_events"] == 0);
    CHECK(manifest["config"]["sampling"]["master_seed"] == 99);
    CHECK(apply_json(manifest["config"]) .sampling == c.sampling);

    d.sampling.master_seed = 100;
    d.output_dir = scratch("run-c").string();
    run(d);
    CHECK(slurp(a / "results.csv") != slurp(fs::path(d.output_dir) / "results.csv"));
  }

  TEST_CASE("several widths go to separate directories") {
    RunConfig c;
    c.mode = Mode::sample;
    c.network.depth = 2;
    c.widths = {4, 6};
    c.sampling = SamplingSpec{2, 200, 5};
    c.output_dir = scratch("widths").string();
    run(c);
    CHECK(fs::exists(fs::path(c.output_dir) / "n4" / "results.csv"));
    CHECK(fs::exists(fs::path(c.output_dir) / "n6" / "results.csv"));
  }
}

#ifdef MIFLOW_CLI
TEST_SUITE("cli") {
  int run_cli(const std::string& args) {
    const std::string cmd = std::string(MIFLOW_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  TEST_CASE("exit codes") {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    CHECK(run_cli("eoc --out " + (dir / "ok").string()) == 0);
    CHECK(fs::exists(dir / "ok" / "results.csv"));
    CHECK(run_cli("meanfield --preset fig7 --print-config") == 0);

    std::ofstream(dir / "bad.json") << R"({"network": {"widht": 3}})";
    CHECK(run_cli("meanfield --config " + (dir / "bad.json").string()) == 2);
    CHECK(run_cli("meanfield --config " + (dir / "missing.json").string()) == 2);
    CHECK(run_cli("dance") == 2);
    CHECK(run_cli("eoc --preset fig9") == 2);

    std::ofstream(dir / "mode.json") << R"({"mode": "sample"})";
    CHECK(run_cli("meanfield --config " + (dir / "mode.json").string()) == 2);

    // An expanding identity network overflows the variance recursion.
    std::ofstream(dir / "blowup.json") << R"({"network": {"activation": "identity", "sigma_w": 1e200, "depth": 3}})";
    CHECK(run_cli("meanfield --config " + (dir / "blowup.json").string() + " --out " + (dir / "x").string()) == 3);
  }
}
#endif
