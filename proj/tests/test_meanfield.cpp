#include <doctest.h>

#include <cmath>
#include <vector>

#include "miflow/errors.hpp"
#include "miflow/meanfield.hpp"
#include "oracles.hpp"

using namespace miflow;
using namespace miflow::meanfield;
using numerics::cached_rule;

namespace {

const numerics::QuadratureRule& rule64() { return cached_rule(64); }

NetworkConfig net(double sw, double sb, const char* act = "tanh", int depth = 10, double sn = 0.1) {
  NetworkConfig c;
  c.width = 90;
  c.depth = depth;
  c.sigma_w = sw;
  c.sigma_b = sb;
  c.sigma_n = sn;
  c.activation = act;
  return c;
}

}  // namespace

TEST_SUITE("variance recursion") {
  TEST_CASE("identity network follows the linear recursion") {
    const auto q = q_forward(net(1.0, 0.0, "identity", 3), rule64());
    CHECK(q[0] == doctest::Approx(1.01).epsilon(1e-14));
    CHECK(q[1] == doctest::Approx(1.02).epsilon(1e-14));
    CHECK(q[2] == doctest::Approx(1.03).epsilon(1e-14));
  }

  TEST_CASE("zero weights leave only bias and noise") {
    for (const char* act : {"tanh", "identity", "relu", "hard-tanh"}) {
      for (double q : q_forward(net(0.0, 0.5, act, 6), rule64())) CHECK(q == doctest::Approx(0.26).epsilon(1e-14));
    }
  }

  TEST_CASE("identity closed form with bias, noise and gain") {
    NetworkConfig c = net(0.9, 0.3, "identity", 12, 0.2);
    c.sigma_x = 1.7;
    const auto q = q_forward(c, rule64());
    const double sw2 = 0.81, add = 0.09 + 0.04;
    for (int l = 1; l <= 12; ++l) {
      double geo = 0.0;
      for (int j = 0; j < l; ++j) geo += std::pow(sw2, j);
      CHECK(q[l - 1] == doctest::Approx(std::pow(sw2, l) * 1.7 * 1.7 + add * geo).epsilon(1e-12));
    }
  }

  TEST_CASE("lower bound by bias plus noise") {
    for (const char* act : {"tanh", "relu", "hard-tanh"}) {
      const auto c = net(1.3, 0.4, act, 20);
      for (double q : q_forward(c, rule64())) CHECK(q >= 0.16 + 0.01);
    }
  }

  TEST_CASE("low quadrature order is rejected") {
    CHECK_THROWS_AS(q_forward(net(1.0, 0.0), numerics::gauss_hermite_rule(16)), ConfigError);
  }

  TEST_CASE("invalid network configs") {
    CHECK_THROWS_AS(net(1.0, 0.0, "tanh", 10, 0.0).validate(), ConfigError);
    CHECK_THROWS_AS(net(-1.0, 0.0).validate(), ConfigError);
    CHECK_THROWS_AS(net(1.0, 0.0, "softsign").validate(), ConfigError);
    NetworkConfig c = net(1.0, 0.0);
    c.width = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("tanh second moment matches the Monte-Carlo oracle") {
    const auto c = net(2.5, 0.3, "tanh", 2);
    const auto q = q_forward(c, rule64());
    const double a = std::sqrt(q[0]);
    const double mc = 6.25 * oracle::mc_expect_1d([a](double z) { return std::pow(std::tanh(a * z), 2); }) + 0.09 + 0.01;
    CHECK(std::abs(q[1] - mc) < 1e-4);
  }
}

TEST_SUITE("input correlation") {
  TEST_CASE("no signal path without weights") {
    const auto c = net(0.0, 0.5, "tanh", 5);
    const auto cc = cross_correlation_forward(c, q_forward(c, rule64()), rule64());
    for (const auto& x : cc) {
      CHECK(x.s == 0.0);
      CHECK(x.rho == 0.0);
    }
  }

  TEST_CASE("identity network: s = sw^(2l) sx^4") {
    NetworkConfig c = net(1.2, 0.1, "identity", 8);
    c.sigma_x = 0.8;
    const auto q = q_forward(c, rule64());
    const auto cc = cross_correlation_forward(c, q, rule64());
    CHECK(cc[0].rho == doctest::Approx(1.2 * 0.8 / std::sqrt(q[0])).epsilon(1e-14));
    for (int l = 1; l <= 8; ++l) {
      const double s = std::pow(1.44, l) * std::pow(0.8, 4);
      CHECK(cc[l - 1].s == doctest::Approx(s).epsilon(1e-10));
      CHECK(cc[l - 1].rho == doctest::Approx(std::sqrt(s) / 0.8 / std::sqrt(q[l - 1])).epsilon(1e-10));
    }
  }

  TEST_CASE("identity rho follows the linear-network covariance") {
    const auto c = net(1.0, 0.0, "identity", 3);
    const auto q = q_forward(c, rule64());
    const auto cc = cross_correlation_forward(c, q, rule64());
    CHECK(cc[0].rho == doctest::Approx(1.0 / std::sqrt(1.01)).epsilon(1e-12));
    CHECK(cc[1].rho == doctest::Approx(1.0 / std::sqrt(1.02)).epsilon(1e-12));
    CHECK(cc[2].rho == doctest::Approx(1.0 / std::sqrt(1.03)).epsilon(1e-12));
  }

  TEST_CASE("tanh correlation matches the two-dimensional oracle") {
    const auto c = net(1.5, 0.4, "tanh", 6);
    const auto q = q_forward(c, rule64());
    const auto cc = cross_correlation_forward(c, q, rule64());
    for (std::size_t l = 1; l < q.size(); ++l) {
      const double a = std::sqrt(q[l - 1]);
      const double r = cc[l - 1].rho;
      const double k = std::sqrt(1.0 - r * r);
      const double j = oracle::mc_expect_2d([&](double z1, double z2) { return z1 * std::tanh(a * (r * z1 + k * z2)); });
      INFO("layer " << l + 1);
      CHECK(std::abs(cc[l].rho - 1.5 * j / std::sqrt(q[l])) < 1e-4);
    }
  }

  TEST_CASE("current-layer variance switch changes the result") {
    const auto c = net(1.5, 0.4, "tanh", 6);
    const auto q = q_forward(c, rule64());
    const auto a = cross_correlation_forward(c, q, rule64());
    const auto b = cross_correlation_forward(c, q, rule64(), MeanFieldOptions{true});
    CHECK(a[0].rho == b[0].rho);
    CHECK(a[3].rho != doctest::Approx(b[3].rho).epsilon(1e-6));
  }

  TEST_CASE("length mismatch is rejected") {
    const auto c = net(1.0, 0.0, "tanh", 4);
    const std::vector<double> q{1.0, 1.0};
    CHECK_THROWS_AS(cross_correlation_forward(c, q, rule64()), ConfigError);
  }
}

TEST_SUITE("conditional variance") {
  TEST_CASE("zero cross term keeps q") {
    const std::vector<double> q{1.0, 2.0, 3.0}, s{0.0, 0.0, 0.0};
    const auto r = qc_compute(q, s, 1.3);
    CHECK(r.q_c == q);
    CHECK_FALSE(r.singular);
  }

  TEST_CASE("linear first layer leaves the noise variance") {
    const auto t = analytic_mi_bound(net(1.0, 0.0, "identity", 1), rule64());
    CHECK(t.q_c[0] == doctest::Approx(0.01).epsilon(1e-12));
  }

  TEST_CASE("exact cancellation hits the floor and flags it") {
    const std::vector<double> q{1.0}, s{1.0};
    const auto r = qc_compute(q, s, 1.0);
    CHECK(r.singular);
    CHECK(r.q_c[0] == 1e-300);
  }

  TEST_CASE("clearly negative values are inconsistent") {
    const std::vector<double> q{1.0}, s{1.1};
    CHECK_THROWS_AS(qc_compute(q, s, 1.0), InconsistencyError);
  }
}

TEST_SUITE("analytic bound") {
  TEST_CASE("zero weights give zero bound") {
    const auto t = analytic_mi_bound(net(0.0, 0.3, "tanh", 7), rule64());
    for (double b : t.bound_per_unit) CHECK(b == 0.0);
  }

  TEST_CASE("identity first layer: 45 log 101 nats at width 90") {
    const auto t = analytic_mi_bound(net(1.0, 0.0, "identity", 2), rule64());
    CHECK(t.bound(1) == doctest::Approx(45.0 * std::log(101.0)).epsilon(1e-12));
    CHECK(t.bound(1) == doctest::Approx(207.68).epsilon(1e-4));
  }

  TEST_CASE("identity network equals the closed-form channel") {
    const auto c = net(0.95, 0.2, "identity", 15, 0.15);
    const auto t = analytic_mi_bound(c, rule64());
    const double add = 0.04 + 0.0225;
    for (int l = 1; l <= 15; ++l) {
      double geo = 0.0;
      for (int j = 0; j < l; ++j) geo += std::pow(0.9025, j);
      const double signal = std::pow(0.9025, l);
      const double q = signal + add * geo;
      CHECK(std::abs(t.bound_per_unit[l - 1] - 0.5 * std::log(q / (q - signal))) < 1e-10);
    }
  }

  TEST_CASE("invariants over a grid of configs") {
    for (const char* act : {"tanh", "relu", "hard-tanh", "identity"}) {
      for (double sw : {0.3, 0.8, 1.0, 1.4, 2.2, 3.0}) {
        for (double sb : {0.0, 0.2, 1.0}) {
          const auto t = analytic_mi_bound(net(sw, sb, act, 25), rule64());
          INFO(act << " sw=" << sw << " sb=" << sb);
          for (int l = 0; l < t.depth(); ++l) {
            CHECK(t.q[l] >= sb * sb + 0.01 - 1e-15);
            CHECK(t.q_c[l] >= 0.0);
            CHECK(t.q_c[l] <= t.q[l]);
            CHECK(std::abs(t.rho[l]) <= 1.0 + 1e-9);
            CHECK(t.bound_per_unit[l] >= 0.0);
            CHECK(t.bound_per_unit[l] == doctest::Approx(0.5 * std::log(t.q[l] / t.q_c[l])));
          }
        }
      }
    }
  }

  TEST_CASE("per-unit fields do not depend on width") {
    auto c = net(1.25, 0.2, "tanh", 17);
    c.width = 30;
    const auto a = analytic_mi_bound(c, rule64());
    for (int n : {60, 90}) {
      c.width = n;
      const auto b = analytic_mi_bound(c, rule64());
      CHECK(a.q == b.q);
      CHECK(a.rho == b.rho);
      CHECK(a.q_c == b.q_c);
      CHECK(a.bound_per_unit == b.bound_per_unit);
      CHECK(b.bound(17) == doctest::Approx(n * a.bound_per_unit[16]));
    }
  }
}

TEST_SUITE("edge of chaos") {
  TEST_CASE("q* closed forms") {
    CHECK(q_star(0.5, 1.0, get_activation("identity"), rule64()) == doctest::Approx(4.0 / 3.0).epsilon(1e-9));
    CHECK(q_star(0.0, 0.7, get_activation("tanh"), rule64()) == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(q_star(1.0, 0.5, get_activation("relu"), rule64()) == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("q* is the plateau of the noiseless recursion") {
    struct Case {
      const char* act;
      double sw, sb;
    };
    for (const Case& k : {Case{"tanh", 2.5, 0.3}, Case{"tanh", 1.5, 0.5}, Case{"tanh", 0.8, 0.2},
                          Case{"relu", 1.2, 0.4}, Case{"hard-tanh", 1.6, 0.3}, Case{"identity", 0.7, 0.5}}) {
      const double qs = q_star(k.sw, k.sb, get_activation(k.act), rule64());
      const auto q = q_forward(net(k.sw, k.sb, k.act, 200, 1e-7), rule64());
      INFO(k.act << " " << k.sw << " " << k.sb);
      CHECK(std::abs(q.back() - qs) < 1e-6);
      const auto q20 = q_forward(net(k.sw, k.sb, k.act, 20, 1e-7), rule64());
      if (std::string(k.act) == "tanh" && k.sw == 2.5) CHECK(std::abs(q20.back() - qs) < 1e-6);
    }
  }

  TEST_CASE("q* diverges for expanding linear maps") {
    CHECK_THROWS_AS(q_star(1.5, 0.1, get_activation("identity"), rule64()), FixedPointError);
  }

  TEST_CASE("tanh at unit gain sits on the curve with zero bias") {
    const auto p = eoc_solve(1.0, get_activation("tanh"), rule64());
    REQUIRE(p);
    CHECK(p->sigma_b >= 0.0);
    CHECK(p->sigma_b <= 1e-3);
    CHECK_FALSE(p->degenerate);
  }

  TEST_CASE("identity is degenerate at unit gain and rootless elsewhere") {
    const auto p = eoc_solve(1.0, get_activation("identity"), rule64());
    REQUIRE(p);
    CHECK(p->degenerate);
    CHECK(p->sigma_b == 0.0);
    CHECK_FALSE(eoc_solve(1.2, get_activation("identity"), rule64()));
    CHECK_FALSE(eoc_solve(0.8, get_activation("identity"), rule64()));
  }

  TEST_CASE("tanh at 2.5: chi_1 = 1 by an independent Monte-Carlo check") {
    const auto p = eoc_solve(2.5, get_activation("tanh"), rule64());
    REQUIRE(p);
    const double a = std::sqrt(p->q_star);
    const double chi = 6.25 * oracle::mc_expect_1d([a](double z) { return std::pow(std::cosh(a * z), -4); });
    CHECK(std::abs(chi - 1.0) < 1e-3);
    const double fp = 6.25 * oracle::mc_expect_1d([a](double z) { return std::pow(std::tanh(a * z), 2); }) +
                      p->sigma_b * p->sigma_b;
    CHECK(std::abs(fp - p->q_star) < 1e-4);
  }

  TEST_CASE("curve points satisfy both residuals") {
    std::vector<double> grid;
    for (double sw = 0.5; sw <= 4.0 + 1e-9; sw += 0.25) grid.push_back(sw);
    const Activation& phi = get_activation("tanh");
    const auto curve = eoc_curve(grid, phi, rule64());
    CHECK(curve.points.size() == grid.size() - 2);  // 0.5 and 0.75 have no root
    double prev_sb = -1.0;
    for (const auto& p : curve.points) {
      INFO("sigma_w " << p.sigma_w);
      CHECK(std::abs(chi1(p.sigma_w, p.q_star, phi, rule64()) - 1.0) <= 1e-6);
      CHECK(p.sigma_b > prev_sb);
      prev_sb = p.sigma_b;
    }
  }

  TEST_CASE("curve matches an adaptive-quadrature reference") {
    // (sigma_w, sigma_b, q*) from scipy.integrate.quad with a bracketing root finder
    const double ref[][3] = {{1.5, 0.43144379266828187, 1.1196615052419914},
                             {2.0, 1.2790454424520885, 4.207895030937792},
                             {2.5, 2.4391553056537942, 10.731334753666042},
                             {3.0, 3.883382367074697, 22.59651320839076}};
    for (const auto& r : ref) {
      const auto p = eoc_solve(r[0], get_activation("tanh"), rule64());
      REQUIRE(p);
      INFO("sigma_w " << r[0]);
      CHECK(std::abs(p->sigma_b - r[1]) < 1e-6);
      CHECK(std::abs(p->q_star - r[2]) < 1e-6 * r[2]);
    }
  }

  TEST_CASE("curve edge cases and phases") {
    const Activation& phi = get_activation("tanh");
    const std::vector<double> one{1.0};
    const auto c1 = eoc_curve(one, phi, rule64());
    REQUIRE(c1.points.size() == 1);
    CHECK(c1.points[0].sigma_b <= 1e-3);
    CHECK(c1.points[0].q_star < 1e-6);

    const std::vector<double> below{0.3, 0.6, 0.9};
    CHECK(eoc_curve(below, phi, rule64()).points.empty());

    const std::vector<double> bad{1.0, 0.9};
    CHECK_THROWS_AS(eoc_curve(bad, phi, rule64()), ConfigError);
    CHECK_THROWS_AS(eoc_solve(0.0, phi, rule64()), ConfigError);

    CHECK(classify_phase(2.5, 0.3, phi, rule64()) == Phase::chaotic);
    CHECK(classify_phase(0.7, 0.3, phi, rule64()) == Phase::ordered);
    const auto p = eoc_solve(2.0, phi, rule64());
    REQUIRE(p);
    CHECK(classify_phase(2.0, p->sigma_b, phi, rule64()) == Phase::critical);
    CHECK(phase_name(Phase::chaotic) == "chaotic");
  }
}
