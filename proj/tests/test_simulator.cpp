#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "edtl/simulator.hpp"

using namespace edtl;

TEST_CASE("drying_constant matches Eq. evaluation") {
  // at T = 130.64 the exponent is exactly -1
  CHECK(drying_constant(130.64) == doctest::Approx(0.0026450531820226704).epsilon(1e-15));
  // machine-precision agreement with direct evaluation on a grid
  for (double t = 200.0; t <= 600.0; t += 7.3)
    CHECK(drying_constant(t) == 0.00719 * std::exp(-130.64 / t));
  // asymptote: K -> 0.00719 as T -> infinity
  CHECK(drying_constant(1e12) == doctest::Approx(0.00719).epsilon(1e-9));
  // strictly increasing in T
  double prev = drying_constant(200.0);
  for (double t = 205.0; t <= 600.0; t += 5.0) {
    const double k = drying_constant(t);
    CHECK(k > prev);
    prev = k;
  }
  CHECK_THROWS_AS(drying_constant(0.0), std::invalid_argument);
  CHECK_THROWS_AS(drying_constant(-5.0), std::invalid_argument);
}

TEST_CASE("drying_rate basics") {
  CHECK(drying_rate(0.3, 0.3, 0.005) == 0.0);
  CHECK(drying_rate(0.3, 0.1, 0.005) == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(drying_rate(0.1, 0.3, 0.005) < 0.0);
  CHECK_THROWS_AS(drying_rate(0.3, 0.1, -1.0), std::invalid_argument);
}

TEST_CASE("closed-batch Euler matches the analytic solution") {
  // G_in = G_out = 0, constant mass: M(t) = M_e + (M0 - M_e) e^{-K t}
  DryingState s;
  s.moisture = 0.6;
  s.equilibrium_moisture = 0.05;
  s.air_temp = 430.0;
  s.fabric_mass = 150.0;
  const double k = drying_constant(430.0);
  const double dt = 0.1;

  double worst = 0.0;
  double t = 0.0;
  DryingState cur = s;
  while (t < 600.0 - 1e-9) {
    cur = step_moisture(cur, dt);
    t += dt;
    const double analytic = 0.05 + (0.6 - 0.05) * std::exp(-k * t);
    worst = std::max(worst, std::abs(cur.moisture - analytic));
    CHECK(cur.moisture >= s.equilibrium_moisture);
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("Euler error halves with dt (first order)") {
  const double k = drying_constant(430.0);
  auto euler_err = [&](double dt) {
    DryingState s;
    s.moisture = 0.6;
    s.equilibrium_moisture = 0.05;
    s.air_temp = 430.0;
    s.fabric_mass = 1.0;
    double t = 0.0;
    while (t < 200.0 - 1e-9) {
      s = step_moisture(s, dt);
      t += dt;
    }
    return std::abs(s.moisture - (0.05 + 0.55 * std::exp(-k * t)));
  };
  const double e1 = euler_err(0.4);
  const double e2 = euler_err(0.2);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.20));
}

TEST_CASE("moisture decreases toward equilibrium, mass balance respected") {
  SUBCASE("decay toward M_e in the closed batch") {
    DryingState s;
    s.moisture = 0.5;
    s.equilibrium_moisture = 0.1;
    s.air_temp = 420.0;
    s.fabric_mass = 10.0;
    const double k = drying_constant(420.0);
    double prev = s.moisture;
    const double horizon = 5.0 / k;
    for (double t = 0.0; t < horizon; t += 1.0) {
      s = step_moisture(s, 1.0);
      CHECK(s.moisture <= prev);
      prev = s.moisture;
    }
    CHECK(std::abs(s.moisture - 0.1) < 0.01 * (0.5 - 0.1));
  }
  SUBCASE("mass exhaustion is an error") {
    DryingState s;
    s.moisture = 0.5;
    s.equilibrium_moisture = 0.1;
    s.air_temp = 420.0;
    s.fabric_mass = 1.0;
    s.flow_out = 2.0;  // drains the batch within a step
    CHECK_THROWS_AS(step_moisture(s, 1.0), std::runtime_error);
  }
  SUBCASE("balanced flows with matched moisture reduce to pure drying") {
    DryingState s;
    s.moisture = 0.4;
    s.equilibrium_moisture = 0.1;
    s.air_temp = 430.0;
    s.fabric_mass = 5.0;
    s.flow_in = 0.3;
    s.flow_out = 0.3;
    s.moisture_in = 0.4;
    s.moisture_out = 0.4;
    const auto next = step_moisture(s, 0.5);
    const double k = drying_constant(430.0);
    const double expected = 0.4 - 0.5 * k * (0.4 - 0.1);
    CHECK(next.moisture == doctest::Approx(expected).epsilon(1e-12));
    CHECK(next.fabric_mass == 5.0);
  }
}

TEST_CASE("synth_targets: determinism and monotone electricity") {
  const LineProfile profile = profile_beta();
  SimConfig cfg;
  cfg.dt = 0.5;

  LineProfile noiseless = profile;
  noiseless.noise_level = 0.0;

  std::vector<double> x(profile.feature_names.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto [lo, hi] = profile.range_of(profile.feature_names[i]);
    x[i] = 0.5 * (lo + hi);
  }

  SUBCASE("zero noise, identical inputs -> identical targets") {
    Rng r1(1), r2(2);  // rng must not matter at zero noise
    const auto a = synth_targets(x, noiseless, cfg, r1);
    const auto b = synth_targets(x, noiseless, cfg, r2);
    CHECK(a == b);
  }

  SUBCASE("raising all temperature settings strictly raises noiseless E") {
    Rng rng(1);
    auto hotter = x;
    for (std::size_t i = 0; i < profile.feature_names.size(); ++i)
      if (profile.feature_names[i].starts_with("temp_zone")) hotter[i] += 15.0;
    const auto cool = synth_targets(x, noiseless, cfg, rng);
    const auto hot = synth_targets(hotter, noiseless, cfg, rng);
    CHECK(hot[0] > cool[0]);
  }

  SUBCASE("raising fan speeds raises noiseless E") {
    Rng rng(1);
    auto faster = x;
    for (std::size_t i = 0; i < profile.feature_names.size(); ++i)
      if (profile.feature_names[i].starts_with("fan_speed")) faster[i] += 120.0;
    const auto slow = synth_targets(x, noiseless, cfg, rng);
    const auto fast = synth_targets(faster, noiseless, cfg, rng);
    CHECK(fast[0] > slow[0]);
  }
}

TEST_CASE("shift offsets move the conditional mean (Eq. (4) premise)") {
  LineProfile base = profile_beta();
  base.noise_level = 0.02;
  LineProfile shifted = base;
  shifted.shift_e.offset += 40.0;  // differ only in the shift knob

  SimConfig cfg;
  cfg.dt = 0.5;
  Rng probe(3);
  double acc = 0.0;
  const int n = 400;
  std::vector<double> x(base.feature_names.size());
  for (int trial = 0; trial < n; ++trial) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto [lo, hi] = base.range_of(base.feature_names[i]);
      x[i] = probe.uniform(lo, hi);
    }
    Rng ra(derive_seed(11, trial)), rb(derive_seed(11, trial));
    const auto ya = synth_targets(x, base, cfg, ra);
    const auto yb = synth_targets(x, shifted, cfg, rb);
    acc += yb[0] - ya[0];
  }
  const double mean_delta = acc / n;
  const double noise_sd = base.noise_level * base.response.ref_e;
  CHECK(std::abs(mean_delta) > 3.0 * noise_sd);
}

TEST_CASE("generate_line basics") {
  SimConfig cfg;
  cfg.n_rows = 300;
  cfg.seed = 21;
  cfg.dt = 0.5;
  const Dataset a = generate_line(profile_beta(), cfg, TargetKind::moisture);
  const Dataset b = generate_line(profile_beta(), cfg, TargetKind::moisture);
  CHECK(a == b);
  CHECK(a.n_rows() == 300);
  CHECK(a.schema.target_name == "M");

  // moisture stays within [M_e(min), M0(max)] plus observation noise
  const double noise = profile_beta().noise_level * profile_beta().response.ref_m;
  for (const double m : a.targets) {
    CHECK(m > 0.0);
    CHECK(m < 0.75 + 6.0 * noise);
  }

  SUBCASE("lines with different sensor sets produce different schemas") {
    const Dataset src = generate_line(profile_alpha(), cfg, TargetKind::moisture);
    CHECK(src.schema.names != a.schema.names);
    CHECK(src.schema.names.size() > a.schema.names.size());
  }
}

TEST_CASE("make_domain_pair defaults and determinism") {
  const auto [src, tgt] =
      make_domain_pair(profile_alpha(), profile_beta(), 600, 80, 5,
                       TargetKind::electricity, 1.0, 600.0);
  CHECK(src.n_rows() == 600);
  CHECK(tgt.n_rows() == 80);
  const auto [src2, tgt2] =
      make_domain_pair(profile_alpha(), profile_beta(), 600, 80, 5,
                       TargetKind::electricity, 1.0, 600.0);
  CHECK(src == src2);
  CHECK(tgt == tgt2);
  CHECK_THROWS_AS(make_domain_pair(profile_alpha(), profile_beta(), 80, 600, 5,
                                   TargetKind::electricity),
                  std::invalid_argument);
}

TEST_CASE("profile lookup") {
  CHECK(profile_by_name("alpha").name == "alpha");
  CHECK(profile_by_name("beta").feature_names.size() <
        profile_by_name("alpha").feature_names.size());
  CHECK_THROWS_AS(profile_by_name("nope"), std::invalid_argument);
}
