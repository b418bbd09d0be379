// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mixlaw/dlc.hpp"
#include "mixlaw/errors.hpp"
#include "support/fixtures.hpp"

using namespace mixlaw;

TEST_CASE("feature extraction on flat and linear curves") {
  auto flat = fixtures::curve_from_function([](std::int64_t) { return 2.5; }, 20000);
  const DlcFeatures f = extract_features(flat, CorpusSide::Domain);
  CHECK(f.k1 == 2.5);
  CHECK(f.k2 == 0.0);
  CHECK(f.k3 == 0.0);

  auto linear = fixtures::curve_from_function(
      [](std::int64_t step) { return 5.0 - 0.1 * (static_cast<double>(step) / 1000.0); }, 20000);
  const DlcFeatures g = extract_features(linear, CorpusSide::Domain);
  CHECK(g.k1 == doctest::Approx(4.9).epsilon(1e-12));
  CHECK(g.k2 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(g.k3) <= 1e-12);
}

TEST_CASE("k3 telescoping identity on random curves") {
  std::mt19937_64 rng(83);
  std::uniform_real_distribution<double> u(0.5, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> losses(12);
    for (double& l : losses) l = u(rng);
    LossCurve curve;
    curve.domain_name = "random";
    curve.n = 1.0;
    curve.r_domain = 1.0;
    for (int i = 0; i < 12; ++i)
      curve.samples.push_back({1000 * i, losses[i], losses[i]});
    const DlcFeatures f = extract_features(curve, CorpusSide::Domain);
    const double delta_10 = losses[11] - losses[10];
    const double delta_0 = losses[1] - losses[0];
    CHECK(std::abs(f.k3 - (delta_10 - delta_0) / 10.0) <= 1e-12);
  }
}

TEST_CASE("feature extraction consumes only the first 12 evaluation points") {
  auto decay = [](std::int64_t step) {
    return 4.0 * std::exp(-static_cast<double>(step) / 30000.0) + 1.0;
  };
  auto long_curve = fixtures::curve_from_function(decay, 200000);
  auto prefix_curve = fixtures::curve_from_function(decay, 11000);
  REQUIRE(prefix_curve.samples.size() == 12);
  const DlcFeatures from_long = extract_features(long_curve, CorpusSide::General);
  const DlcFeatures from_prefix = extract_features(prefix_curve, CorpusSide::General);
  CHECK(from_long.k1 == from_prefix.k1);
  CHECK(from_long.k2 == from_prefix.k2);
  CHECK(from_long.k3 == from_prefix.k3);
}

TEST_CASE("missing required steps raise InsufficientDataError") {
  auto short_curve = fixtures::curve_from_function([](std::int64_t) { return 2.0; }, 9000);
  CHECK_THROWS_AS(extract_features(short_curve, CorpusSide::Domain), InsufficientDataError);

  auto no_zero = fixtures::curve_from_function([](std::int64_t) { return 2.0; }, 20000, 1000,
                                               false);
  CHECK_THROWS_AS(extract_features(no_zero, CorpusSide::Domain), InsufficientDataError);
}

TEST_CASE("k_value forms") {
  DlcFeatures f{2.0, 0.3, -0.05};
  CHECK(k_value({KRepr::K3, 1.0, 2.0, std::nullopt}, f) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(k_value({KRepr::K1, 0.0, 0.0, std::nullopt}, f) == 0.0);
  CHECK(k_value({KRepr::K3, 1.5, 0.0, std::nullopt}, f) ==
        k_value({KRepr::K1, 1.5, 0.0, std::nullopt}, f));
  CHECK(k_value({KRepr::K2, 0.0, 3.0, std::nullopt}, f) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(k_value({KRepr::K4, 1.0, 2.0, -0.1}, f) == doctest::Approx(1.1 + 2.0).epsilon(1e-12));

  DlcFeatures tiny_k3{2.0, 0.3, 1e-13};
  CHECK_THROWS_AS(k_value({KRepr::K4, 1.0, 1.0, 1.0}, tiny_k3), std::domain_error);
  DlcFeatures bad_k1{0.0, 0.3, -0.05};
  CHECK_THROWS_AS(k_value({KRepr::K3, 1.0, 1.0, std::nullopt}, bad_k1), std::invalid_argument);
}

TEST_CASE("cross-domain synthetic recovery over four domains") {
  auto fixture = fixtures::cross_fixture(4);
  FitConfig cfg = fixtures::quick_fit_config(400);
  auto [cross, result] = fit_cross_domain(fixture.domains, KRepr::K3, cfg);
  CHECK(result.metrics.r2 >= 0.999);
  CHECK(result.objective < 1e-6);
  CHECK(cross.mu > 0.0);
  REQUIRE(result.constraints.has_value());
  CHECK(result.constraints->eta_ok);
  CHECK(result.constraints->c_ok);

  // Monotonic decrease in K over the fitted feature range.
  KRepresentation repr{cross.k_repr, cross.w1, cross.w2, cross.w3};
  double k_min = 1e300, k_max = 0;
  for (const auto& [name, data] : fixture.domains) {
    const double k = k_value(repr, data.features);
    CHECK(k > 0.0);
    k_min = std::min(k_min, k);
    k_max = std::max(k_max, k);
  }
  double prev = evaluate(cross, 1.8, 1.0, 0.5, k_min);
  for (int i = 1; i <= 20; ++i) {
    const double k = k_min + (k_max - k_min) * i / 20.0;
    const double cur = evaluate(cross, 1.8, 1.0, 0.5, k);
    CHECK(cur <= prev);
    prev = cur;
  }

  // Held-out domain scored through the derived law.
  auto six = fixtures::cross_fixture(6);
  const DomainData& held = six.domains.at("medical");
  const DcptParams derived = derive_domain_law(cross, k_value(repr, held.features));
  const FitMetrics held_metrics = metrics(derived, held.points, cfg.delta);
  CHECK(held_metrics.r2 >= 0.99);
}

TEST_CASE("uniformity: derived evaluations equal cross evaluations exactly") {
  auto fixture = fixtures::cross_fixture(2);
  FitConfig cfg = fixtures::quick_fit_config(120);
  auto [cross, result] = fit_cross_domain(fixture.domains, KRepr::K3, cfg);
  KRepresentation repr{cross.k_repr, cross.w1, cross.w2, cross.w3};
  for (const auto& [name, data] : fixture.domains) {
    const double k = k_value(repr, data.features);
    const DcptParams law = derive_domain_law(cross, k);
    for (const DataPoint& p : data.points) {
      CHECK(evaluate(law, p.n, p.d, p.r) == evaluate(cross, p.n, p.d, p.r, k));
    }
  }
}

TEST_CASE("single domain is rejected") {
  auto fixture = fixtures::cross_fixture(1);
  CHECK_THROWS_AS(fit_cross_domain(fixture.domains, KRepr::K3, fixtures::quick_fit_config(10)),
                  std::invalid_argument);
}

TEST_CASE("cross objective/gradient agree with finite differences") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> un(0.3, 8.0), ud(0.05, 30.0), ur(0.05, 1.0),
      ul(0.5, 6.0);
  std::vector<DataPoint> points;
  std::vector<int> domain_of;
  std::vector<DlcFeatures> features = {{1.2, 0.5, -0.02}, {2.4, 0.2, -0.05}, {3.1, 0.9, -0.01}};
  for (int i = 0; i < 12; ++i) {
    points.push_back({un(rng), ud(rng), ur(rng), ul(rng)});
    domain_of.push_back(i % 3);
  }
  FitConfig cfg;
  const double d_min = 0.05;
  std::uniform_real_distribution<double> ue(-1, 1), ua(-1, 2), ub(-3, 1), uc(-3, 1),
      uab(0.1, 0.8), ug(-1, 0.7), ue1(-1.5, 0.5), ueps(0.05, 0.8), uf(-1, 1), umu(0.3, 1.5),
      uw(0.5, 2.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    CrossReparamVector v;
    v.core = ReparamVector{ue(rng), ua(rng), ub(rng), uc(rng), uab(rng),
                           uab(rng), ug(rng),  ue1(rng), ueps(rng)};
    v.f = uf(rng);
    v.mu = umu(rng);
    v.w1 = uw(rng);
    v.w2 = uw(rng);
    const CrossReparamVector g =
        cross_gradient(v, points, domain_of, features, KRepr::K3, d_min, cfg);
    auto eval = [&](const CrossReparamVector& w) {
      return cross_objective(w, points, domain_of, features, KRepr::K3, d_min, cfg);
    };
    auto check_coord = [&](double* slot, double analytic) {
      const double save = *slot;
      const double h = 1e-6 * std::max(std::abs(save), 1.0);
      *slot = save + h;
      const double fp = eval(v);
      *slot = save - h;
      const double fm = eval(v);
      *slot = save;
      const double fd = (fp - fm) / (2 * h);
      const double scale = std::max(std::abs(analytic), std::abs(fd));
      if (scale < 1e-10) return;
      ++checked;
      CHECK(std::abs(analytic - fd) / scale < 1e-5);
    };
    check_coord(&v.core.e, g.core.e);
    check_coord(&v.core.a, g.core.a);
    check_coord(&v.core.b, g.core.b);
    check_coord(&v.core.c1, g.core.c1);
    check_coord(&v.core.alpha, g.core.alpha);
    check_coord(&v.core.beta, g.core.beta);
    check_coord(&v.core.g, g.core.g);
    check_coord(&v.core.eta1, g.core.eta1);
    check_coord(&v.core.eps_raw, g.core.eps_raw);
    check_coord(&v.f, g.f);
    check_coord(&v.mu, g.mu);
    check_coord(&v.w1, g.w1);
    check_coord(&v.w2, g.w2);
  }
  CHECK(checked > 1000);
}
