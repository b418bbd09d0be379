// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mixlaw/laws.hpp"
#include "support/fixtures.hpp"

using namespace mixlaw;

namespace {

// Central finite differences of the L3 surface, the oracle for `partials`.
struct FdPartials {
  double dn, dd, dr;
};

FdPartials fd_partials(const DcptParams& p, double n, double d, double r) {
  auto f = [&](double nn, double dd_, double rr) { return evaluate(p, nn, dd_, rr); };
  const double hn = 1e-6 * n, hd = 1e-6 * d, hr = 1e-6 * std::max(r, 1e-2);
  FdPartials out;
  out.dn = (f(n + hn, d, r) - f(n - hn, d, r)) / (2 * hn);
  out.dd = (f(n, d + hd, r) - f(n, d - hd, r)) / (2 * hd);
  const double r_hi = std::min(r + hr, 1.0), r_lo = std::max(r - hr, 0.0);
  out.dr = (f(n, d, r_hi) - f(n, d, r_lo)) / (r_hi - r_lo);
  return out;
}

}  // namespace

TEST_CASE("L3 evaluation matches hand substitution") {
  const DcptParams p = fixtures::reference_l3();
  CHECK(evaluate(p, 2.0, 1.0, 0.9) == doctest::Approx(3.81).epsilon(1e-12));
  CHECK(evaluate(p, 2.0, 1.0, 0.0) == doctest::Approx(12.0).epsilon(1e-12));

  DcptParams constant = p;
  constant.A = 0.0;
  constant.B = 0.0;
  constant.C = 0.0;
  for (double r : {0.0, 0.3, 1.0})
    CHECK(evaluate(constant, 1.7, 2.9, r) == doctest::Approx(1.0).epsilon(1e-15));

  // 0^eta is 0 only for eta > 0; at eta <= 0 the point is out of domain.
  DcptParams bad_eta = p;
  bad_eta.eta = -1.0;
  CHECK_THROWS_AS(evaluate(bad_eta, 2.0, 1.0, 0.0), std::domain_error);
  CHECK(evaluate(bad_eta, 2.0, 1.0, 0.5) > 0.0);
}

TEST_CASE("every variant evaluates its closed form") {
  DcptParams l1;
  l1.variant = DcptVariant::L1;
  l1.E = 0.5; l1.A = 2.0; l1.alpha = 1.0; l1.B = 3.0; l1.beta = 1.0;
  l1.C = 1.0; l1.gamma = 2.0; l1.epsilon = 0.5;
  // 0.5 + 2/2 + 3/4 + 1/1 = 3.25 at n=2, d=4, r=0.5
  CHECK(evaluate(l1, 2.0, 4.0, 0.5) == doctest::Approx(3.25).epsilon(1e-12));

  DcptParams l2 = l1;
  l2.variant = DcptVariant::L2;
  l2.eta = 2.0;
  // 0.5 + 1 + (3/4 + 1)^2 = 4.5625
  CHECK(evaluate(l2, 2.0, 4.0, 0.5) == doctest::Approx(4.5625).epsilon(1e-12));

  DcptParams l4;
  l4.variant = DcptVariant::L4;
  l4.E = 0.5; l4.A = 2.0; l4.alpha = 1.0; l4.B = 3.0; l4.beta = 1.0;
  l4.C = 1.0; l4.b_base = 4.0; l4.c_base = 9.0;
  // 0.5 + 1 + 3*2/4 + 1/3 at r=0.5
  CHECK(evaluate(l4, 2.0, 4.0, 0.5) == doctest::Approx(0.5 + 1.0 + 1.5 + 1.0 / 3.0).epsilon(1e-12));

  DcptParams l5;
  l5.variant = DcptVariant::L5;
  l5.E = 0.5; l5.A = 2.0; l5.alpha = 1.0; l5.B = 3.0; l5.beta = 1.0; l5.sigma = 2.0;
  // denominator 0.5*4 + 0.5*2 = 3 -> 0.5 + 1 + 1 = 2.5
  CHECK(evaluate(l5, 2.0, 4.0, 0.5) == doctest::Approx(2.5).epsilon(1e-12));

  ChinchillaParams ch{0.5, 2.0, 3.0, 1.0, 1.0};
  CHECK(evaluate(ch, 2.0, 4.0) == doctest::Approx(0.5 + 1.0 + 0.75).epsilon(1e-12));

  OpenAiParams oa{2.0, 4.0, 1.0, 1.0};
  // (2/2)^1 + 4/4 = 2 -> 2^1
  CHECK(evaluate(oa, 2.0, 4.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("free parameter counts per law") {
  CHECK(free_parameter_count(ChinchillaParams{1, 1, 1, 0.3, 0.3}) == 5);
  CHECK(free_parameter_count(OpenAiParams{1, 1, 1, 1}) == 4);
  CHECK(free_parameter_count(fixtures::reference_l3()) == 9);
  CrossDomainParams cross;
  cross.base = fixtures::reference_l3();
  cross.F = 1;
  cross.mu = 1;
  cross.k_repr = KRepr::K3;
  CHECK(free_parameter_count(cross) == 13);
  cross.k_repr = KRepr::K4;
  CHECK(free_parameter_count(cross) == 14);
  cross.k_repr = KRepr::K1;
  CHECK(free_parameter_count(cross) == 12);
}

TEST_CASE("variant field presence is enforced") {
  DcptParams l3 = fixtures::reference_l3();
  l3.sigma = 1.0;
  CHECK_THROWS_AS(validate(l3), std::invalid_argument);

  DcptParams missing_eta = fixtures::reference_l3();
  missing_eta.eta.reset();
  CHECK_THROWS_AS(validate(missing_eta), std::invalid_argument);

  DcptParams small_eps = fixtures::reference_l3();
  small_eps.epsilon = 1e-5;
  CHECK_THROWS_AS(validate(small_eps), std::invalid_argument);

  CHECK_THROWS_AS(validate(ChinchillaParams{1.0, 1.0, 1.0, 0.0, 0.5}), std::invalid_argument);
}

TEST_CASE("partials match hand values and finite differences") {
  const DcptParams p = fixtures::reference_l3();
  const L3Partials at = partials(p, 2.0, 1.0, 0.9);
  CHECK(at.dn == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(at.dr == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(mixed_partial_dr_dd(p, 2.0, 1.0, 0.9) == doctest::Approx(-1.8).epsilon(1e-12));
  CHECK(mixed_partial_dr_dd(p, 2.0, 1.0, 0.0) == 0.0);

  DcptParams no_b = p;
  no_b.B = 0.0;
  CHECK(mixed_partial_dr_dd(no_b, 2.0, 1.0, 0.9) == 0.0);
  DcptParams no_a = p;
  no_a.A = 0.0;
  CHECK(partials(no_a, 2.0, 1.0, 0.9).dn == 0.0);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> un(0.3, 8.0), ud(0.1, 30.0), ur(0.05, 1.0);
  for (int i = 0; i < 100; ++i) {
    const DcptParams q = fixtures::random_constrained_l3(rng, 0.1);
    const double n = un(rng), d = ud(rng), r = ur(rng);
    const L3Partials analytic = partials(q, n, d, r);
    const FdPartials numeric = fd_partials(q, n, d, r);
    CHECK(analytic.dn == doctest::Approx(numeric.dn).epsilon(1e-5));
    CHECK(analytic.dd == doctest::Approx(numeric.dd).epsilon(1e-5));
    CHECK(analytic.dr == doctest::Approx(numeric.dr).epsilon(2e-5));
  }
}

TEST_CASE("c0 bound and constraint report") {
  const DcptParams p = fixtures::reference_l3();
  CHECK(c0_bound(p, 1.0) == doctest::Approx(2.42).epsilon(1e-12));
  CHECK(c0_bound(p, 0.1311) == doctest::Approx(2.42 / 0.1311).epsilon(1e-12));
  DcptParams no_b = p;
  no_b.B = 0.0;
  CHECK(c0_bound(no_b, 1.0) == 0.0);
  DcptParams bad_gamma = p;
  bad_gamma.gamma = -1.0;
  CHECK_THROWS_AS(c0_bound(bad_gamma, 1.0), std::domain_error);

  ConstraintReport report = check_constraints(p, 1.0);
  CHECK(report.eta_ok);
  CHECK_FALSE(report.c_ok);  // C = 1 < 2.42
  CHECK(report.positivity_ok);
  CHECK(report.c0 == doctest::Approx(2.42).epsilon(1e-12));

  DcptParams big_c = p;
  big_c.C = 3.0;
  CHECK(check_constraints(big_c, 1.0).c_ok);

  DcptParams eta_one = p;
  eta_one.eta = 1.0;
  CHECK_FALSE(check_constraints(eta_one, 1.0).eta_ok);
}

TEST_CASE("trend signs hold for constraint-satisfying laws") {
  std::mt19937_64 rng(77);
  const double d_min = 0.131072;
  for (int trial = 0; trial < 25; ++trial) {
    const DcptParams p = fixtures::random_constrained_l3(rng, d_min);
    REQUIRE(check_constraints(p, d_min).c_ok);
    for (double n : {0.5, 1.8, 4.0, 8.0}) {
      for (double mult : {1.0, 2.0, 8.0, 64.0}) {
        const double d = d_min * mult;
        for (double r : {0.05, 0.1, 0.33, 0.5, 0.8, 1.0}) {
          const L3Partials at = partials(p, n, d, r);
          CHECK(at.dn < 0.0);
          CHECK(at.dd < 0.0);
          CHECK(at.dr < 0.0);
          CHECK(mixed_partial_dr_dd(p, n, d, r) < 0.0);
        }
      }
    }
  }
}

TEST_CASE("fixed-ratio reduction reproduces the L3 surface bit-for-bit") {
  const DcptParams p = fixtures::reference_l3();
  const ChinchillaParams at_09 = reduce_to_chinchilla(p, 0.9);
  CHECK(at_09.E == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(at_09.B == doctest::Approx(0.81).epsilon(1e-15));

  const ChinchillaParams at_0 = reduce_to_chinchilla(p, 0.0);
  CHECK(at_0.B == 0.0);
  CHECK(at_0.E == doctest::Approx(1.0 + 1.0 / 0.1).epsilon(1e-15));

  DcptParams no_c = p;
  no_c.C = 0.0;
  const ChinchillaParams identity = reduce_to_chinchilla(no_c, 1.0);
  CHECK(identity.E == no_c.E);
  CHECK(identity.B == no_c.B);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const DcptParams q = fixtures::random_constrained_l3(rng, 0.131072);
    const double r0 = ur(rng);
    const ChinchillaParams reduced = reduce_to_chinchilla(q, r0);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        const double n = 0.4 + 0.8 * i;
        const double d = 0.15 + 2.5 * j;
        CHECK(evaluate(q, n, d, r0) == evaluate(reduced, n, d));  // identical expression order
      }
    }
  }
}

TEST_CASE("cross-domain law: uniformity and monotonic K") {
  CrossDomainParams cross;
  cross.base = fixtures::reference_l3();
  cross.F = 2.0;
  cross.mu = 0.5;
  cross.k_repr = KRepr::K3;
  cross.w1 = 1.0;
  cross.w2 = 1.0;

  const DcptParams derived = derive_domain_law(cross, 4.0);
  CHECK(derived.E == doctest::Approx(2.0).epsilon(1e-15));  // 1 + 2/sqrt(4)

  CrossDomainParams no_f = cross;
  no_f.F = 1e-300;  // F > 0 required; vanishing F leaves E unchanged
  CHECK(derive_domain_law(no_f, 4.0).E == doctest::Approx(cross.base.E).epsilon(1e-12));

  CHECK_THROWS_AS(derive_domain_law(cross, 0.0), std::domain_error);

  // Uniformity: cross evaluation at K = k0 equals the derived law everywhere.
  for (double k0 : {0.3, 1.0, 4.7}) {
    const DcptParams law = derive_domain_law(cross, k0);
    for (double n : {0.5, 2.0}) {
      for (double d : {0.2, 3.0}) {
        for (double r : {0.0, 0.4, 1.0}) {
          CHECK(evaluate(cross, n, d, r, k0) == evaluate(law, n, d, r));
        }
      }
    }
  }

  // Monotonicity: dL/dK = -mu F / K^(mu+1) < 0.
  double prev = evaluate(cross, 1.0, 1.0, 0.5, 0.25);
  for (double k = 0.5; k <= 8.0; k += 0.25) {
    const double cur = evaluate(cross, 1.0, 1.0, 0.5, k);
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("evaluate dispatch demands k exactly for cross-domain laws") {
  const LawParams l3 = fixtures::reference_l3();
  CHECK_THROWS_AS(evaluate(l3, 1.0, 1.0, 0.5, 2.0), std::invalid_argument);
  CrossDomainParams cross;
  cross.base = fixtures::reference_l3();
  cross.F = 1.0;
  cross.mu = 1.0;
  cross.w1 = 1.0;
  cross.w2 = 1.0;
  const LawParams as_law = cross;
  CHECK_THROWS_AS(evaluate(as_law, 1.0, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(as_law, 1.0, 1.0, 0.5, -1.0), std::domain_error);
  CHECK(evaluate(as_law, 1.0, 1.0, 0.5, 2.0) > 0.0);
}

TEST_CASE("artifact documents round-trip losslessly") {
  LawArtifact artifact;
  DcptParams p = fixtures::gen_domain_law();
  p.E = 1.1234567890123456;
  artifact.params = p;
  artifact.d_min = 0.131072;
  artifact.metric_huber = 1.25e-7;
  artifact.metric_r2 = 0.99991;
  artifact.fit_metadata_json = R"({"side":"domain"})";
  const std::string text = to_artifact_json(artifact);
  const LawArtifact back = artifact_from_json(text);
  const DcptParams& q = std::get<DcptParams>(back.params);
  CHECK(q.E == p.E);
  CHECK(q.A == p.A);
  CHECK(*q.C == *p.C);
  CHECK(*q.epsilon == *p.epsilon);
  CHECK(back.d_min == artifact.d_min);
  CHECK(*back.metric_huber == *artifact.metric_huber);

  CrossDomainParams cross;
  cross.base = fixtures::gen_domain_law();
  cross.F = 0.9;
  cross.mu = 0.8;
  cross.k_repr = KRepr::K4;
  cross.w1 = 1.5;
  cross.w2 = -0.25;
  cross.w3 = 0.125;
  LawArtifact cross_artifact;
  cross_artifact.params = cross;
  cross_artifact.d_min = 0.262144;
  const LawArtifact cross_back = artifact_from_json(to_artifact_json(cross_artifact));
  const CrossDomainParams& c = std::get<CrossDomainParams>(cross_back.params);
  CHECK(c.F == cross.F);
  CHECK(c.k_repr == KRepr::K4);
  CHECK(*c.w3 == *cross.w3);

  CHECK_THROWS_AS(artifact_from_json(R"({"params":{}})"), std::invalid_argument);
  CHECK_THROWS_AS(artifact_from_json(R"({"law_id":"L9","params":{}})"), std::invalid_argument);
}
