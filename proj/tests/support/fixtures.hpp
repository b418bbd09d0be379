// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <random>
#include <vector>

#include "mixlaw/dlc.hpp"
#include "mixlaw/fitter.hpp"
#include "mixlaw/ingest.hpp"
#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"

namespace fixtures {

using namespace mixlaw;

// Constraint-satisfying generator laws used across the suites. With the
// default conversion, steps >= 1000 give d_min = 0.131072 and both laws have
// C comfortably above C0(d_min).
inline DcptParams gen_domain_law() {
  DcptParams p;
  p.variant = DcptVariant::L3;
  p.E = 1.1;
  p.A = 0.9;
  p.alpha = 0.34;
  p.B = 0.065;
  p.beta = 0.32;
  p.eta = 1.45;
  p.C = 0.35;
  p.gamma = 1.7;
  p.epsilon = 0.25;
  return p;
}

inline DcptParams gen_general_law() {
  DcptParams p;
  p.variant = DcptVariant::L3;
  p.E = 1.6;
  p.A = 0.75;
  p.alpha = 0.31;
  p.B = 0.05;
  p.beta = 0.30;
  p.eta = 1.6;
  p.C = 0.4;
  p.gamma = 1.4;
  p.epsilon = 0.3;
  return p;
}

// The hand-checkable L3 record from the worked evaluation examples.
inline DcptParams reference_l3() {
  DcptParams p;
  p.variant = DcptVariant::L3;
  p.E = 1.0;
  p.A = 2.0;
  p.alpha = 1.0;
  p.B = 1.0;
  p.beta = 1.0;
  p.eta = 2.0;
  p.C = 1.0;
  p.gamma = 1.0;
  p.epsilon = 0.1;
  return p;
}

inline const std::vector<double>& paper_ratios() {
  static const std::vector<double> r = {0.0, 0.1, 0.2, 0.33, 0.5, 0.67, 0.8, 0.9, 1.0};
  return r;
}

inline SynthDesign standard_design(double noise = 0.0, std::uint64_t seed = 7,
                                   int step_stride = 1000, int max_step = 20000) {
  SynthDesign design;
  design.model_sizes = {0.5, 1.8, 4.0};
  design.domain_ratios = paper_ratios();
  for (int s = step_stride; s <= max_step; s += step_stride) design.eval_steps.push_back(s);
  design.noise_rel_std = noise;
  design.seed = seed;
  return design;
}

inline SynthDesign heldout_design(double noise = 0.0, std::uint64_t seed = 8) {
  SynthDesign design;
  design.model_sizes = {1.0, 2.5, 6.0};
  design.domain_ratios = {0.15, 0.25, 0.4, 0.6, 0.75, 0.85, 0.95};
  for (int s = 1500; s <= 19500; s += 2000) design.eval_steps.push_back(s);
  design.noise_rel_std = noise;
  design.seed = seed;
  return design;
}

inline std::vector<DataPoint> synth_points(const SynthDesign& design,
                                           CorpusSide side = CorpusSide::Domain) {
  auto curves = synthesize_curves(gen_general_law(), gen_domain_law(), design);
  return curves_to_points(curves, side);
}

// Small configs keep the unit suites fast; the acceptance binary exercises
// the default cap.
inline FitConfig quick_fit_config(long starts = 200) {
  FitConfig cfg;
  cfg.max_grid_candidates = starts;
  return cfg;
}

// Draws a random constraint-satisfying L3 record. C is placed a random
// factor above C0 for the given d_min.
inline DcptParams random_constrained_l3(std::mt19937_64& rng, double d_min) {
  std::uniform_real_distribution<double> uE(0.6, 2.0), uA(0.4, 1.5), ualpha(0.25, 0.6),
      uB(0.02, 0.12), ubeta(0.2, 0.5), ueta(1.2, 2.2), ugamma(0.8, 2.2), ueps(0.1, 0.6),
      ulift(1.2, 3.0);
  DcptParams p;
  p.variant = DcptVariant::L3;
  p.E = uE(rng);
  p.A = uA(rng);
  p.alpha = ualpha(rng);
  p.B = uB(rng);
  p.beta = ubeta(rng);
  p.eta = ueta(rng);
  p.gamma = ugamma(rng);
  p.epsilon = ueps(rng);
  p.C = 0.0;
  p.C = c0_bound(p, d_min) * ulift(rng);
  return p;
}

// Synthetic cross-domain truth with per-domain features; used by the dlc and
// validation suites.
struct CrossFixture {
  CrossDomainParams truth;
  std::map<std::string, DomainData> domains;
};

inline CrossFixture cross_fixture(int domain_count, double noise = 0.0, std::uint64_t seed = 11) {
  CrossFixture out;
  DcptParams base = gen_domain_law();
  base.E = 0.8;
  out.truth.base = base;
  out.truth.F = 0.9;
  out.truth.mu = 0.8;
  out.truth.k_repr = KRepr::K3;
  out.truth.w1 = 1.6;
  out.truth.w2 = 0.9;
  static const char* names[6] = {"chemistry", "code", "law", "math", "medical", "music"};
  static const DlcFeatures feats[6] = {{1.2, 0.5, -0.02}, {2.4, 0.2, -0.05}, {3.1, 0.9, -0.01},
                                       {1.7, 1.4, -0.03}, {2.0, 0.7, -0.04}, {1.4, 1.1, -0.06}};
  KRepresentation repr{out.truth.k_repr, out.truth.w1, out.truth.w2, std::nullopt};
  for (int i = 0; i < domain_count && i < 6; ++i) {
    DcptParams law = derive_domain_law(out.truth, k_value(repr, feats[i]));
    SynthDesign design;
    design.model_sizes = {0.5, 1.8, 4.0};
    design.domain_ratios = {0.2, 0.4, 0.6, 0.8, 1.0};
    for (int s = 2000; s <= 20000; s += 2000) design.eval_steps.push_back(s);
    design.noise_rel_std = noise;
    design.seed = seed + static_cast<std::uint64_t>(i);
    auto curves = synthesize_curves(law, law, design, {}, names[i]);
    DomainData data;
    data.points = curves_to_points(curves, CorpusSide::Domain);
    data.features = feats[i];
    out.domains[names[i]] = std::move(data);
  }
  return out;
}

// Loss curve following an explicit function of the step.
template <typename Fn>
LossCurve curve_from_function(Fn&& loss_at_step, std::int64_t max_step,
                              std::int64_t stride = 1000, bool include_step0 = true) {
  LossCurve curve;
  curve.domain_name = "synthetic";
  curve.n = 1.8;
  curve.r_domain = 1.0;
  if (include_step0) {
    const double l0 = loss_at_step(std::int64_t{0});
    curve.samples.push_back(CurveSample{0, l0, l0});
  }
  for (std::int64_t s = stride; s <= max_step; s += stride) {
    const double l = loss_at_step(s);
    curve.samples.push_back(CurveSample{s, l, l});
  }
  return curve;
}

}  // namespace fixtures
