// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/dlc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mixlaw/detail/lse_objective.hpp"
#include "mixlaw/errors.hpp"
#include "mixlaw/fitter.hpp"

namespace mixlaw {

namespace {

double loss_at_step(const LossCurve& curve, std::int64_t step, CorpusSide side) {
  for (const CurveSample& s : curve.samples) {
    if (s.step == step) return side == CorpusSide::Domain ? s.loss_domain : s.loss_general;
    if (s.step > step) break;
  }
  throw InsufficientDataError("extract_features: curve '" + curve.domain_name +
                              "' has no sample at step " + std::to_string(step) +
                              " (steps 0, 1000, ..., 11000 are required)");
}

}  // namespace

DlcFeatures extract_features(const LossCurve& curve, CorpusSide side) {
  validate(curve);
  // Only the first 12 evaluation points are consumed: steps 0..11000.
  double l[12];
  for (int i = 0; i < 12; ++i) l[i] = loss_at_step(curve, 1000 * i, side);
  DlcFeatures out;
  out.k1 = l[1];
  out.k2 = l[0] - l[5];
  double sum = 0.0;
  for (int i = 0; i <= 9; ++i) {
    const double delta_i = l[i + 1] - l[i];
    const double delta_next = l[i + 2] - l[i + 1];
    sum += delta_next - delta_i;
  }
  out.k3 = sum / 10.0;
  return out;
}

double k_value(const KRepresentation& repr, const DlcFeatures& features) {
  if (!(features.k1 > 0.0)) throw std::invalid_argument("k_value: k1 must be > 0");
  if (repr.repr == KRepr::K4) {
    if (!repr.w3) throw std::invalid_argument("k_value: K4 requires w3");
    if (std::abs(features.k3) < 1e-12)
      throw std::domain_error("k_value: K4 unstable, |k3| < 1e-12");
  }
  return detail::k_from_weights(repr.repr, repr.w1, repr.w2, repr.w3.value_or(0.0), features);
}

namespace {

struct Flattened {
  std::vector<DataPoint> points;
  std::vector<int> domain_of_point;
  std::vector<DlcFeatures> features;
  std::vector<std::string> names;
};

Flattened flatten(const std::map<std::string, DomainData>& domains, double r_floor) {
  Flattened out;
  for (const auto& [name, data] : domains) {
    const int idx = static_cast<int>(out.features.size());
    out.features.push_back(data.features);
    out.names.push_back(name);
    if (!(data.features.k1 > 0.0))
      throw std::invalid_argument("fit_cross_domain: domain '" + name + "' has k1 <= 0");
    for (const DataPoint& p : data.points) {
      validate(p);
      if (p.r < r_floor) continue;
      out.points.push_back(p);
      out.domain_of_point.push_back(idx);
    }
  }
  return out;
}

}  // namespace

namespace detail {

std::pair<CrossDomainParams, FitResult> fit_cross_domain_internal(
    const std::map<std::string, DomainData>& domains, KRepr repr, const FitConfig& cfg) {
  if (domains.empty()) throw std::invalid_argument("fit_cross_domain: no domains");
  Flattened flat = flatten(domains, cfg.r_floor);
  if (flat.points.empty())
    throw std::invalid_argument("fit_cross_domain: no points at or above the r_floor");
  LseSpec spec;
  spec.l3_terms = true;
  spec.cross_term = true;
  spec.k_repr = repr;
  PreparedData data = prepare_points(flat.points, flat.domain_of_point);
  FitResult result = run_multistart(spec, data, flat.features, flat.points, cfg, nullptr, nullptr);
  CrossDomainParams cross = std::get<CrossDomainParams>(result.params);
  std::map<std::string, DomainData> fitted;
  for (std::size_t i = 0; i < flat.names.size(); ++i) {
    DomainData dd;
    dd.features = flat.features[i];
    for (std::size_t j = 0; j < flat.points.size(); ++j)
      if (flat.domain_of_point[j] == static_cast<int>(i)) dd.points.push_back(flat.points[j]);
    fitted[flat.names[i]] = std::move(dd);
  }
  result.metrics = cross_metrics(cross, fitted, cfg.delta);
  return {cross, result};
}

}  // namespace detail

std::pair<CrossDomainParams, FitResult> fit_cross_domain(
    const std::map<std::string, DomainData>& domains, KRepr repr, const FitConfig& cfg) {
  if (domains.size() < 2)
    throw std::invalid_argument("fit_cross_domain: need at least 2 domains, got " +
                                std::to_string(domains.size()));
  return detail::fit_cross_domain_internal(domains, repr, cfg);
}

FitMetrics cross_metrics(const CrossDomainParams& cross,
                         const std::map<std::string, DomainData>& domains, double delta) {
  KRepresentation repr{cross.k_repr, cross.w1, cross.w2, cross.w3};
  double huber_sum = 0.0, ss_res = 0.0, ss_tot = 0.0, mean_obs = 0.0;
  long count = 0;
  for (const auto& [name, data] : domains) {
    for (const DataPoint& p : data.points) {
      mean_obs += p.loss;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("cross_metrics: points must be non-empty");
  mean_obs /= static_cast<double>(count);
  for (const auto& [name, data] : domains) {
    const double k = k_value(repr, data.features);
    const DcptParams law = derive_domain_law(cross, k);
    for (const DataPoint& p : data.points) {
      const double pred = evaluate(law, p.n, p.d, p.r);
      huber_sum += huber(std::log(pred) - std::log(p.loss), delta);
      ss_res += (p.loss - pred) * (p.loss - pred);
      ss_tot += (p.loss - mean_obs) * (p.loss - mean_obs);
    }
  }
  if (ss_tot == 0.0)
    throw std::domain_error("cross_metrics: R^2 undefined, all observed losses are identical");
  return FitMetrics{huber_sum / static_cast<double>(count), 1.0 - ss_res / ss_tot};
}

namespace {

std::vector<double> pack_cross(const CrossReparamVector& v, KRepr repr) {
  std::vector<double> x = {v.core.e,     v.core.a,    v.core.b,    v.core.c1, v.core.alpha,
                           v.core.beta,  v.core.g,    v.core.eta1, v.core.eps_raw,
                           v.f,          v.mu};
  switch (repr) {
    case KRepr::K1: x.push_back(v.w1); break;
    case KRepr::K2: x.push_back(v.w2); break;
    case KRepr::K3: x.push_back(v.w1); x.push_back(v.w2); break;
    case KRepr::K4:
      x.push_back(v.w1);
      x.push_back(v.w2);
      x.push_back(v.w3.value_or(0.0));
      break;
  }
  return x;
}

detail::PreparedData prepare_cross(std::span<const DataPoint> points,
                                   std::span<const int> domain_of_point, double d_min) {
  if (points.empty()) throw std::invalid_argument("cross objective: points must be non-empty");
  if (points.size() != domain_of_point.size())
    throw std::invalid_argument("cross objective: one domain index per point required");
  detail::PreparedData data = detail::prepare_points(points, domain_of_point);
  data.d_min = d_min;
  data.ln_dmin = std::log(d_min);
  return data;
}

}  // namespace

double cross_objective(const CrossReparamVector& v, std::span<const DataPoint> points,
                       std::span<const int> domain_of_point,
                       std::span<const DlcFeatures> features, KRepr repr, double d_min,
                       const FitConfig& cfg) {
  detail::PreparedData data = prepare_cross(points, domain_of_point, d_min);
  detail::LseSpec spec;
  spec.l3_terms = true;
  spec.cross_term = true;
  spec.k_repr = repr;
  auto x = pack_cross(v, repr);
  return detail::lse_objective(spec, data, features, cfg.delta, x, {});
}

CrossReparamVector cross_gradient(const CrossReparamVector& v, std::span<const DataPoint> points,
                                  std::span<const int> domain_of_point,
                                  std::span<const DlcFeatures> features, KRepr repr, double d_min,
                                  const FitConfig& cfg) {
  detail::PreparedData data = prepare_cross(points, domain_of_point, d_min);
  detail::LseSpec spec;
  spec.l3_terms = true;
  spec.cross_term = true;
  spec.k_repr = repr;
  auto x = pack_cross(v, repr);
  std::vector<double> grad(x.size(), 0.0);
  detail::lse_objective(spec, data, features, cfg.delta, x, grad);
  CrossReparamVector out;
  out.core = ReparamVector{grad[0], grad[1], grad[2], grad[3], grad[4],
                           grad[5], grad[6], grad[7], grad[8]};
  out.f = grad[9];
  out.mu = grad[10];
  switch (repr) {
    case KRepr::K1: out.w1 = grad[11]; break;
    case KRepr::K2: out.w2 = grad[11]; break;
    case KRepr::K3:
      out.w1 = grad[11];
      out.w2 = grad[12];
      break;
    case KRepr::K4:
      out.w1 = grad[11];
      out.w2 = grad[12];
      out.w3 = grad[13];
      break;
  }
  return out;
}

}  // namespace mixlaw
