// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mixlaw/dlc_features.hpp"
#include "mixlaw/fitter.hpp"
#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"

namespace mixlaw {

/// One of the four K forms with its fitted weights.
struct KRepresentation {
  KRepr repr = KRepr::K3;
  double w1 = 0, w2 = 0;
  std::optional<double> w3;  // K4 only
};

/// Reads the curve's first 12 evaluation points (steps 0, 1000, ..., 11000):
///   k1 = L(1000), k2 = L(0) - L(5000),
///   k3 = (1/10) * sum_{i=0}^{9} (dL_{i+1} - dL_i),  dL_i = L((i+1)k) - L(ik).
/// Throws InsufficientDataError when a required step is missing.
DlcFeatures extract_features(const LossCurve& curve, CorpusSide side);

/// K1 = w1/k1, K2 = w2*k2, K3 = w1/k1 + w2*k2, K4 = K3 + w3/k3.
/// Requires k1 > 0; K4 with |k3| < 1e-12 raises a domain error.
double k_value(const KRepresentation& repr, const DlcFeatures& features);

struct DomainData {
  std::vector<DataPoint> points;
  DlcFeatures features;
};

/// Joint multi-start fit of the cross-domain law over >= 2 domains: the L3
/// reparameterization plus f = log F, mu (raw, > 0 by rejection) and the K
/// weights. Candidates whose K is not positive at every domain are rejected.
/// The result's metrics pool residuals over all fitted domains via per-domain
/// derived laws.
std::pair<CrossDomainParams, FitResult> fit_cross_domain(
    const std::map<std::string, DomainData>& domains, KRepr repr, const FitConfig& cfg = {});

/// Pooled (huber, r2) of a cross-domain law over per-domain point sets,
/// scoring each domain through derive_domain_law at its own K.
FitMetrics cross_metrics(const CrossDomainParams& cross,
                         const std::map<std::string, DomainData>& domains, double delta = 1e-3);

/// The cross-domain optimization vector: the L3 core plus the extension
/// coordinates (F = exp(f); mu and the weights raw).
struct CrossReparamVector {
  ReparamVector core;
  double f = 0;
  double mu = 0;
  double w1 = 0, w2 = 0;
  std::optional<double> w3;
};

/// Objective/gradient of the extended LSE form, for the derivative contract
/// tests. domain_of_point[i] indexes into features.
double cross_objective(const CrossReparamVector& v, std::span<const DataPoint> points,
                       std::span<const int> domain_of_point,
                       std::span<const DlcFeatures> features, KRepr repr, double d_min,
                       const FitConfig& cfg);

CrossReparamVector cross_gradient(const CrossReparamVector& v, std::span<const DataPoint> points,
                                  std::span<const int> domain_of_point,
                                  std::span<const DlcFeatures> features, KRepr repr, double d_min,
                                  const FitConfig& cfg);

namespace detail {
/// Cross-domain fit that tolerates a single fitting domain (the domain
/// holdout protocol with three domains fits on one); the public
/// fit_cross_domain enforces >= 2.
std::pair<CrossDomainParams, FitResult> fit_cross_domain_internal(
    const std::map<std::string, DomainData>& domains, KRepr repr, const FitConfig& cfg);
}  // namespace detail

}  // namespace mixlaw
