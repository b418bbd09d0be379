// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixlaw/dlc_features.hpp"
#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"

namespace mixlaw {

struct FitConfig;
struct FitResult;
struct FitReport;

namespace detail {

/// Point data cached for the inner optimization loop. `domain` indexes into
/// the per-domain feature table and is empty for single-domain fits.
struct PreparedData {
  std::vector<double> r;        // raw ratio (log(r+eps) depends on eps)
  std::vector<double> ln_n, ln_d, ln_r, ln_loss;
  std::vector<std::uint8_t> has_r_term;  // r > 0
  std::vector<int> domain;
  double d_min = 0;
  double ln_dmin = 0;
};

PreparedData prepare_points(std::span<const DataPoint> points, std::span<const int> domain_idx);

/// Which LSE terms the objective carries.
struct LseSpec {
  bool l3_terms = true;    // false: Chinchilla three-term form
  bool cross_term = false; // adds f - mu*log K(weights, features)
  KRepr k_repr = KRepr::K3;

  int weight_count() const;
  int dim() const;  // coordinate count of the optimization vector
};

// Coordinate layout:
//   Chinchilla: [e, a, b, alpha, beta]
//   L3:         [e, a, b, c1, alpha, beta, g, eta1, eps]
//   Cross:      L3 layout followed by [f, mu, w1 .. wk]
inline constexpr int kEpsCoord = 8;

/// Mean Huber objective; fills grad when non-empty. Returns +inf outside the
/// admissible region (K <= 0 at some domain, runaway exponents).
double lse_objective(const LseSpec& spec, const PreparedData& data,
                     std::span<const DlcFeatures> features, double delta,
                     std::span<const double> x, std::span<double> grad);

/// K(weights, features) without the public-op validation; NaN-safe inputs are
/// the caller's responsibility.
double k_from_weights(KRepr repr, double w1, double w2, double w3, const DlcFeatures& f);

/// Shared multi-start driver for fit() and fit_cross_domain().
FitResult run_multistart(const LseSpec& spec, const PreparedData& data,
                         std::span<const DlcFeatures> features,
                         std::span<const DataPoint> fit_points, const FitConfig& cfg,
                         FitReport* report, std::vector<double>* best_x_out);

}  // namespace detail
}  // namespace mixlaw
