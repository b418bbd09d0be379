// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlaw/laws.hpp"
#include "mixlaw/model.hpp"

namespace mixlaw {

enum class LawId { Chinchilla, OpenAi, L1, L2, L3, L4, L5, CrossDomain };

const char* to_string(LawId id);
LawId law_id_from_string(const std::string& name);

/// Starting values for the multi-start search, one list per fitted symbol.
/// a, b, c, e are log-space coefficients; alpha, beta, eta1 are raw; gamma
/// values are mapped to log-space starts (log v for v > 0, log 0.5
/// otherwise); epsilon values are clamped into [1e-4, 1]. Lists are
/// deduplicated after those transforms. f, mu and w seed the cross-domain
/// extension.
struct InitGrid {
  std::vector<double> e, a, b, c, alpha, beta, gamma, eta1, epsilon;
  std::vector<double> f, mu, w;
};

InitGrid default_init_grid();

struct FitConfig {
  double delta = 1e-3;                       // Huber transition width
  InitGrid init_grid = default_init_grid();
  int max_iterations = 1000;                 // per L-BFGS start
  double gradient_tolerance = 1e-8;
  double r_floor = 0.1;                      // points with r below are not fitted
  std::optional<long> max_grid_candidates = 2000;  // deterministic subsample cap
  int jobs = 0;                              // 0 = hardware concurrency
};

/// Log-space reparameterization of the L3 law. Decoding always satisfies
/// C > C0, eta > 1, gamma > 0, epsilon in [1e-4, 1]:
///   E = exp(e), A = exp(a), B = exp(b), gamma = exp(g), eta = 1 + exp(eta1),
///   epsilon = clamp(eps_raw), C = C0(decoded, d_min) + exp(c1).
struct ReparamVector {
  double e = 0, a = 0, b = 0, c1 = 0;
  double alpha = 0, beta = 0;
  double g = 0;
  double eta1 = 0;
  double eps_raw = 0;
};

DcptParams decode(const ReparamVector& v, double d_min);

/// Quadratic within |residual| <= delta, linear beyond.
double huber(double residual, double delta);

/// Mean Huber of (LSE-form model log-loss minus log observed loss) over the
/// points. Points with r = 0 contribute with the ratio term dropped.
double objective(const ReparamVector& v, std::span<const DataPoint> points, double d_min,
                 const FitConfig& cfg);

/// Gradient of `objective` in the ReparamVector coordinates. Matches central
/// finite differences to better than 1e-5 relative away from the epsilon
/// clamp boundary.
ReparamVector gradient(const ReparamVector& v, std::span<const DataPoint> points, double d_min,
                       const FitConfig& cfg);

struct FitMetrics {
  double huber = 0;  // mean Huber of log-space residuals
  double r2 = 0;     // on raw losses, about the mean observed loss
};

struct FitResult {
  LawParams params;
  double objective = 0;  // mean Huber at the winning minimum
  int init_index = 0;    // which executed start won
  long grid_index = 0;   // position of that start in the full grid
  long grid_total = 0;
  int iterations = 0;
  bool converged = false;
  std::optional<ConstraintReport> constraints;  // present for L3-shaped fits
  FitMetrics metrics;
  double d_min = 0;
  long points_used = 0;
};

/// Per-start outcomes for the verbose fit report.
struct FitReport {
  std::vector<long> grid_indices;
  std::vector<double> objectives;  // +inf where a start failed
  std::vector<bool> admissible;    // decoded alpha > 0 and beta > 0
};

/// Multi-start constrained L-BFGS fit. Supported law ids: L3 and Chinchilla
/// (the cross-domain extension is fitted via dlc::fit_cross_domain). Points
/// with r below cfg.r_floor are excluded before fitting; d_min is the minimum
/// d of the points actually fitted.
FitResult fit(LawId law, std::span<const DataPoint> points, const FitConfig& cfg = {},
              FitReport* report = nullptr);

/// (mean log-space Huber, raw-loss R^2) of a saved law on a point set.
/// Cross-domain params are rejected; derive a per-domain law first.
FitMetrics metrics(const LawParams& params, std::span<const DataPoint> points,
                   double delta = 1e-3);

}  // namespace mixlaw
