// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mixlaw/laws.hpp"

namespace mixlaw {

/// Largest domain ratio keeping the general-loss degradation under t.
struct TradeoffRequest {
  DcptParams general_law;  // L3, evaluated at r = 1 - r_d
  DcptParams domain_law;   // L3, evaluated at r = r_d
  double n0 = 0;           // B-params
  double d0 = 0;           // B-tokens
  double lg0 = 0;          // general loss before continual training, nats
  double t = 0;            // relative degradation threshold, > 0
};

struct TradeoffResult {
  double r_d_star = 0;
  double predicted_lg = 0;
  double predicted_ld = 0;
};

/// The threshold predicate: (lg - lg0) / lg0 < t, strictly.
bool general_loss_within_threshold(double lg, double lg0, double t);

/// Bisection on the monotone constraint boundary to |dr| < 1e-6; returns
/// exactly 1 when the constraint holds there, and raises InfeasibleError when
/// it already fails at r_d = 0. The returned ratio always satisfies the
/// constraint.
TradeoffResult tradeoff_optimal_ratio(const TradeoffRequest& req);

/// Minimize domain loss when domain tokens are capped: d = dd0 / r_d.
struct LimitedDataRequest {
  DcptParams domain_law;  // L3
  double n0 = 0;
  double dd0 = 0;  // fixed domain-corpus tokens, B-tokens
};

struct LimitedDataResult {
  double r_d_star = 0;
  double predicted_ld = 0;
  bool boundary = false;  // derivative never crosses zero; r_d = 1 is best
};

/// Domain loss along the constraint: E + A/n0^alpha + B r^(eta+beta)/dd0^beta
/// + C/(r+eps)^gamma.
double limited_data_loss(const LimitedDataRequest& req, double r_d);

/// Its derivative in r_d (strictly increasing when eta > 1).
double limited_data_derivative(const LimitedDataRequest& req, double r_d);

/// Bisection on the strictly increasing derivative to |dr| < 1e-6. When the
/// derivative at r_d = 1 is still <= 0 the interior minimum does not exist
/// and the flagged boundary result r_d = 1 is returned.
LimitedDataResult limited_data_optimal_ratio(const LimitedDataRequest& req);

/// Compute-optimal split of a FLOPs budget, closed form:
///   a = beta/(alpha+beta), b = alpha/(alpha+beta),
///   G = (alpha*A / (beta*B))^(1/(alpha+beta)),
///   N_opt = G * (C/6e18)^a, D_opt = (C/6e18)^b / G   (B-params / B-tokens).
struct AllocationResult {
  double n_opt = 0;
  double d_opt = 0;
  double g_const = 0;
  double a_exp = 0;
  double b_exp = 0;
};

AllocationResult allocate(const ChinchillaParams& params, double budget_flops);

std::string to_json(const TradeoffResult& result);
std::string to_json(const LimitedDataResult& result);
std::string to_json(const AllocationResult& result);

}  // namespace mixlaw
