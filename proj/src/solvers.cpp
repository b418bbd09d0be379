// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/solvers.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "mixlaw/errors.hpp"

namespace mixlaw {

namespace {

using nlohmann::json;

constexpr double kRatioTolerance = 1e-6;

const DcptParams& require_l3(const DcptParams& p, const char* who) {
  if (p.variant != DcptVariant::L3)
    throw std::invalid_argument(std::string(who) + ": law must be an L3 record");
  validate(p);
  return p;
}

}  // namespace

bool general_loss_within_threshold(double lg, double lg0, double t) {
  return (lg - lg0) / lg0 < t;
}

TradeoffResult tradeoff_optimal_ratio(const TradeoffRequest& req) {
  require_l3(req.general_law, "tradeoff_optimal_ratio");
  require_l3(req.domain_law, "tradeoff_optimal_ratio");
  if (!(req.n0 > 0.0) || !(req.d0 > 0.0))
    throw std::invalid_argument("tradeoff_optimal_ratio: n0 and d0 must be > 0");
  if (!(req.lg0 > 0.0)) throw std::invalid_argument("tradeoff_optimal_ratio: lg0 must be > 0");
  if (!(req.t > 0.0)) throw std::invalid_argument("tradeoff_optimal_ratio: t must be > 0");

  auto lg_at = [&](double r_d) { return evaluate(req.general_law, req.n0, req.d0, 1.0 - r_d); };
  auto feasible = [&](double r_d) {
    return general_loss_within_threshold(lg_at(r_d), req.lg0, req.t);
  };

  if (!feasible(0.0))
    throw InfeasibleError("tradeoff_optimal_ratio: threshold already violated at r_d = 0");

  double r_star;
  if (feasible(1.0)) {
    r_star = 1.0;
  } else {
    // Invariant: lo feasible, hi infeasible. L_g increases with r_d for
    // constraint-satisfying laws, so the boundary is unique.
    double lo = 0.0, hi = 1.0;
    while (hi - lo > kRatioTolerance) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid)) lo = mid;
      else hi = mid;
    }
    r_star = lo;
  }

  TradeoffResult out;
  out.r_d_star = r_star;
  out.predicted_lg = lg_at(r_star);
  out.predicted_ld = evaluate(req.domain_law, req.n0, req.d0, r_star);
  return out;
}

double limited_data_loss(const LimitedDataRequest& req, double r_d) {
  const DcptParams& p = require_l3(req.domain_law, "limited_data_loss");
  const double r_eta_beta = r_d == 0.0 ? 0.0 : std::pow(r_d, *p.eta + p.beta);
  return p.E + p.A / std::pow(req.n0, p.alpha) + p.B * r_eta_beta / std::pow(req.dd0, p.beta) +
         *p.C / std::pow(r_d + *p.epsilon, *p.gamma);
}

double limited_data_derivative(const LimitedDataRequest& req, double r_d) {
  const DcptParams& p = require_l3(req.domain_law, "limited_data_derivative");
  const double exponent = *p.eta + p.beta - 1.0;
  const double r_term = r_d == 0.0 ? 0.0 : std::pow(r_d, exponent);
  return p.B * (*p.eta + p.beta) * r_term / std::pow(req.dd0, p.beta) -
         *p.gamma * *p.C / std::pow(r_d + *p.epsilon, *p.gamma + 1.0);
}

LimitedDataResult limited_data_optimal_ratio(const LimitedDataRequest& req) {
  const DcptParams& p = require_l3(req.domain_law, "limited_data_optimal_ratio");
  if (!(req.n0 > 0.0) || !(req.dd0 > 0.0))
    throw std::invalid_argument("limited_data_optimal_ratio: n0 and dd0 must be > 0");
  if (!(*p.eta > 1.0))
    throw std::invalid_argument(
        "limited_data_optimal_ratio: requires eta > 1 (strictly increasing derivative)");
  if (!(*p.gamma > 0.0) || !(*p.C > 0.0) || !(p.B > 0.0))
    throw std::invalid_argument("limited_data_optimal_ratio: requires B, C, gamma > 0");

  LimitedDataResult out;
  if (limited_data_derivative(req, 1.0) <= 0.0) {
    // Feasibility bound dd0 < (B(eta+beta)(1+eps)^(gamma+1)/(gamma C))^(1/beta)
    // fails: the loss is still decreasing at r_d = 1.
    out.boundary = true;
    out.r_d_star = 1.0;
    out.predicted_ld = limited_data_loss(req, 1.0);
    return out;
  }
  double lo = 0.0, hi = 1.0;  // derivative negative at 0+, positive at 1
  while (hi - lo > kRatioTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (limited_data_derivative(req, mid) < 0.0) lo = mid;
    else hi = mid;
  }
  out.r_d_star = 0.5 * (lo + hi);
  out.predicted_ld = limited_data_loss(req, out.r_d_star);
  return out;
}

AllocationResult allocate(const ChinchillaParams& params, double budget_flops) {
  if (!(params.alpha > 0.0) || !(params.beta > 0.0) || !(params.A > 0.0) || !(params.B > 0.0))
    throw std::invalid_argument("allocate: requires alpha, beta, A, B > 0");
  if (!(budget_flops > 0.0)) throw std::invalid_argument("allocate: budget must be > 0");
  AllocationResult out;
  const double denom = params.alpha + params.beta;
  out.a_exp = params.beta / denom;
  out.b_exp = params.alpha / denom;
  out.g_const = std::pow(params.alpha * params.A / (params.beta * params.B), 1.0 / denom);
  const double c_b2 = budget_flops / 6e18;  // N*D in (B-params x B-tokens) units
  out.n_opt = out.g_const * std::pow(c_b2, out.a_exp);
  out.d_opt = std::pow(c_b2, out.b_exp) / out.g_const;
  return out;
}

std::string to_json(const TradeoffResult& result) {
  json doc;
  doc["r_d_star"] = result.r_d_star;
  doc["predicted_lg"] = result.predicted_lg;
  doc["predicted_ld"] = result.predicted_ld;
  return doc.dump(2) + "\n";
}

std::string to_json(const LimitedDataResult& result) {
  json doc;
  doc["r_d_star"] = result.r_d_star;
  doc["predicted_ld"] = result.predicted_ld;
  doc["boundary"] = result.boundary;
  return doc.dump(2) + "\n";
}

std::string to_json(const AllocationResult& result) {
  json doc;
  doc["n_opt"] = result.n_opt;
  doc["d_opt"] = result.d_opt;
  doc["g_const"] = result.g_const;
  doc["a_exp"] = result.a_exp;
  doc["b_exp"] = result.b_exp;
  return doc.dump(2) + "\n";
}

}  // namespace mixlaw
