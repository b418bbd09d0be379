// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mixlaw {

const char* to_string(CorpusSide side) {
  return side == CorpusSide::General ? "general" : "domain";
}

void validate(const DataPoint& point) {
  if (!std::isfinite(point.n) || point.n <= 0.0)
    throw std::invalid_argument("DataPoint: n must be > 0");
  if (!std::isfinite(point.d) || point.d <= 0.0)
    throw std::invalid_argument("DataPoint: d must be > 0");
  if (!std::isfinite(point.r) || point.r < 0.0 || point.r > 1.0)
    throw std::invalid_argument("DataPoint: r must be in [0, 1]");
  if (!std::isfinite(point.loss) || point.loss <= 0.0)
    throw std::invalid_argument("DataPoint: loss must be > 0");
}

void validate(const LossCurve& curve) {
  if (!std::isfinite(curve.n) || curve.n <= 0.0)
    throw std::invalid_argument("LossCurve: n must be > 0");
  if (!std::isfinite(curve.r_domain) || curve.r_domain < 0.0 || curve.r_domain > 1.0)
    throw std::invalid_argument("LossCurve: r_domain must be in [0, 1]");
  std::int64_t prev_step = -1;
  for (const CurveSample& s : curve.samples) {
    if (s.step <= prev_step)
      throw std::invalid_argument("LossCurve: steps must be strictly increasing");
    if (!(s.loss_general > 0.0) || !(s.loss_domain > 0.0))
      throw std::invalid_argument("LossCurve: losses must be > 0");
    prev_step = s.step;
  }
}

double tokens_from_steps(std::int64_t steps, const TrainConfig& cfg) {
  if (steps < 0) throw std::invalid_argument("tokens_from_steps: steps must be >= 0");
  if (!(cfg.tokens_per_step > 0.0))
    throw std::invalid_argument("TrainConfig: tokens_per_step must be > 0");
  return static_cast<double>(steps) * cfg.tokens_per_step;
}

double flops(double n_bparams, double d_btokens) {
  if (!(n_bparams > 0.0) || !(d_btokens > 0.0))
    throw std::invalid_argument("flops: n and d must be > 0");
  return 6.0 * (n_bparams * 1e9) * (d_btokens * 1e9);
}

std::vector<DataPoint> curve_to_points(const LossCurve& curve, CorpusSide side,
                                       const TrainConfig& cfg) {
  validate(curve);
  std::vector<DataPoint> points;
  points.reserve(curve.samples.size());
  const double r = side == CorpusSide::Domain ? curve.r_domain : 1.0 - curve.r_domain;
  for (const CurveSample& s : curve.samples) {
    if (s.step <= 0) continue;
    const double loss = side == CorpusSide::Domain ? s.loss_domain : s.loss_general;
    points.push_back(DataPoint{curve.n, tokens_from_steps(s.step, cfg), r, loss});
  }
  return points;
}

std::vector<DataPoint> curves_to_points(std::span<const LossCurve> curves, CorpusSide side,
                                        const TrainConfig& cfg) {
  std::vector<DataPoint> points;
  for (const LossCurve& curve : curves) {
    auto part = curve_to_points(curve, side, cfg);
    points.insert(points.end(), part.begin(), part.end());
  }
  return points;
}

}  // namespace mixlaw
