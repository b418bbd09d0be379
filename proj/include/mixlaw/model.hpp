// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mixlaw {

/// Which validation corpus a ratio/loss pair refers to. The two sides are
/// complementary: the domain side sees r = r_domain, the general side sees
/// r = 1 - r_domain, and each side has its own loss column.
enum class CorpusSide { General, Domain };

const char* to_string(CorpusSide side);

/// Conversion constants shared by ingestion and fitting.
/// tokens_per_step defaults to 64 * 2048 * 1e-9 B-tokens per training step.
struct TrainConfig {
  double tokens_per_step = 64.0 * 2048.0 * 1e-9;
};

/// One fitting observation: model size n (B-params), tokens d (B-tokens),
/// target-corpus mixture ratio r in [0,1], validation loss in nats.
struct DataPoint {
  double n = 0;
  double d = 0;
  double r = 0;
  double loss = 0;
};

/// Throws std::invalid_argument unless n>0, d>0, 0<=r<=1, loss>0, all finite.
void validate(const DataPoint& point);

struct CurveSample {
  std::int64_t step = 0;
  double loss_general = 0;
  double loss_domain = 0;
};

/// One training run's evaluation series. Samples are ordered by strictly
/// increasing step; a step-0 sample is allowed (feature extraction needs it)
/// but never becomes a fitting point.
struct LossCurve {
  std::string domain_name;
  double n = 0;
  double r_domain = 0;
  std::vector<CurveSample> samples;
};

void validate(const LossCurve& curve);

/// steps * tokens_per_step, in B-tokens. steps must be >= 0.
double tokens_from_steps(std::int64_t steps, const TrainConfig& cfg = {});

/// Compute budget 6 * N * D in absolute FLOPs, with n, d in billions.
double flops(double n_bparams, double d_btokens);

/// Expands a curve into fitting observations for one corpus side, dropping
/// step-0 samples (they would violate the d>0 invariant).
std::vector<DataPoint> curve_to_points(const LossCurve& curve, CorpusSide side,
                                       const TrainConfig& cfg = {});

/// curve_to_points over a whole curve set, concatenated.
std::vector<DataPoint> curves_to_points(std::span<const LossCurve> curves, CorpusSide side,
                                        const TrainConfig& cfg = {});

}  // namespace mixlaw
