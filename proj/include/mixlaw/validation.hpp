// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mixlaw/dlc.hpp"
#include "mixlaw/fitter.hpp"
#include "mixlaw/model.hpp"

namespace mixlaw {

struct CvSplit {
  std::string fit_desc;
  std::string held_out_desc;
  double huber = 0;
  double r2 = 0;
};

struct CvReport {
  std::vector<CvSplit> splits;
  double mean_huber = 0;
  double mean_r2 = 0;
};

std::string to_json(const CvReport& report, const std::string& protocol);
std::string to_csv(const CvReport& report);

/// Leave-one-out over model-size groups: one split per distinct n, fitted on
/// the other groups and scored on the held-out one. Needs >= 2 groups.
CvReport kfold_model_size(std::span<const DataPoint> points, LawId law, const FitConfig& cfg = {});

/// Three contiguous segments by d (sorted distinct values, near-equal group
/// counts): each split fits on two segments and scores the third. Needs >= 3
/// distinct d values.
CvReport kfold_dataset_size(std::span<const DataPoint> points, LawId law,
                            const FitConfig& cfg = {});

/// All C(m, 2) held-out pairs of ratio groups; fit on the remaining m-2
/// groups. Nine groups give the protocol's 36 splits. Needs >= 3 groups.
CvReport kfold_mixture_ratio(std::span<const DataPoint> points, LawId law,
                             const FitConfig& cfg = {});

/// All C(m, 2) held-out domain pairs; a cross-domain law is fitted on the
/// rest and each held-out domain is scored through derive_domain_law with its
/// own features. Needs >= 3 domains.
CvReport domain_holdout(const std::map<std::string, DomainData>& domains, KRepr repr,
                        const FitConfig& cfg = {});

enum class ScheduleTag { M1, M2, M3, M4 };

const char* to_string(ScheduleTag tag);
ScheduleTag schedule_from_string(const std::string& name);

/// M1 keeps every base-interval sample; M2 every 5th; M3 every 4th in the
/// first 60% of the index range then every 8th; M4 snaps the target_count
/// inverse-CDF quantiles of the truncated exponential density exp(-lambda*x)
/// to sample indices. A step-0 sample is always retained.
struct SamplingSchedule {
  ScheduleTag tag = ScheduleTag::M1;
  double lambda = 0.02;    // M4 decay rate
  int target_count = 45;   // M4 sample count
};

/// Thins a curve whose evaluation samples sit on a uniform step interval.
/// The output is a subsequence of the input.
LossCurve apply_schedule(const LossCurve& curve, const SamplingSchedule& schedule);

}  // namespace mixlaw
