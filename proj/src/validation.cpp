// SPDX-License-Identifier: Apache-2.0

#include "mixlaw/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mixlaw/errors.hpp"

namespace mixlaw {

namespace {

using nlohmann::json;

std::string fmt_value(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

void finalize(CvReport& report) {
  double huber_sum = 0.0, r2_sum = 0.0;
  for (const CvSplit& s : report.splits) {
    huber_sum += s.huber;
    r2_sum += s.r2;
  }
  const double count = static_cast<double>(report.splits.size());
  report.mean_huber = huber_sum / count;
  report.mean_r2 = r2_sum / count;
}

std::vector<double> sorted_distinct(std::span<const DataPoint> points, double DataPoint::*field) {
  std::set<double> values;
  for (const DataPoint& p : points) values.insert(p.*field);
  return {values.begin(), values.end()};
}

}  // namespace

std::string to_json(const CvReport& report, const std::string& protocol) {
  json doc;
  doc["protocol"] = protocol;
  doc["splits"] = json::array();
  for (const CvSplit& s : report.splits) {
    json row;
    row["fit"] = s.fit_desc;
    row["held_out"] = s.held_out_desc;
    row["huber"] = s.huber;
    row["r2"] = s.r2;
    doc["splits"].push_back(row);
  }
  doc["mean_huber"] = report.mean_huber;
  doc["mean_r2"] = report.mean_r2;
  return doc.dump(2) + "\n";
}

std::string to_csv(const CvReport& report) {
  std::ostringstream out;
  out << "split,fit,held_out,huber,r2\n";
  char buf[40];
  for (std::size_t i = 0; i < report.splits.size(); ++i) {
    const CvSplit& s = report.splits[i];
    out << i << ",\"" << s.fit_desc << "\",\"" << s.held_out_desc << "\",";
    std::snprintf(buf, sizeof(buf), "%.17g,", s.huber);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.17g", s.r2);
    out << buf << "\n";
  }
  return out.str();
}

CvReport kfold_model_size(std::span<const DataPoint> points, LawId law, const FitConfig& cfg) {
  const std::vector<double> sizes = sorted_distinct(points, &DataPoint::n);
  if (sizes.size() < 2)
    throw std::invalid_argument("kfold_model_size: need >= 2 distinct model sizes");
  CvReport report;
  for (double held : sizes) {
    std::vector<DataPoint> fit_set, test_set;
    for (const DataPoint& p : points) (p.n == held ? test_set : fit_set).push_back(p);
    FitResult fitted = fit(law, fit_set, cfg);
    CvSplit split;
    split.fit_desc = "n!=" + fmt_value(held);
    split.held_out_desc = "n=" + fmt_value(held);
    const FitMetrics m = metrics(fitted.params, test_set, cfg.delta);
    split.huber = m.huber;
    split.r2 = m.r2;
    report.splits.push_back(std::move(split));
  }
  finalize(report);
  return report;
}

CvReport kfold_dataset_size(std::span<const DataPoint> points, LawId law, const FitConfig& cfg) {
  const std::vector<double> d_values = sorted_distinct(points, &DataPoint::d);
  if (d_values.size() < 3)
    throw std::invalid_argument("kfold_dataset_size: need >= 3 distinct d values");
  // Three contiguous segments over the sorted distinct d values; earlier
  // segments take the remainder.
  const std::size_t m = d_values.size();
  std::size_t sizes[3];
  for (int s = 0; s < 3; ++s) sizes[s] = m / 3 + (static_cast<std::size_t>(s) < m % 3 ? 1 : 0);
  std::vector<int> segment_of(m);
  {
    std::size_t at = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t i = 0; i < sizes[s]; ++i) segment_of[at++] = s;
  }
  auto segment_of_d = [&](double d) {
    const auto it = std::lower_bound(d_values.begin(), d_values.end(), d);
    return segment_of[static_cast<std::size_t>(it - d_values.begin())];
  };
  CvReport report;
  for (int held = 0; held < 3; ++held) {
    std::vector<DataPoint> fit_set, test_set;
    for (const DataPoint& p : points)
      (segment_of_d(p.d) == held ? test_set : fit_set).push_back(p);
    FitResult fitted = fit(law, fit_set, cfg);
    CvSplit split;
    split.fit_desc = "d segments != " + std::to_string(held);
    split.held_out_desc = "d segment " + std::to_string(held) + " (" +
                          std::to_string(sizes[held]) + " d values, " +
                          std::to_string(test_set.size()) + " points)";
    const FitMetrics m2 = metrics(fitted.params, test_set, cfg.delta);
    split.huber = m2.huber;
    split.r2 = m2.r2;
    report.splits.push_back(std::move(split));
  }
  finalize(report);
  return report;
}

CvReport kfold_mixture_ratio(std::span<const DataPoint> points, LawId law, const FitConfig& cfg) {
  const std::vector<double> ratios = sorted_distinct(points, &DataPoint::r);
  if (ratios.size() < 3)
    throw std::invalid_argument("kfold_mixture_ratio: need >= 3 distinct ratio groups");
  CvReport report;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    for (std::size_t j = i + 1; j < ratios.size(); ++j) {
      std::vector<DataPoint> fit_set, test_set;
      for (const DataPoint& p : points)
        (p.r == ratios[i] || p.r == ratios[j] ? test_set : fit_set).push_back(p);
      FitResult fitted = fit(law, fit_set, cfg);
      CvSplit split;
      split.held_out_desc = "r={" + fmt_value(ratios[i]) + "," + fmt_value(ratios[j]) + "}";
      split.fit_desc = "r not in held-out pair";
      const FitMetrics m = metrics(fitted.params, test_set, cfg.delta);
      split.huber = m.huber;
      split.r2 = m.r2;
      report.splits.push_back(std::move(split));
    }
  }
  finalize(report);
  return report;
}

CvReport domain_holdout(const std::map<std::string, DomainData>& domains, KRepr repr,
                        const FitConfig& cfg) {
  if (domains.size() < 3)
    throw std::invalid_argument("domain_holdout: need >= 3 domains");
  std::vector<std::string> names;
  for (const auto& [name, data] : domains) names.push_back(name);
  CvReport report;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      std::map<std::string, DomainData> fit_side, test_side;
      for (const auto& [name, data] : domains) {
        if (name == names[i] || name == names[j]) test_side[name] = data;
        else fit_side[name] = data;
      }
      auto [cross, fitted] = detail::fit_cross_domain_internal(fit_side, repr, cfg);
      const FitMetrics m = cross_metrics(cross, test_side, cfg.delta);
      CvSplit split;
      split.fit_desc = "domains minus {" + names[i] + "," + names[j] + "}";
      split.held_out_desc = "{" + names[i] + "," + names[j] + "}";
      split.huber = m.huber;
      split.r2 = m.r2;
      report.splits.push_back(std::move(split));
    }
  }
  finalize(report);
  return report;
}

const char* to_string(ScheduleTag tag) {
  switch (tag) {
    case ScheduleTag::M1: return "M1";
    case ScheduleTag::M2: return "M2";
    case ScheduleTag::M3: return "M3";
    case ScheduleTag::M4: return "M4";
  }
  return "M?";
}

ScheduleTag schedule_from_string(const std::string& name) {
  if (name == "M1") return ScheduleTag::M1;
  if (name == "M2") return ScheduleTag::M2;
  if (name == "M3") return ScheduleTag::M3;
  if (name == "M4") return ScheduleTag::M4;
  throw std::invalid_argument("unknown sampling schedule: " + name);
}

LossCurve apply_schedule(const LossCurve& curve, const SamplingSchedule& schedule) {
  validate(curve);
  if (!(schedule.lambda > 0.0))
    throw std::invalid_argument("SamplingSchedule: lambda must be > 0");
  if (schedule.target_count < 2)
    throw std::invalid_argument("SamplingSchedule: target_count must be >= 2");

  LossCurve out;
  out.domain_name = curve.domain_name;
  out.n = curve.n;
  out.r_domain = curve.r_domain;

  // Split off the step-0 sample; it is always retained.
  std::vector<CurveSample> evals;
  for (const CurveSample& s : curve.samples) {
    if (s.step == 0) out.samples.push_back(s);
    else evals.push_back(s);
  }
  const long n = static_cast<long>(evals.size());
  if (n == 0) return out;
  const std::int64_t base = evals.front().step;
  if (base <= 0) throw std::invalid_argument("apply_schedule: first evaluation step must be > 0");
  for (long i = 0; i < n; ++i)
    if (evals[i].step != base * (i + 1))
      throw std::invalid_argument("apply_schedule: samples must sit on a uniform step interval");

  // 1-based index i corresponds to step i*base.
  std::vector<long> keep;
  switch (schedule.tag) {
    case ScheduleTag::M1:
      for (long i = 1; i <= n; ++i) keep.push_back(i);
      break;
    case ScheduleTag::M2:
      for (long i = 5; i <= n; i += 5) keep.push_back(i);
      break;
    case ScheduleTag::M3: {
      const long cutoff = static_cast<long>(std::floor(0.6 * static_cast<double>(n)));
      for (long i = 4; i <= cutoff; i += 4) keep.push_back(i);
      for (long i = 8; i <= n; i += 8)
        if (i > cutoff) keep.push_back(i);
      break;
    }
    case ScheduleTag::M4: {
      // Inverse-CDF quantiles of the density lambda*exp(-lambda*x) truncated
      // to [0, n], snapped to the nearest index and deduplicated.
      const double mass = -std::expm1(-schedule.lambda * static_cast<double>(n));
      for (int k = 0; k < schedule.target_count; ++k) {
        const double q = (static_cast<double>(k) + 0.5) / schedule.target_count;
        const double x = -std::log1p(-q * mass) / schedule.lambda;
        long idx = std::llround(x);
        idx = std::clamp(idx, 1L, n);
        if (keep.empty() || keep.back() != idx) keep.push_back(idx);
      }
      break;
    }
  }
  for (long i : keep) out.samples.push_back(evals[i - 1]);
  return out;
}

}  // namespace mixlaw
